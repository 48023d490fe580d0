"""Log-log rate fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput


@dataclass(frozen=True)
class RateFit:
    """OLS fit of ``log(error) = intercept + slope * log(x)``."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
        }


def fit_loglog_slope(points) -> RateFit:
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise InvalidInput("need at least 3 points for a rate fit")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x + y)):
        raise InvalidInput("rate fit needs finite positive coordinates")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise InvalidInput("rate fit needs at least two distinct x values")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    # a constant response is fitted exactly
    r2 = 1.0 if ss_tot <= 1e-24 * max(1.0, float(np.sum(ly**2))) else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), tuple(pts))
