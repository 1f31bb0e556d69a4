import numpy as np
from scipy import stats


def power_law_fit(t, values) -> tuple[float, float]:
    """OLS slope (and its standard error) of log(values) against log(1+t)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("power-law fit needs strictly positive values")
    x = np.log1p(t)
    y = np.log(v)
    if np.ptp(y) == 0.0:
        return 0.0, 0.0
    res = stats.linregress(x, y)
    return float(res.slope), float(res.stderr)
