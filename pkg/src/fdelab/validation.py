"""Small input checks shared by the estimator wrappers."""
import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_field(u, size=None, name="field"):
    """1D float array, finite and strictly positive."""
    u = check_array(np.asarray(u, dtype=float).reshape(-1, 1), ensure_all_finite=True,
                    ensure_min_samples=1).ravel()
    if size is not None and u.size != size:
        raise ValueError(f"{name} has {u.size} values, expected {size}")
    if np.any(u <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return u


def check_radii(r):
    r = check_array(r, ensure_2d=False, ensure_all_finite=True)
    if r.ndim == 2:
        if r.shape[1] != 1:
            raise ValueError("expected one feature (the distance to the point)")
        r = r[:, 0]
    if np.any(r <= 0):
        raise ValueError("distances must be positive")
    return r
