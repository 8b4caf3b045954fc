"""Classical single-pass imputation baselines.

Each function returns a new, fully valid profile; valid heights are
carried over bitwise.  These are the reference methods GP imputation
is measured against.
"""

from __future__ import annotations

import numpy as np

from .errors import CoverageError, EmptyDatasetError, PartialFillError
from .profile import Profile


def _check(profile: Profile) -> np.ndarray:
    idx = np.flatnonzero(~profile.valid)
    if profile.n_valid == 0:
        raise EmptyDatasetError("no valid points to impute from")
    return idx


def impute_constant(profile: Profile, statistic: str = "mean") -> Profile:
    """Fill every missing height with the mean or median of the valid ones."""
    idx = _check(profile)
    zv = profile.valid_z()
    if statistic == "mean":
        value = float(np.mean(zv))
    elif statistic == "median":
        value = float(np.median(zv))
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    return profile.with_filled(np.full(len(idx), value))


def impute_nn_mean(profile: Profile) -> Profile:
    """Mean of the nearest valid neighbor on each side (one-sided at the
    ends); contiguous gaps become plateaus."""
    idx = _check(profile)
    valid_idx = np.flatnonzero(profile.valid)
    z = profile.z
    fills = np.empty(len(idx))
    for k, i in enumerate(idx):
        pos = np.searchsorted(valid_idx, i)
        left = valid_idx[pos - 1] if pos > 0 else None
        right = valid_idx[pos] if pos < len(valid_idx) else None
        if left is None:
            fills[k] = z[right]
        elif right is None:
            fills[k] = z[left]
        else:
            fills[k] = 0.5 * (z[left] + z[right])
    return profile.with_filled(fills)


def impute_median_filter(profile: Profile, window: int = 5,
                         max_passes: int = 1000) -> Profile:
    """Repeated median-filter fill.

    Each pass fills every still-missing point that has at least one
    valid-or-filled point inside its centred window with the median of
    those (median of an even count = mean of the two middle values,
    numpy's convention).  Gaps longer than the window fill inward from
    both sides, one pass per layer.  Points still missing after
    ``max_passes`` raise PartialFillError listing their indices.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    if max_passes < 1:
        raise ValueError("need at least one pass")
    _check(profile)
    z = profile.z.copy()
    known = profile.valid.copy()
    half = (window - 1) // 2
    n = profile.n
    for _ in range(max_passes):
        missing = np.flatnonzero(~known)
        if len(missing) == 0:
            break
        new_vals = {}
        for i in missing:
            lo, hi = max(0, i - half), min(n, i + half + 1)
            vals = z[lo:hi][known[lo:hi]]
            if len(vals):
                new_vals[i] = float(np.median(vals))
        if not new_vals:
            break
        for i, val in new_vals.items():
            z[i] = val
            known[i] = True
    remaining = np.flatnonzero(~known)
    if len(remaining):
        raise PartialFillError(
            f"{len(remaining)} points still missing after {max_passes} passes",
            remaining,
        )
    return profile.with_filled(z[np.flatnonzero(~profile.valid)])


def impute_idw(profile: Profile, power: float = 2.0,
               radius: float | None = None) -> Profile:
    """Inverse-distance weighting over valid points within ``radius``.

    Weights are |x - x_j|^(-power); the radius defaults to 10 grid
    steps.  A missing point with no valid support inside the radius
    raises CoverageError.
    """
    if power <= 0:
        raise ValueError("power must be positive")
    radius = 10.0 * profile.dx if radius is None else float(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    idx = _check(profile)
    xv = profile.valid_x()
    zv = profile.valid_z()
    fills = np.empty(len(idx))
    for k, i in enumerate(idx):
        d = np.abs(xv - profile.x[i])
        near = d <= radius
        if not np.any(near):
            raise CoverageError(
                f"no valid point within radius {radius:g} of x={profile.x[i]:g}"
            )
        w = d[near] ** (-power)
        fills[k] = float(np.sum(w * zv[near]) / np.sum(w))
    return profile.with_filled(fills)
