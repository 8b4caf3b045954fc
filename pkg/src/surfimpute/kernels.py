"""Covariance kernels for surface-profile GPs.

All kernels are strictly real-valued.  Positions are mm, heights um,
so variances are um^2, frequencies 1/mm, frequency variances 1/mm^2.

Same-set covariance matrices are built from the absolute lag (or the
absolute cosine argument), which makes them bitwise symmetric: IEEE
negation is exact and every factor is an even function of the lag.

Hyperparameter gradients are taken with respect to the unconstrained
log-space representation used by the optimizer; ``raw_vector`` /
``with_raw_vector`` define that representation per kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi

# positive parameters this close to zero get their log-space gradient
# evaluated at the floor instead (a zero frequency variance is a legal
# pure-cosine component)
LOG_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class SEParams:
    """Squared-exponential kernel: sigma2 * exp(-tau^2 / (2 theta^2))."""

    sigma2: float
    theta: float

    def __post_init__(self):
        if not self.sigma2 > 0 or not self.theta > 0:
            raise ValueError("SE kernel needs positive variance and lengthscale")


@dataclass(frozen=True)
class PeriodicParams:
    """Periodic kernel: sigma2 * exp(-sin^2(pi tau / period) / (2 theta^2))."""

    sigma2: float
    theta: float
    period: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.theta > 0 and self.period > 0):
            raise ValueError("periodic kernel parameters must be positive")


@dataclass(frozen=True)
class SMParams:
    """Spectral mixture: sum_q w_q cos(2 pi tau f_q) exp(-2 pi^2 tau^2 v_q).

    weights w_q > 0 (um^2), frequencies f_q >= 0 (1/mm), frequency
    variances v_q >= 0 (1/mm^2); v_q = 0 is a pure cosine component.
    """

    weights: np.ndarray
    freqs: np.ndarray
    freq_vars: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        f = np.atleast_1d(np.asarray(self.freqs, dtype=float))
        v = np.atleast_1d(np.asarray(self.freq_vars, dtype=float))
        if not (len(w) == len(f) == len(v)) or len(w) == 0:
            raise ValueError("mixture parameter arrays must share a length >= 1")
        if not np.all(w > 0):
            raise ValueError("mixture weights must be positive")
        if np.any(f < 0) or np.any(v < 0):
            raise ValueError("frequencies and frequency variances must be >= 0")
        for a in (w, f, v):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "freq_vars", v)

    @property
    def q(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class NoiseParams:
    """Measurement noise: white sigma2*[i=j] or colored SE(sigma2, theta)."""

    kind: str
    sigma2: float
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in ("white", "colored"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.sigma2 >= 0:
            raise ValueError("noise variance must be >= 0")
        if self.kind == "colored" and not (self.theta or 0) > 0:
            raise ValueError("colored noise needs a positive correlation length")


@dataclass(frozen=True)
class PointwiseLatents:
    """GSM latent functions evaluated at a set of points."""

    w: np.ndarray
    lam: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if not (len(w) == len(lam) == len(f)):
            raise ValueError("latent value arrays must share a length")
        if not np.all(w > 0) or not np.all(lam > 0) or np.any(f < 0):
            raise ValueError("latents need w > 0, lambda > 0, f >= 0")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "f", f)


# ---------------------------------------------------------------------------
# scalar forms


def k_se(x: float, xp: float, p: SEParams) -> float:
    tau = x - xp
    return p.sigma2 * np.exp(-(tau * tau) / (2.0 * p.theta**2))


def k_periodic(x: float, xp: float, p: PeriodicParams) -> float:
    s = np.sin(np.pi * (x - xp) / p.period)
    return p.sigma2 * np.exp(-(s * s) / (2.0 * p.theta**2))


def k_sm(x: float, xp: float, p: SMParams) -> float:
    tau = x - xp
    terms = p.weights * np.cos(TWO_PI * tau * p.freqs) * np.exp(
        -2.0 * np.pi**2 * tau * tau * p.freq_vars
    )
    return float(np.sum(terms))


def k_noise(x: float, xp: float, p: NoiseParams) -> float:
    if p.kind == "white":
        return p.sigma2 if x == xp else 0.0
    tau = x - xp
    return p.sigma2 * np.exp(-(tau * tau) / (2.0 * p.theta**2))


def k_gibbs(x: float, xp: float, lam: float, lamp: float) -> float:
    d = lam * lam + lamp * lamp
    tau = x - xp
    return np.sqrt(2.0 * lam * lamp / d) * np.exp(-(tau * tau) / d)


def k_gsm(x, xp, w, wp, lam, lamp, f, fp) -> float:
    phase = TWO_PI * (f * x) - TWO_PI * (fp * xp)
    return w * wp * k_gibbs(x, xp, lam, lamp) * np.cos(abs(phase))


# ---------------------------------------------------------------------------
# matrix builders


def _as_points(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError("point sets must be 1-D arrays")
    return xs


def _abs_lag(xs: np.ndarray, ys: np.ndarray | None) -> np.ndarray:
    other = xs if ys is None else ys
    return np.abs(xs[:, None] - other[None, :])


def _se_like(sigma2: float, theta: float, t: np.ndarray) -> np.ndarray:
    return sigma2 * np.exp(-(t * t) / (2.0 * theta * theta))


def _sm_component(p: SMParams, q: int, t: np.ndarray):
    c = np.cos(TWO_PI * p.freqs[q] * t)
    e = np.exp(-2.0 * np.pi**2 * p.freq_vars[q] * (t * t))
    return c, e


def value_on_lags(kernel, t: np.ndarray) -> np.ndarray:
    """Stationary kernel evaluated on an array of absolute lags.

    Shared by the dense matrix builder and the uniform-grid fitting
    path, which gathers values from a per-lag table instead of
    re-evaluating transcendentals per matrix entry.  Colored noise is
    stationary and supported; white noise is not (index identity).
    """
    t = np.asarray(t, dtype=float)
    if isinstance(kernel, SEParams):
        return _se_like(kernel.sigma2, kernel.theta, t)
    if isinstance(kernel, PeriodicParams):
        s = np.sin(np.pi * t / kernel.period)
        return kernel.sigma2 * np.exp(-(s * s) / (2.0 * kernel.theta**2))
    if isinstance(kernel, SMParams):
        k = np.zeros_like(t)
        for q in range(kernel.q):
            c, e = _sm_component(kernel, q, t)
            k += kernel.weights[q] * c * e
        return k
    if isinstance(kernel, NoiseParams) and kernel.kind == "colored":
        return _se_like(kernel.sigma2, kernel.theta, t)
    raise TypeError(f"{type(kernel).__name__} has no stationary lag form")


def grad_on_lags(kernel, index: int, t: np.ndarray) -> np.ndarray:
    """d(kernel)/d(raw parameter ``index``) on an array of absolute lags."""
    t = np.asarray(t, dtype=float)
    if isinstance(kernel, SEParams):
        k = _se_like(kernel.sigma2, kernel.theta, t)
        if index == 0:
            return k
        return k * (t * t) / kernel.theta**2
    if isinstance(kernel, PeriodicParams):
        s = np.sin(np.pi * t / kernel.period)
        k = kernel.sigma2 * np.exp(-(s * s) / (2.0 * kernel.theta**2))
        if index == 0:
            return k
        if index == 1:
            return k * (s * s) / kernel.theta**2
        c = np.cos(np.pi * t / kernel.period)
        return k * s * c * np.pi * t / (kernel.period * kernel.theta**2)
    if isinstance(kernel, SMParams):
        q, which = index % kernel.q, index // kernel.q
        c, e = _sm_component(kernel, q, t)
        if which == 0:  # log w_q
            return kernel.weights[q] * c * e
        if which == 1:  # log f_q
            s = np.sin(TWO_PI * kernel.freqs[q] * t)
            return (
                -kernel.weights[q]
                * s
                * (TWO_PI * t)
                * e
                * max(kernel.freqs[q], LOG_FLOOR)
            )
        # log v_q
        return (
            kernel.weights[q]
            * c
            * e
            * (-2.0 * np.pi**2 * t * t)
            * max(kernel.freq_vars[q], LOG_FLOOR)
        )
    if isinstance(kernel, NoiseParams) and kernel.kind == "colored":
        k = _se_like(kernel.sigma2, kernel.theta, t)
        if index == 0:
            return k
        return k * (t * t) / kernel.theta**2
    raise TypeError(f"{type(kernel).__name__} has no stationary lag form")


def gibbs_cov(xs, ys, lam_x, lam_y) -> np.ndarray:
    """Gibbs kernel matrix for pointwise lengthscales (unit variance)."""
    xs = _as_points(xs)
    ys = _as_points(ys)
    lam_x = np.asarray(lam_x, dtype=float)
    lam_y = np.asarray(lam_y, dtype=float)
    d = (lam_x * lam_x)[:, None] + (lam_y * lam_y)[None, :]
    sq = (xs[:, None] - ys[None, :]) ** 2
    return np.sqrt(2.0 * np.outer(lam_x, lam_y) / d) * np.exp(-sq / d)


def gsm_cov(xs, ys, lat_x: PointwiseLatents, lat_y: PointwiseLatents) -> np.ndarray:
    """Generalized spectral mixture matrix (single component).

    k(x, x') = w(x) w(x') k_gibbs(x, x'; lambda) cos(2 pi (f(x) x - f(x') x'))
    """
    xs = _as_points(xs)
    ys = _as_points(ys)
    g = gibbs_cov(xs, ys, lat_x.lam, lat_y.lam)
    px = TWO_PI * lat_x.f * xs
    py = TWO_PI * lat_y.f * ys
    c = np.cos(np.abs(px[:, None] - py[None, :]))
    return np.outer(lat_x.w, lat_y.w) * g * c


def build_cov(kernel, xs, ys=None) -> np.ndarray:
    """Covariance matrix of ``kernel`` between xs and ys (ys=None: same set).

    Same-set matrices are bitwise symmetric.  White noise uses index
    identity for the same-set case and exact position equality across
    two sets.
    """
    xs = _as_points(xs)
    if ys is not None:
        ys = _as_points(ys)
    if isinstance(kernel, NoiseParams) and kernel.kind == "white":
        if ys is None:
            return kernel.sigma2 * np.eye(len(xs))
        return kernel.sigma2 * (xs[:, None] == ys[None, :]).astype(float)
    if isinstance(kernel, (SEParams, PeriodicParams, SMParams, NoiseParams)):
        return value_on_lags(kernel, _abs_lag(xs, ys))
    if hasattr(kernel, "cov_matrix"):
        return kernel.cov_matrix(xs, ys)
    raise TypeError(f"no covariance builder for {type(kernel).__name__}")


# ---------------------------------------------------------------------------
# unconstrained (log-space) parameter vectors and their gradients


def raw_vector(kernel) -> np.ndarray:
    """Unconstrained optimizer representation of the kernel parameters.

    SE:        [log sigma2, log theta]
    periodic:  [log sigma2, log theta, log period]
    SM:        [log w_0.., log f_0.., log v_0..]  (grouped by kind)
    noise:     [log sigma2] or [log sigma2, log theta]
    Values below 1e-12 are floored before the log.
    """
    if isinstance(kernel, SEParams):
        return np.log([kernel.sigma2, kernel.theta])
    if isinstance(kernel, PeriodicParams):
        return np.log([kernel.sigma2, kernel.theta, kernel.period])
    if isinstance(kernel, SMParams):
        return np.log(
            np.concatenate(
                [
                    kernel.weights,
                    np.maximum(kernel.freqs, LOG_FLOOR),
                    np.maximum(kernel.freq_vars, LOG_FLOOR),
                ]
            )
        )
    if isinstance(kernel, NoiseParams):
        if kernel.kind == "white":
            return np.log([max(kernel.sigma2, LOG_FLOOR)])
        return np.log([max(kernel.sigma2, LOG_FLOOR), kernel.theta])
    raise TypeError(f"no raw-vector form for {type(kernel).__name__}")


def with_raw_vector(kernel, vec):
    """Rebuild a kernel of the same type from its unconstrained vector."""
    vec = np.asarray(vec, dtype=float)
    if len(vec) != n_params(kernel):
        raise ValueError(
            f"expected {n_params(kernel)} raw parameters, got {len(vec)}"
        )
    val = np.exp(vec)
    if isinstance(kernel, SEParams):
        return SEParams(val[0], val[1])
    if isinstance(kernel, PeriodicParams):
        return PeriodicParams(val[0], val[1], val[2])
    if isinstance(kernel, SMParams):
        q = kernel.q
        return SMParams(val[:q], val[q : 2 * q], val[2 * q :])
    if isinstance(kernel, NoiseParams):
        if kernel.kind == "white":
            return replace(kernel, sigma2=val[0])
        return replace(kernel, sigma2=val[0], theta=val[1])
    raise TypeError(f"no raw-vector form for {type(kernel).__name__}")


def n_params(kernel) -> int:
    if isinstance(kernel, SEParams):
        return 2
    if isinstance(kernel, PeriodicParams):
        return 3
    if isinstance(kernel, SMParams):
        return 3 * kernel.q
    if isinstance(kernel, NoiseParams):
        return 1 if kernel.kind == "white" else 2
    raise TypeError(f"no raw-vector form for {type(kernel).__name__}")


def kernel_grad(kernel, xs, index: int) -> np.ndarray:
    """d(cov matrix)/d(raw parameter ``index``) on the same-set grid xs.

    Chain-ruled through the log transform, so entries are
    dK/d(log p) = p * dK/dp; parameters at zero use the 1e-12 floor.
    """
    xs = _as_points(xs)
    if not 0 <= index < n_params(kernel):
        raise ValueError(f"parameter index {index} out of range")
    if isinstance(kernel, NoiseParams) and kernel.kind == "white":
        return build_cov(kernel, xs)  # dOmega/dlog sigma2 = Omega
    return grad_on_lags(kernel, index, _abs_lag(xs, None))
