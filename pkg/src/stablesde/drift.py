"""Drift families, the truncated drift and the semigroup-regularised drifts.

Every drift is immutable and evaluated by ``drift(t, x)``.  In dimension one
``x`` is an array of scalar coordinates and the result has the same shape; in
dimension d > 1 the last axis of ``x`` has length d.
"""
from dataclasses import dataclass, field
import hashlib
import math

import numpy as np

from .exceptions import DomainError, ParameterError
from .noise import SpatialGrid, StableLaw
from .spectral import FourierSeries, besov_series, weierstrass_series

INF = math.inf


@dataclass(frozen=True)
class Regularity:
    """Declared regularity (p, q, theta, beta).

    ``beta == 0`` means a Lebesgue drift in L^theta_t L^p_x, ``beta > 0`` a
    Hoelder drift, ``beta < 0`` a drift in the Besov space B^beta_{p,q}.
    ``theta`` is the time integrability.
    """

    p: float = INF
    q: float = INF
    theta: float = INF
    beta: float = 0.0

    @property
    def kind(self) -> str:
        if self.beta == 0:
            return "lebesgue"
        return "hoelder" if self.beta > 0 else "besov"


# --------------------------------------------------------------------------
# time profiles


class ConstantProfile:
    constant = True

    def __call__(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def lebesgue_norm(self, theta, T):
        return T ** (1 / theta) if theta < INF else 1.0

    def key(self):
        return ("constant",)


class PiecewiseProfile:
    """Piecewise constant in time: value ``values[i]`` on ``[breaks[i], breaks[i+1])``."""

    constant = False

    def __init__(self, breaks, values):
        self.breaks = np.asarray(breaks, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.breaks.size != self.values.size + 1 or np.any(np.diff(self.breaks) <= 0):
            raise ParameterError("breaks must be increasing with one more entry than values")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.values.size - 1)
        return self.values[i]

    def lebesgue_norm(self, theta, T):
        w = np.diff(np.minimum(self.breaks, T).clip(self.breaks[0]))
        if theta == INF:
            return float(np.max(np.abs(self.values)))
        return float(np.sum(w * np.abs(self.values) ** theta)) ** (1 / theta)

    def key(self):
        return ("piecewise", tuple(self.breaks), tuple(self.values))


class PowerProfile:
    """g(t) = t^{-exponent}; lies in L^theta(0,T) iff exponent * theta < 1."""

    constant = False

    def __init__(self, exponent):
        if not 0 <= exponent < 1:
            raise ParameterError("power profile exponent must lie in [0, 1)")
        self.exponent = float(exponent)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(t > 0, np.abs(t) ** -self.exponent, 0.0)
        return out

    def lebesgue_norm(self, theta, T):
        e = self.exponent
        if theta == INF:
            return INF if e > 0 else 1.0
        if e * theta >= 1:
            return INF
        return (T ** (1 - e * theta) / (1 - e * theta)) ** (1 / theta)

    def key(self):
        return ("power", self.exponent)


# --------------------------------------------------------------------------
# families


class Drift:
    """Base class.  Subclasses implement ``_space(x)`` (time-free part)."""

    dim = 1
    spectral = False

    def __init__(self, regularity: Regularity, profile=None):
        self.regularity = regularity
        self.profile = profile if profile is not None else ConstantProfile()

    def __call__(self, t, x):
        return eval_drift(self, t, x)

    @property
    def time_constant(self) -> bool:
        return bool(self.profile.constant)

    def digest(self) -> str:
        return hashlib.sha256(repr(self.key()).encode()).hexdigest()[:16]

    def key(self):
        return (type(self).__name__, self.regularity, self.profile.key())


class ZeroDrift(Drift):
    def __init__(self, dim=1):
        super().__init__(Regularity(INF, INF, INF, 0.0))
        self.dim = dim
        self.spectral = dim == 1
        self.series = FourierSeries([], [], [], 0.0)

    def _space(self, x):
        return np.zeros_like(x, dtype=float)


class ConstantDrift(Drift):
    """b(t, x) = g(t) c."""

    def __init__(self, value, profile=None, regularity=None):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        self.value = v
        self.dim = v.size
        reg = regularity or Regularity(INF, INF, INF, 0.0)
        super().__init__(reg, profile)
        self.spectral = self.dim == 1
        if self.spectral:
            self.series = FourierSeries([], [], [], float(v[0]))

    def _space(self, x):
        if self.dim == 1:
            return np.full(np.shape(x), self.value[0])
        return np.broadcast_to(self.value, np.shape(x)).copy()

    def key(self):
        return super().key() + (tuple(self.value),)


class SpectralDrift(Drift):
    """Drift ``g(t) * series(x)`` in dimension one."""

    spectral = True

    def __init__(self, series: FourierSeries, regularity: Regularity, profile=None):
        super().__init__(regularity, profile)
        self.series = series

    def _space(self, x):
        return self.series(x)

    def key(self):
        return super().key() + (self.series.digest(),)


class FourierDrift(SpectralDrift):
    """Smooth band-limited drift from explicit modes (declared Lebesgue, p = oo)."""

    def __init__(self, freqs, amps, phases=None, const=0.0, profile=None, regularity=None):
        reg = regularity or Regularity(INF, INF, INF, 0.0)
        super().__init__(FourierSeries(freqs, amps, phases, const), reg, profile)


class HolderSpectral(SpectralDrift):
    """Weierstrass-type drift of Hoelder order ``beta`` up to level ``levels``."""

    def __init__(self, beta, base=2.0, levels=8, seed=0, amplitude=1.0, profile=None, phases=True):
        if not 0 < beta < 1:
            raise ParameterError("Hoelder drift needs beta in (0, 1)")
        if base < 2:
            raise ParameterError("base must be >= 2")
        self.beta, self.base, self.levels, self.seed = beta, base, levels, seed
        series = weierstrass_series(beta, base, levels, seed, amplitude, phases)
        super().__init__(series, Regularity(INF, INF, INF, beta), profile)

    def key(self):
        return super().key() + (self.base, self.levels, self.seed)


class BesovSpectral(SpectralDrift):
    """Random-sign Fourier series of negative regularity ``beta``."""

    def __init__(self, beta, modes=16, seed=0, p=INF, q=INF, base_frequency=1.0,
                 amplitude=1.0, decay=None, profile=None, theta=INF):
        if not beta < 0:
            raise ParameterError("Besov drift needs beta < 0")
        self.beta, self.modes, self.seed = beta, modes, seed
        series = besov_series(beta, modes, seed, base_frequency, amplitude, decay)
        super().__init__(series, Regularity(p, q, theta, beta), profile)

    def key(self):
        return super().key() + (self.modes, self.seed)


class LebesguePower(Drift):
    """b(t, x) = -kappa g(t) x / |x|^{1+delta}, set to 0 at the origin.

    The drift splits at radius ``r0`` into an inner piece in L^{p_inner}
    (any p_inner < d/delta) and a bounded outer piece.
    """

    def __init__(self, kappa=1.0, delta=0.5, dim=1, r0=1.0, p_inner=None, theta=INF,
                 profile=None):
        if not delta > 0:
            raise ParameterError("delta must be positive")
        self.kappa, self.delta, self.r0 = float(kappa), float(delta), float(r0)
        self.dim = int(dim)
        if p_inner is None:
            p_inner = 0.5 * (2.0 + self.dim / self.delta) if self.dim / self.delta > 2 else 2.0
        self.p_inner = float(p_inner)
        super().__init__(Regularity(self.p_inner, INF, theta, 0.0), profile)

    def _space(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            r = np.abs(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(r > 0, -self.kappa * x / np.maximum(r, 1e-300) ** (1 + self.delta), 0.0)
            return out
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, -self.kappa * x / np.maximum(r, 1e-300) ** (1 + self.delta), 0.0)
        return out

    def pieces(self):
        """Inner and outer parts with their declared (p, theta)."""
        th = self.regularity.theta
        inner = _Restricted(self, lambda r: r <= self.r0, Regularity(self.p_inner, INF, th, 0.0))
        outer = _Restricted(self, lambda r: r > self.r0, Regularity(INF, INF, th, 0.0))
        return [inner, outer]

    def admissible(self, law: StableLaw) -> bool:
        return self.delta < min(law.alpha - 1, self.dim / 2)

    def is_periodic_on(self, L):
        return False

    def key(self):
        return super().key() + (self.kappa, self.delta, self.r0, self.dim)


class _Restricted(Drift):
    def __init__(self, parent, mask_fn, regularity):
        super().__init__(regularity, parent.profile)
        self.parent, self.mask_fn, self.dim = parent, mask_fn, parent.dim

    def _space(self, x):
        v = self.parent._space(x)
        r = np.abs(x) if self.dim == 1 else np.linalg.norm(x, axis=-1, keepdims=True)
        return np.where(self.mask_fn(r), v, 0.0)

    def key(self):
        return ("restricted", self.parent.key(), self.regularity)


class LebesgueSum(Drift):
    """Sum of drifts, each with its own declared (p_i, theta_i)."""

    def __init__(self, pieces):
        pieces = list(pieces)
        if not pieces:
            raise ParameterError("LebesgueSum needs at least one piece")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise ParameterError("all pieces must share the dimension")
        self._pieces = pieces
        self.dim = dims.pop()
        p_min = min(p.regularity.p for p in pieces)
        th_min = min(p.regularity.theta for p in pieces)
        super().__init__(Regularity(p_min, INF, th_min, 0.0))

    def pieces(self):
        return list(self._pieces)

    @property
    def time_constant(self) -> bool:
        return all(p.time_constant for p in self._pieces)

    def __call__(self, t, x):
        return sum(eval_drift(p, t, x) for p in self._pieces)

    def key(self):
        return ("sum",) + tuple(p.key() for p in self._pieces)


class Tabulated(Drift):
    """Grid field, linear in space, piecewise constant in time.

    Parameters
    ----------
    grid : SpatialGrid
        One dimensional grid carrying the values.
    values : ndarray, shape (n_times, N)
    breaks : array_like, length n_times + 1
        Time breakpoints.
    regularity : Regularity
        Declared by the user.
    """

    def __init__(self, grid: SpatialGrid, values, breaks, regularity: Regularity):
        if grid.dim != 1:
            raise ParameterError("tabulated drifts are one dimensional")
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != grid.points or values.shape[0] != len(breaks) - 1:
            raise ParameterError("values must have shape (len(breaks)-1, grid.points)")
        self.grid, self.values = grid, values
        self.breaks = np.asarray(breaks, dtype=float)
        super().__init__(regularity)

    @property
    def time_constant(self) -> bool:
        return self.values.shape[0] == 1

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        L = self.grid.half_width
        if np.any(x < -L) or np.any(x > self.grid.nodes[-1]):
            raise DomainError(f"tabulated drift evaluated outside [{-L:g}, {self.grid.nodes[-1]:g}]")
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        i = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.values.shape[0] - 1)
        pos = (x + L) / self.grid.spacing
        j = np.clip(np.floor(pos).astype(int), 0, self.grid.points - 2)
        w = pos - j
        return (1 - w) * self.values[i, j] + w * self.values[i, j + 1]

    def key(self):
        return ("tabulated", self.grid.points, self.grid.half_width,
                hashlib.sha256(self.values.tobytes()).hexdigest()[:16])


def eval_drift(spec: Drift, t, x):
    """Pointwise ``b(t, x)``."""
    if isinstance(spec, (LebesgueSum, Tabulated)):
        return spec(t, x)
    x = np.asarray(x, dtype=float)
    space = spec._space(x)
    g = np.asarray(spec.profile(np.asarray(t, dtype=float)), dtype=float)
    if spec.dim > 1 and g.ndim > 0:
        g = g[..., None]
    return g * space


# --------------------------------------------------------------------------
# truncation and regularisation


@dataclass(frozen=True)
class CutoffConfig:
    """Truncation level ``B h^{1/alpha - 1}`` for the Lebesgue scheme."""

    B: float
    h: float
    alpha: float

    def __post_init__(self):
        if not (self.B > 0 and self.h > 0):
            raise ParameterError("B and h must be positive")

    @property
    def threshold(self) -> float:
        return self.B * self.h ** (1.0 / self.alpha - 1.0)


def cutoff_drift(spec: Drift, cfg: CutoffConfig, t, x):
    """Truncated drift: zero before ``h``, radially capped at the threshold."""
    t = np.asarray(t, dtype=float)
    b = np.asarray(eval_drift(spec, t, x), dtype=float)
    thr = cfg.threshold
    if spec.dim == 1:
        nb = np.abs(b)
    else:
        nb = np.linalg.norm(b, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(nb > thr, thr / np.where(nb > 0, nb, 1.0), 1.0)
    scale = np.where(np.broadcast_to(t, scale.shape) >= cfg.h, scale, 0.0)
    if spec.dim > 1:
        scale = scale[..., None]
    return b * scale


def _require_spectral(spec):
    if not getattr(spec, "spectral", False):
        raise ParameterError("operation needs a drift with a spectral representation")


def mollified_drift(spec: Drift, law: StableLaw, s, h):
    """``P_{s - tau_s} b(s, .)`` as a FourierSeries (tau_s the grid time below s)."""
    _require_spectral(spec)
    k = math.floor(s / h + 1e-12)
    gap = s - k * h
    if gap <= 1e-12 * max(1.0, h):
        raise DomainError(f"mollified drift is undefined on grid times (s={s})")
    g = float(spec.profile(s))
    return spec.series.semigroup(law.psi, gap).times(g)


def _phi1(z, w):
    # (1 - e^{-z}) / z * w, stable near z = 0
    z = np.asarray(z, dtype=float)
    safe = np.where(z > 1e-8, z, 1.0)
    return np.where(z > 1e-8, -np.expm1(-safe) / safe * w, w * (1 - z / 2))


def integrated_multiplier(spec: Drift, law: StableLaw, s, window, freqs=None, nodes=8):
    """Per-mode weights ``int_0^w g(s+v) exp(-v psi_k) dv`` (and for the constant term)."""
    freqs = spec.series.freqs if freqs is None else freqs
    psi = law.psi(freqs)
    w = float(window)
    if spec.profile.constant:
        return _phi1(psi * w, w), w
    # composite Gauss-Legendre; panels keep psi * (panel width) <= 1
    panels = max(1, int(math.ceil(float(np.max(psi, initial=0.0)) * w)))
    panels = min(panels, 4096)
    xg, wg = np.polynomial.legendre.leggauss(max(8, nodes))
    edges = np.linspace(0.0, w, panels + 1)
    acc = np.zeros_like(psi)
    acc0 = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v = 0.5 * (b - a) * xg + 0.5 * (a + b)
        g = spec.profile(s + v) * 0.5 * (b - a) * wg
        acc += np.exp(-np.outer(psi, v)) @ g
        acc0 += float(np.sum(g))
    return acc, acc0


def integrated_drift(spec: Drift, law: StableLaw, s, z, window):
    """``int_s^{s+w} P_{u-s} b(u, z) du`` evaluated at points ``z``."""
    if not window > 0:
        raise ParameterError("window must be positive")
    if isinstance(spec, ConstantDrift) and spec.dim > 1:
        w = float(window) if spec.profile.constant else integrated_multiplier(spec, law, s, window, np.zeros(1))[1]
        return np.broadcast_to(w * spec.value, np.shape(z)).copy()
    _require_spectral(spec)
    mult, m0 = integrated_multiplier(spec, law, s, window)
    return spec.series.scaled(mult, m0)(z)


def integrated_series(spec: Drift, law: StableLaw, s, window) -> FourierSeries:
    """Same as :func:`integrated_drift` but returned as a series."""
    _require_spectral(spec)
    mult, m0 = integrated_multiplier(spec, law, s, window)
    return spec.series.scaled(mult, m0)


def mollify_distribution(spec: Drift, eps, law: StableLaw):
    """Smooth approximation ``P_eps b`` (coefficients damped by exp(-eps psi))."""
    if eps < 0:
        raise ParameterError("eps must be >= 0")
    _require_spectral(spec)
    series = spec.series.semigroup(law.psi, eps) if eps > 0 else spec.series
    out = SpectralDrift(series, spec.regularity, spec.profile)
    return out


def is_periodic(spec: Drift, L) -> bool:
    """True when the drift is a periodic function on [-L, L)."""
    if getattr(spec, "spectral", False):
        return spec.series.is_periodic_on(L)
    return False
