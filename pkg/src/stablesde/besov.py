"""Besov norms through the stable heat semigroup, and the discrete Gronwall bound.

The thermic norm of a grid field is

    ||f|| = ||phi_low * f||_l + c^{-1} ( int_0^T [v^{n - beta/alpha}
            ||(-psi)^n exp(-v psi) f||_l]^m dv / v )^{1/m},

computed spectrally.  ``phi_low`` is a Gaussian low-pass filter with
``phi(0) = 1``.  The constant ``c`` normalises the thermic part so that a
single high Fourier mode ``cos(k x)`` gets norm ``psi(k)^{beta/alpha}
||cos(k .)||_l`` (and the duality pairing can reach constant one).
The v-integral uses log-uniform nodes on [v_min, T]; the part below v_min is
bounded analytically and added (m finite) or reported (m infinite).
"""
from dataclasses import dataclass
import hashlib
import math

import numpy as np
from scipy import integrate, special

from . import conditions
from .exceptions import ParameterError, ResolutionError
from .noise import SpatialGrid, StableLaw

INF = math.inf
BUMP_WIDTH = 0.25  # phi(xi) = exp(-|xi|^2 / (2 * 0.25^2)), effectively supported in |xi| <= 1


def lebesgue_norm(f, u, grid: SpatialGrid):
    """Grid quadrature of ``||f||_{L^u}`` (max of |f| when u is inf)."""
    f = np.abs(np.asarray(f, dtype=float))
    if u == INF:
        return float(f.max()) if f.size else 0.0
    if u < 1:
        raise ParameterError("u must be >= 1")
    return float((np.sum(f ** u) * grid.cell) ** (1.0 / u))


@dataclass(frozen=True)
class BesovParams:
    """Parameters of the thermic norm.

    Parameters
    ----------
    integrability : float
        Space exponent l in [1, inf].
    summability : float
        Scale exponent m in [1, inf].
    beta : float
        Regularity.
    order : int, optional
        Thermic order n > beta / alpha; default is the smallest such integer
        (needs the law, so it is resolved at evaluation time when None).
    horizon : float
        Upper end of the v-integral.
    nodes : int
        Number of log-uniform v nodes (>= 32).
    v_min : float, optional
        Lower end; default ``(2 dx)^alpha``.
    """

    integrability: float
    summability: float
    beta: float
    order: int = None
    horizon: float = 1.0
    nodes: int = 96
    v_min: float = None
    bump_width: float = BUMP_WIDTH

    def __post_init__(self):
        for name in ("integrability", "summability"):
            v = getattr(self, name)
            if not v >= 1:
                raise ParameterError(f"{name} must lie in [1, inf], got {v}")
        if self.nodes < 32:
            raise ParameterError("at least 32 v-nodes are required")
        if not self.horizon > 0:
            raise ParameterError("horizon must be positive")
        if self.order is not None and self.order < 0:
            raise ParameterError("order must be non-negative")

    def resolved_order(self, alpha):
        n_min = math.floor(self.beta / alpha) + 1
        n_min = max(n_min, 0)
        if self.order is None:
            return n_min
        if not self.order > self.beta / alpha:
            raise ParameterError(f"thermic order {self.order} must exceed beta/alpha = {self.beta / alpha:g}")
        return int(self.order)

    def digest(self):
        return hashlib.sha256(repr(self).encode()).hexdigest()[:12]

    def dual(self):
        """Parameters of the dual space B^{-beta}_{l', m'}."""
        return BesovParams(_conj(self.integrability), _conj(self.summability), -self.beta,
                           None, self.horizon, self.nodes, self.v_min, self.bump_width)


def _conj(p):
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def normalization(s, m):
    """Thermic integral of a single mode: (Gamma(s m) / m^{s m})^{1/m}, or (s/e)^s if m = inf."""
    if m == INF:
        return (s / math.e) ** s
    sm = s * m
    return math.exp((special.gammaln(sm) - sm * math.log(m)) / m)


@dataclass
class ThermicParts:
    lowpass: float
    thermic: float
    remainder: float
    v_min: float
    order: int

    @property
    def total(self):
        return self.lowpass + self.thermic


def thermic_parts(f, params: BesovParams, law: StableLaw, grid: SpatialGrid, spectrum=None):
    """Return the pieces of the thermic norm (see module docstring)."""
    a = law.alpha
    n = params.resolved_order(a)
    s = n - params.beta / a
    if s <= 0:
        raise ParameterError("thermic order too small")
    floor_v = (2 * grid.spacing) ** a
    v_min = floor_v if params.v_min is None else params.v_min
    if v_min < floor_v * (1 - 1e-12):
        need = int(2 ** math.ceil(math.log2(2 * grid.half_width / (0.5 * v_min ** (1 / a)))))
        raise ResolutionError(f"v_min = {v_min:g} is not resolved by spacing {grid.spacing:g}; "
                              f"use at least {need} points")
    T = params.horizon
    if v_min >= T:
        raise ResolutionError("v_min exceeds the thermic horizon; refine the grid")
    F = grid.forward(f) if spectrum is None else spectrum
    psi = law.psi(grid.freq_norm())
    ell, m = params.integrability, params.summability
    bump = np.exp(-0.5 * (grid.freq_norm() / params.bump_width) ** 2)
    low = lebesgue_norm(grid.inverse(F * bump), ell, grid)
    vs = np.geomspace(v_min, T, params.nodes)
    base = (-psi) ** n if n > 0 else np.ones_like(psi)
    vals = np.empty(vs.size)
    for i, v in enumerate(vs):
        vals[i] = v ** s * lebesgue_norm(grid.inverse(F * base * np.exp(-v * psi)), ell, grid)
    top = lebesgue_norm(grid.inverse(F * base), ell, grid)
    c = normalization(s, m)
    if m == INF:
        th = float(vals.max())
        rem = v_min ** s * top
        return ThermicParts(low, th / c, rem / c, v_min, n)
    logv = np.log(vs)
    q = float(integrate.trapezoid(vals ** m, logv))
    rem = top ** m * v_min ** (s * m) / (s * m)
    return ThermicParts(low, (q + rem) ** (1 / m) / c, rem ** (1 / m) / c, v_min, n)


def thermic_norm(f, params: BesovParams, law: StableLaw, grid: SpatialGrid):
    """Thermic B^beta_{l,m} norm of a grid field."""
    return thermic_parts(f, params, law, grid).total


# --------------------------------------------------------------------------
# inequality checks


@dataclass
class MarginReport:
    kind: str
    lhs: float
    rhs: float
    params_digest: str
    note: str = ""

    @property
    def ratio(self):
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else INF
        return self.lhs / self.rhs


def write_margin_csv(reports, path):
    with open(path, "w", newline="") as fh:
        fh.write("kind,params_digest,lhs,rhs,ratio\n")
        for r in reports:
            fh.write(f"{r.kind},{r.params_digest},{r.lhs!r},{r.rhs!r},{r.ratio!r}\n")


def _digest(*items):
    return hashlib.sha256(repr(items).encode()).hexdigest()[:12]


def check_inequality(kind, operands, params, law: StableLaw, grid: SpatialGrid):
    """Evaluate both sides of one of the Besov-space inequalities.

    Parameters
    ----------
    kind : {'duality', 'young', 'product', 'embedding'}
    operands : tuple of grid fields
        ``(f, g)`` for duality/young/product, ``(f,)`` for embedding.
    params : dict
        duality: beta, l, m.
        young: beta, delta, l, m, l1, m1, l2, m2.
        product: beta, rho, l, m.
        embedding: l, side ('lower' for ||f||_l <= ||f||_{B^0_{l,1}},
        'upper' for ||f||_{B^0_{l,inf}} <= ||f||_l).

    Returns
    -------
    MarginReport
    """
    p = dict(params)
    nodes = p.pop("nodes", 96)
    horizon = p.pop("horizon", 1.0)

    def norm(field, beta, ell, m):
        return thermic_norm(field, BesovParams(ell, m, beta, nodes=nodes, horizon=horizon), law, grid)

    dig = _digest(kind, sorted(params.items()))
    if kind == "duality":
        f, g = operands
        beta, ell, m = p["beta"], p["l"], p["m"]
        lhs = abs(grid.integrate(f * g))
        rhs = norm(f, beta, ell, m) * norm(g, -beta, _conj(ell), _conj(m))
        return MarginReport(kind, lhs, rhs, dig)
    if kind == "young":
        f, g = operands
        ell, l1, l2 = p["l"], p["l1"], p["l2"]
        lhs_e = 1 + (0 if ell == INF else 1 / ell)
        rhs_e = (0 if l1 == INF else 1 / l1) + (0 if l2 == INF else 1 / l2)
        if abs(lhs_e - rhs_e) > 1e-12:
            raise ParameterError("young-exponents violated: need 1 + 1/l = 1/l1 + 1/l2")
        inv = lambda x: 0.0 if x == INF else 1.0 / x
        if inv(p["m"]) > inv(p["m1"]) + inv(p["m2"]) + 1e-12:
            raise ParameterError("young-exponents violated: need 1/m <= 1/m1 + 1/m2")
        beta, delta = p["beta"], p.get("delta", 0.0)
        conv = grid.convolve(f, g)
        lhs = norm(conv, beta, ell, p["m"])
        rhs = norm(f, beta - delta, l1, p["m1"]) * norm(g, delta, l2, p["m2"])
        return MarginReport(kind, lhs, rhs, dig)
    if kind == "product":
        f, g = operands
        beta, rho = p["beta"], p["rho"]
        if not rho > abs(beta):
            raise ParameterError(f"product-rule violated: need rho > max(beta, -beta) = {abs(beta):g}, got rho = {rho:g}")
        lhs = norm(f * g, beta, p["l"], p["m"])
        rhs = norm(f, rho, INF, INF) * norm(g, beta, p["l"], p["m"])
        return MarginReport(kind, lhs, rhs, dig)
    if kind == "embedding":
        (f,) = operands
        ell = p["l"]
        side = p.get("side", "lower")
        if side == "lower":
            return MarginReport(kind, lebesgue_norm(f, ell, grid), norm(f, 0.0, ell, 1.0), dig, "L^l <= B^0_{l,1}")
        return MarginReport(kind, norm(f, 0.0, ell, INF), lebesgue_norm(f, ell, grid), dig, "B^0_{l,inf} <= L^l")
    raise ParameterError(f"unknown inequality kind {kind!r}")


# --------------------------------------------------------------------------
# Gronwall


@dataclass(frozen=True)
class GronwallInput:
    """Data of the singular discrete Gronwall inequality.

    f(t) <= kappa + lam t^{a1} int_h^{h v t} f(tau_s) s^{-a1} (t - s)^{-a2} ds,
    with ``h = T / N``.
    """

    kappa: float
    lam: float
    a1: float
    a2: float
    T: float
    N: int = 8

    def __post_init__(self):
        errs = conditions.gronwall_exponents(self.a1, self.a2)
        if errs:
            raise ParameterError("; ".join(e.message for e in errs))
        if self.kappa < 0 or self.lam < 0:
            raise ParameterError("kappa and lam must be non-negative")
        if not self.T > 0 or self.N < 1:
            raise ParameterError("T must be positive and N >= 1")

    @property
    def h(self):
        return self.T / self.N


def gronwall_constant(inp: GronwallInput) -> float:
    """Constant C(lam, a1, a2, T) with sup f <= C kappa, independent of h.

    Built constructively: Lambda = lam max(1, B(1 - a1, 1 - a2)), window theta
    with Lambda 2^{a1} theta^{1-a2} / (1 - a2) = 1/2, then a geometric
    recursion over the floor(T / theta) + 1 windows.
    """
    if inp.lam == 0:
        return 1.0
    a1, a2, T = inp.a1, inp.a2, inp.T
    Lam = inp.lam * max(1.0, special.beta(1 - a1, 1 - a2))
    log_theta = (math.log(1 - a2) - math.log(2 * Lam * 2 ** a1)) / (1 - a2)
    theta = math.exp(min(log_theta, 700.0))
    if T <= theta:
        return 2.0
    J = math.floor(T / theta)
    Lt = max(1.0, 2 * Lam * T ** (1 - a2))
    if Lt == 1.0:
        return 2.0 * (J + 1)
    if (J + 1) * math.log(Lt) > 700:
        return math.inf  # honest but useless: the window recursion overflows
    return 2.0 * (Lt ** (J + 1) - 1) / (Lt - 1)


def _window_integral(a, b, t, a1, a2):
    # int_a^b s^{-a1} (t - s)^{-a2} ds for 0 <= a <= b <= t
    if b <= a:
        return 0.0
    B = special.beta(1 - a1, 1 - a2)
    ia = special.betainc(1 - a1, 1 - a2, min(a / t, 1.0))
    ib = special.betainc(1 - a1, 1 - a2, min(b / t, 1.0))
    return t ** (1 - a1 - a2) * B * (ib - ia)


def gronwall_extremal(inp: GronwallInput, sub=8):
    """Largest f allowed by the inequality (equality case), on a fine time mesh.

    Grid values are computed by a forward sweep (the right-hand side only
    involves earlier grid values); ``sub`` points per step probe the sup
    between grid times.  Returns (times, values).
    """
    N, h = inp.N, inp.h
    a1, a2, lam, kap = inp.a1, inp.a2, inp.lam, inp.kappa
    grid_vals = np.zeros(N + 1)

    def rhs(t, upto):
        acc = 0.0
        for j in range(1, upto + 1):
            lo = j * h
            if lo >= t:
                break
            acc += grid_vals[j] * _window_integral(lo, min((j + 1) * h, t), t, a1, a2)
        return kap + lam * t ** a1 * acc

    grid_vals[0] = kap
    for k in range(1, N + 1):
        grid_vals[k] = rhs(k * h, k - 1)
    ts, vs = [], []
    for k in range(N):
        for i in range(sub):
            t = (k + i / sub) * h
            ts.append(t)
            vs.append(grid_vals[k] if i == 0 else rhs(t, k))
    ts.append(inp.T)
    vs.append(grid_vals[N])
    return np.array(ts), np.array(vs)


def gronwall_iterate(inp: GronwallInput, tol=1e-12, cap=10_000):
    """Picard iteration of the integral operator started from f = kappa.

    The operator is applied to the whole grid function until it stabilises;
    returns the sup of the limit (equals the extremal solution's sup).
    """
    N, h = inp.N, inp.h
    a1, a2, lam, kap = inp.a1, inp.a2, inp.lam, inp.kappa
    W = np.zeros((N + 1, N + 1))
    for k in range(1, N + 1):
        t = k * h
        for j in range(1, k):
            W[k, j] = lam * t ** a1 * _window_integral(j * h, (j + 1) * h, t, a1, a2)
    f = np.full(N + 1, kap)
    for _ in range(cap):
        g = kap + W @ f
        if np.max(np.abs(g - f)) <= tol * max(1.0, np.max(np.abs(g))):
            f = g
            break
        f = g
    return float(np.max(f))
