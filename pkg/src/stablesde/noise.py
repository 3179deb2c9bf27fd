"""Isotropic stable driving noise: samplers, spectral heat kernel, profiles.

Conventions
-----------
For ``alpha < 2`` the characteristic exponent is ``psi(xi) = |xi|**alpha``.
For ``alpha == 2`` the noise is a standard Brownian motion, so
``psi(xi) = |xi|**2 / 2`` and the kernel at time ``t`` is the Gaussian with
covariance ``t * I``.  The two regimes are deliberately not glued together.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special

from .exceptions import ParameterError, ResolutionError

DEFAULT_BUDGET = 1e-8


@dataclass(frozen=True)
class StableLaw:
    """Isotropic stable law on R^d.

    Parameters
    ----------
    alpha : float
        Stability index in (1, 2].
    dim : int
        Space dimension.
    """

    alpha: float
    dim: int = 1

    def __post_init__(self):
        a = float(self.alpha)
        if not (1.0 < a <= 2.0) or not np.isfinite(a):
            raise ParameterError(f"stability index must satisfy α ∈ (1,2], got {self.alpha}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def brownian(self) -> bool:
        return self.alpha == 2.0

    @property
    def exponent_convention(self) -> str:
        return "brownian" if self.brownian else "pure_jump"

    def psi(self, r):
        """Characteristic exponent as a function of the frequency norm ``r``."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.brownian:
            return 0.5 * r * r
        return r ** self.alpha

    def char_function(self, t, r):
        return np.exp(-t * self.psi(r))

    def tail_constant(self) -> float:
        """Constant A with p(1, x) ~ A |x|^{-d-alpha} as |x| -> oo (alpha < 2)."""
        a, d = self.alpha, self.dim
        if self.brownian:
            return 0.0
        return (a * 2.0 ** (a - 1) * math.pi ** (-d / 2 - 1) * math.sin(math.pi * a / 2)
                * math.gamma((d + a) / 2) * math.gamma(a / 2))


def generator_multiplier(law: StableLaw, xi):
    """Fourier symbol ``-psi(xi)`` of the generator.

    ``xi`` is a frequency vector (last axis of length ``dim``) or, in dimension
    one, an array of scalar frequencies.
    """
    xi = np.asarray(xi, dtype=float)
    if law.dim > 1 or (xi.ndim > 0 and xi.shape[-1:] == (law.dim,) and law.dim > 1):
        r = np.linalg.norm(xi, axis=-1)
    else:
        r = np.abs(xi)
    return -law.psi(r)


@dataclass(frozen=True)
class BarPProfile:
    """Dominating profile used in Aronson type bounds.

    ``variance_factor`` is the c > 1 only used for alpha = 2.
    """

    law: StableLaw
    variance_factor: float = 2.0
    normalization: float = 1.0

    def __post_init__(self):
        if not self.variance_factor > 1.0:
            raise ParameterError("variance_factor must be > 1")
        if not self.normalization > 0.0:
            raise ParameterError("normalization must be > 0")


def _radius(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1:
        if x.ndim > 0 and x.shape[-1] == 1 and x.ndim > 1:
            x = x[..., 0]
        return np.abs(x)
    return np.linalg.norm(x, axis=-1)


def bar_p(profile: BarPProfile, t, x):
    """Evaluate the dominating profile at time ``t`` and point(s) ``x``."""
    law = profile.law
    d, a = law.dim, law.alpha
    t = float(t)
    if t <= 0:
        raise ParameterError("t must be positive")
    r = _radius(x, d)
    if law.brownian:
        s = profile.variance_factor * t
        val = (2 * math.pi * s) ** (-d / 2) * np.exp(-r * r / (2 * s))
    else:
        val = t ** (-d / a) * (1.0 + t ** (-1.0 / a) * r) ** (-(d + a))
    return profile.normalization * val


# ---------------------------------------------------------------------------
# sampling


def sample_positive_stable(index, rng, size=None):
    """One-sided stable variables with Laplace transform ``exp(-lam**index)``.

    Uses Kanter's representation (the totally skewed case of the
    Chambers-Mallows-Stuck transform).

    Parameters
    ----------
    index : float
        Stability index in (0, 1).
    rng : numpy.random.Generator
    size : int or tuple, optional
    """
    a = float(index)
    if not (0.0 < a < 1.0):
        raise ParameterError(f"index must lie in (0, 1), got {index}")
    u = rng.uniform(0.0, math.pi, size=size)
    e = rng.standard_exponential(size=size)
    s1 = np.sin(a * u) / np.sin(u) ** (1.0 / a)
    s2 = (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    return s1 * s2


def sample_increment(law: StableLaw, dt, rng, size=None, gaussian_rng=None):
    """Draw increments ``Z_{t+dt} - Z_t``.

    For alpha < 2 the increment is ``dt**(1/alpha) * sqrt(2 A) * G`` with A
    positive (alpha/2)-stable and G standard normal in R^d, which gives the
    characteristic function ``exp(-dt |xi|^alpha)``.

    Parameters
    ----------
    law : StableLaw
    dt : float
    rng : numpy.random.Generator
        Used for the subordinator (and for the Gaussian factor when
        ``gaussian_rng`` is not given).
    size : int, optional
        Number of increments; the result has shape ``(size, dim)``.
    gaussian_rng : numpy.random.Generator, optional
        Separate stream for the Gaussian factor.

    Returns
    -------
    ndarray, shape (size, dim) or (dim,)
    """
    dt = float(dt)
    if not dt > 0:
        raise ParameterError("dt must be positive")
    g_rng = rng if gaussian_rng is None else gaussian_rng
    n = 1 if size is None else int(size)
    g = g_rng.standard_normal((n, law.dim))
    if law.brownian:
        z = math.sqrt(dt) * g
    else:
        A = sample_positive_stable(law.alpha / 2.0, rng, size=n)
        z = dt ** (1.0 / law.alpha) * np.sqrt(2.0 * A)[:, None] * g
    return z[0] if size is None else z


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Periodic grid on [-L, L)^d with N points per axis (N a power of two)."""

    dim: int
    half_width: float
    points: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError("grid dim must be 1 or 2")
        if not self.half_width > 0:
            raise ParameterError("half_width must be positive")
        N = int(self.points)
        if N < 8 or N & (N - 1):
            raise ParameterError("points must be a power of two >= 8")
        object.__setattr__(self, "points", N)
        object.__setattr__(self, "half_width", float(self.half_width))

    def __eq__(self, other):
        return (isinstance(other, SpatialGrid) and self.dim == other.dim
                and self.points == other.points and self.half_width == other.half_width)

    def __hash__(self):
        return hash((self.dim, self.half_width, self.points))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def cell(self) -> float:
        return self.spacing ** self.dim

    @property
    def nodes(self):
        """1d array of axis nodes ``-L + j dx``."""
        return -self.half_width + self.spacing * np.arange(self.points)

    @property
    def shape(self):
        return (self.points,) * self.dim

    @property
    def frequencies(self):
        """1d array of angular frequencies in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.points, self.spacing)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def mesh(self):
        if self.dim == 1:
            return self.nodes
        return np.stack(np.meshgrid(self.nodes, self.nodes, indexing="ij"), axis=-1)

    def radius(self):
        """|x| at each node."""
        if self.dim == 1:
            return np.abs(self.nodes)
        x = self.nodes
        return np.sqrt(x[:, None] ** 2 + x[None, :] ** 2)

    def freq_norm(self):
        """|xi| at each spectral node (FFT ordering)."""
        k = self.frequencies
        if self.dim == 1:
            return np.abs(k)
        return np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)

    def freq_axes(self):
        """Angular frequency arrays broadcastable along each axis."""
        k = self.frequencies
        if self.dim == 1:
            return [k]
        return [k[:, None], k[None, :]]

    def _phase(self):
        if "phase" not in self._cache:
            axes = self.freq_axes()
            ph = np.exp(1j * axes[0] * self.half_width)
            for ax in axes[1:]:
                ph = ph * np.exp(1j * ax * self.half_width)
            self._cache["phase"] = ph
        return self._cache["phase"]

    def forward(self, f):
        """Trapezoid approximation of ``int f(x) exp(-i xi.x) dx`` on the mesh."""
        f = np.asarray(f)
        return self.cell * self._phase() * np.fft.fftn(f, axes=tuple(range(-self.dim, 0)))

    def inverse(self, F, real=True):
        out = np.fft.ifftn(F / self._phase(), axes=tuple(range(-self.dim, 0))) / self.cell
        return out.real if real else out

    def integrate(self, f):
        return float(np.sum(f) * self.cell)

    def convolve(self, f, g):
        """Periodic convolution ``f * g`` evaluated on the mesh."""
        F = self.forward(f)
        G = self.forward(g)
        # forward(f*g) = forward(f) forward(g) when the kernel is centred at 0
        return self.inverse(F * G)

    def boundary_mass(self, f, band=0.1):
        """Mass of ``|f|`` within ``band * L`` of the boundary."""
        r = np.abs(self.nodes)
        edge = r >= (1 - band) * self.half_width
        if self.dim == 1:
            return float(np.sum(np.abs(f[edge])) * self.cell)
        mask = edge[:, None] | edge[None, :]
        return float(np.sum(np.abs(f[mask])) * self.cell)


def periodization_error(law: StableLaw, t, L):
    """Pointwise estimate of the error committed by wrapping p(t,.) on [-L,L)^d."""
    t = float(t)
    d = law.dim
    if law.brownian:
        # nearest images sit at distance >= L from every point of the box
        return 2.0 * d * (2 * math.pi * t) ** (-d / 2) * math.exp(-L * L / (2 * t))
    s = d + law.alpha
    odd_zeta = (1 - 2.0 ** (-s)) * special.zeta(s)
    return 2.0 * d * law.tail_constant() * t * L ** (-s) * odd_zeta


def spectral_truncation(law: StableLaw, t, grid: SpatialGrid, order=0, theta=0):
    """Size of the multiplier at the Nyquist frequency."""
    kn = grid.nyquist
    return kn ** order * law.psi(kn) ** theta * math.exp(-t * law.psi(kn)) * kn ** grid.dim


def grid_for(law: StableLaw, t_min, t_max=None, budget=DEFAULT_BUDGET, dim=None,
             max_points=2 ** 20, order=0):
    """Pick a periodic grid resolving p(t,.) for t in [t_min, t_max].

    The half width is chosen from the heavy tail (or the Gaussian tail) so that
    the periodization error at ``t_max`` stays below ``budget``; the spacing
    from the spectral decay at ``t_min``.
    """
    dim = law.dim if dim is None else dim
    t_max = t_min if t_max is None else t_max
    if not (0 < t_min <= t_max):
        raise ParameterError("need 0 < t_min <= t_max")
    sub = StableLaw(law.alpha, dim)
    L = 4.0 * t_max ** (1 / law.alpha)
    while periodization_error(sub, t_max, L) > budget / 4:
        L *= 1.25
    # smallest Nyquist frequency with negligible spectrum at t_min
    kn = 1.0
    while True:
        val = kn ** (order + dim) * math.exp(-t_min * sub.psi(kn))
        if val < budget / 4 and kn > 4:
            break
        kn *= 1.1
    N = 8
    while np.pi / (2 * L / N) < kn:
        N *= 2
    if N > max_points:
        raise ResolutionError(
            f"grid for t in [{t_min}, {t_max}] needs {N} points per axis (> {max_points}); "
            "raise the budget or t_min")
    return SpatialGrid(dim, L, N)


def heat_kernel_grid(law: StableLaw, t, grid: SpatialGrid, derivative=0, time_derivative=0,
                     budget=DEFAULT_BUDGET, check=True):
    """Spectral evaluation of ``d_t^theta d^a p(t, x_j)`` on a periodic grid.

    Parameters
    ----------
    law : StableLaw
    t : float
    grid : SpatialGrid
    derivative : int or tuple of int
        Spatial multi-index (an int is the order along the first axis).
    time_derivative : {0, 1}
    budget : float
        Allowed pointwise aliasing error (periodization plus spectral cut).
    check : bool
        Raise ``ResolutionError`` when the budget is exceeded.
    """
    t = float(t)
    if not t > 0:
        raise ParameterError("t must be positive")
    if law.dim != grid.dim:
        raise ParameterError("law and grid dimensions differ")
    if isinstance(derivative, (int, np.integer)):
        a = (int(derivative),) + (0,) * (grid.dim - 1)
    else:
        a = tuple(int(v) for v in derivative)
    if len(a) != grid.dim or min(a) < 0 or sum(a) > 3:
        raise ParameterError("derivative must be a multi-index with |a| <= 3")
    if time_derivative not in (0, 1):
        raise ParameterError("time_derivative must be 0 or 1")
    if check:
        leak = periodization_error(law, t, grid.half_width)
        spec = spectral_truncation(law, t, grid, order=sum(a), theta=time_derivative)
        if leak > budget:
            raise ResolutionError(
                f"aliasing estimate {leak:.2e} exceeds budget {budget:.0e} at t={t}; "
                f"increase L (now {grid.half_width:g})")
        if spec > budget:
            raise ResolutionError(
                f"spectral truncation {spec:.2e} exceeds budget {budget:.0e} at t={t}; "
                f"increase N (now {grid.points})")
    psi = law.psi(grid.freq_norm())
    mult = np.exp(-t * psi).astype(complex)
    if time_derivative:
        mult = mult * (-psi)
    for ax, order in zip(grid.freq_axes(), a):
        if order:
            k = ax.copy()
            if order % 2 == 1:
                # odd derivatives: drop the unpaired Nyquist mode
                k = np.where(np.isclose(np.abs(k), grid.nyquist), 0.0, k)
            mult = mult * (1j * k) ** order
    return grid.inverse(mult)


# ---------------------------------------------------------------------------
# pointwise bounds


@dataclass
class KernelBoundReport:
    """Sup of |d_t^theta d^a p| / bound over a window, per time."""

    ratios: dict
    window: float
    exponent_shift: float = 0.0

    @property
    def sup(self) -> float:
        return max(self.ratios.values()) if self.ratios else 0.0

    @property
    def empty(self) -> bool:
        return not self.ratios

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.sup) and self.sup < 1e3)


def kernel_bound(law: StableLaw, t, r, order=0, theta=0, exponent_shift=0.0, c=2.0):
    """Right-hand side of the pointwise derivative bound (without constant).

    alpha < 2: t^{-(theta+(|a|+d)/alpha)} (1 + t^{-1/alpha} r)^{-(d+alpha+|a|+shift)}.
    alpha = 2: t^{-(theta+|a|/2)} times the Gaussian profile with variance c t.
    """
    d, a = law.dim, law.alpha
    if law.brownian:
        s = c * t
        g = (2 * math.pi * s) ** (-d / 2) * np.exp(-r * r / (2 * s))
        if exponent_shift:
            g = g * (1 + r / math.sqrt(t)) ** (-exponent_shift)
        return t ** (-(theta + order / 2)) * g
    return (t ** (-(theta + (order + d) / a))
            * (1 + t ** (-1 / a) * r) ** (-(d + a + order + exponent_shift)))


def check_kernel_bounds(law: StableLaw, times, grid: SpatialGrid, order=0, theta=0,
                        window=0.25, exponent_shift=0.0, c=2.0, budget=1e-6):
    """Empirical constant in the pointwise heat-kernel derivative bounds.

    The supremum is taken over ``|x|_inf <= window * L`` to keep away from the
    periodic images, and only where the bound exceeds 1e-10 of its peak (below
    that the grid kernel is round-off).
    """
    if order > 2:
        raise ParameterError("order must be <= 2")
    ratios = {}
    r = grid.radius()
    if grid.dim == 1:
        inside = np.abs(grid.nodes) <= window * grid.half_width
    else:
        x = np.abs(grid.nodes) <= window * grid.half_width
        inside = x[:, None] & x[None, :]
    for t in times:
        if grid.dim == 1:
            a = order
        else:
            a = (order, 0)
        lhs = np.abs(heat_kernel_grid(law, t, grid, a, theta, budget=budget))
        rhs = kernel_bound(law, t, r, order, theta, exponent_shift, c)
        # where the bound sits below round-off of the spectral kernel the ratio is noise
        keep = inside & (rhs > 1e-10 * rhs[inside].max())
        ratios[float(t)] = float(np.max(lhs[keep] / rhs[keep]))
    return KernelBoundReport(ratios, window, exponent_shift)
