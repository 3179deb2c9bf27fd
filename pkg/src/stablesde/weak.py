"""Weak errors, theoretical rates and log-log rate regression."""
from dataclasses import dataclass, field
import hashlib
import math

import numpy as np
from scipy import stats

from . import conditions
from .besov import BesovParams, thermic_norm
from .drift import Drift, Regularity
from .duhamel import (DensityField, VolterraConfig, density_error_norm, solve_scheme_density,
                      solve_sde_density)
from .exceptions import (AdmissibilityError, ConfigurationError, InsufficientSignalError,
                         ParameterError, ResolutionError)
from .noise import SpatialGrid, StableLaw
from .schemes import SchemeConfig, simulate_batch, simulate_coupled
from .spectral import FourierSeries, besov_series, weierstrass_series

INF = math.inf
SETTINGS = ("lebesgue", "lebesgue-sum", "hoelder", "besov")


class TestFunction:
    """Test function for weak errors.

    Use the constructors :meth:`smooth`, :meth:`holder`, :meth:`besov` and
    :meth:`tabulated`.
    """

    __test__ = False  # not a pytest class

    def __init__(self, kind, series: FourierSeries = None, grid: SpatialGrid = None, values=None,
                 regularity: Regularity = Regularity()):
        self.kind = kind
        self.series = series
        self.grid = grid
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.regularity = regularity

    @classmethod
    def smooth(cls, freqs, amps, phases=None, const=0.0):
        return cls("smooth", FourierSeries(freqs, amps, phases, const), regularity=Regularity(INF, INF, INF, 1.0))

    @classmethod
    def holder(cls, beta, base=2.0, levels=8, seed=0):
        if not 0 < beta < 1:
            raise ParameterError("Hoelder test function needs beta in (0, 1)")
        return cls("holder", weierstrass_series(beta, base, levels, seed), regularity=Regularity(INF, INF, INF, beta))

    @classmethod
    def besov(cls, beta, modes=16, seed=0, p=INF, q=INF, base_frequency=1.0):
        return cls("besov", besov_series(beta, modes, seed, base_frequency), regularity=Regularity(p, q, INF, beta))

    @classmethod
    def from_series(cls, series: FourierSeries, regularity=Regularity(INF, INF, INF, 1.0)):
        return cls("smooth", series, regularity=regularity)

    @classmethod
    def tabulated(cls, grid: SpatialGrid, values, regularity=Regularity()):
        return cls("tabulated", grid=grid, values=values, regularity=regularity)

    @property
    def spectral(self):
        return self.series is not None

    def __call__(self, x):
        if self.spectral:
            return self.series(x)
        x = np.asarray(x, dtype=float)
        L = self.grid.half_width
        xw = np.mod(x + L, 2 * L) - L
        return np.interp(xw, self.grid.nodes, self.values, period=2 * L)


def theoretical_rate(setting, alpha, d=1, p=INF, theta=INF, beta=0.0, eps=0.0, pieces=None):
    """Weak-error rate predicted for the setting.

    lebesgue: (alpha - 1)/alpha - 1/theta.
    lebesgue-sum: (alpha - 1)/alpha - 1/theta_min, ``pieces`` = [(p_i, theta_i)].
    hoelder: 1 - (1 - 2 beta)_+ / alpha (log factor at beta = 1/2, see :func:`rate_log_factor`).
    besov: (gamma - eps)/alpha with gamma = alpha - 1 + 2 beta - d/p - alpha/theta.

    Raises ``AdmissibilityError`` carrying the violated inequality.
    """
    inv = lambda v: 0.0 if v == INF else 1.0 / v
    errs = conditions.alpha_range(alpha)
    if setting == "lebesgue":
        errs += conditions.krylov_rockner(alpha, d, p, theta)
        rate = (alpha - 1) / alpha - inv(theta)
    elif setting == "lebesgue-sum":
        if not pieces:
            raise ParameterError("lebesgue-sum needs the list of pieces (p_i, theta_i)")
        errs += conditions.lebesgue_sum(alpha, d, pieces)
        rate = (alpha - 1) / alpha - inv(min(t for _, t in pieces))
    elif setting == "hoelder":
        errs += conditions.hoelder_range(beta)
        rate = 1 - max(1 - 2 * beta, 0.0) / alpha
    elif setting == "besov":
        errs += conditions.besov_serrin(alpha, d, p, theta, beta)
        if not 0 <= eps:
            raise ParameterError("eps must be >= 0")
        rate = (conditions.gamma_besov(alpha, d, p, theta, beta) - eps) / alpha
    else:
        raise ParameterError(f"unknown setting {setting!r}")
    errs = [e for e in errs if e.severity == "error"]
    if errs:
        raise AdmissibilityError([e.message for e in errs])
    return rate


def rate_log_factor(setting, beta):
    """True when the bound carries an extra |ln h| factor."""
    return setting == "hoelder" and abs(beta - 0.5) < 1e-12


def pair_density_with_test(values, grid: SpatialGrid, phi: TestFunction):
    """``<Gamma, phi>`` for a density slice on the grid.

    Spectral test functions are paired mode by mode against the discrete
    Fourier transform of the density; tabulated ones by grid quadrature.
    """
    values = np.asarray(values, dtype=float)
    x = grid.nodes
    if not phi.spectral:
        return float(np.sum(values * phi(x)) * grid.spacing)
    s = phi.series
    if s.freqs.size and s.bandwidth >= grid.nyquist:
        raise ResolutionError(f"test function bandwidth {s.bandwidth:g} >= grid Nyquist {grid.nyquist:g}")
    mass = float(np.sum(values) * grid.spacing)
    if not s.freqs.size:
        return s.const * mass
    # gamma_hat(w) = sum_j Gamma_j exp(-i w x_j) dx
    ghat = np.exp(-1j * np.outer(s.freqs, x)) @ values * grid.spacing
    return float(s.const * mass + np.sum(s.amps * np.real(np.exp(1j * s.phases) * np.conj(ghat))))


@dataclass
class WeakErrorEstimate:
    value: float
    stderr: float
    pathway: str
    reference: str

    @property
    def abs(self):
        return abs(self.value)


def _ref_spec(reference):
    if isinstance(reference, str):
        if reference == "duhamel":
            return "duhamel", None
        if reference.startswith("fine-scheme"):
            return "fine-scheme", None
    if isinstance(reference, (tuple, list)) and reference[0] == "fine-scheme":
        return "fine-scheme", float(reference[1])
    raise ConfigurationError(f"unknown reference {reference!r}")


def weak_error(config: SchemeConfig, drift: Drift, phi: TestFunction, reference="duhamel", M=None,
               grid: SpatialGrid = None, volterra: VolterraConfig = None, reference_field=None,
               pathway=None, workers=1, ref_factor=16):
    """Weak error ``E phi(X_T^h) - reference`` with a standard error.

    Parameters
    ----------
    reference : 'duhamel' or ('fine-scheme', h_ref)
    M : int, optional
        Monte Carlo paths; when None the density pathway is used (d = 1).
    pathway : {'density', 'mc'}, optional
        Overrides the default choice.
    ref_factor : int
        Refinement used for 'fine-scheme' when h_ref is not given.
    """
    kind, h_ref = _ref_spec(reference)
    T, h = config.T, config.h
    if pathway is None:
        pathway = "density" if M is None else "mc"
    factor = None
    if kind == "fine-scheme":
        h_ref = h / ref_factor if h_ref is None else h_ref
        factor = h / h_ref
        if factor < 4 - 1e-12 or abs(factor - round(factor)) > 1e-9:
            raise ConfigurationError(f"reference step {h_ref:g} must be h / k with integer k >= 4 (h = {h:g})")
        factor = int(round(factor))
    if pathway == "density":
        if grid is None:
            raise ConfigurationError("density pathway needs a grid")
        fh = solve_scheme_density(config.law, drift, config, grid, times=[T])
        if kind == "duhamel":
            if reference_field is None:
                if volterra is None:
                    raise ConfigurationError("duhamel reference needs a VolterraConfig")
                reference_field = solve_sde_density(config.law, drift, float(config.start()[0]), T, volterra)
            ref = pair_density_with_test(reference_field.at(T), grid, phi)
        else:
            fr = solve_scheme_density(config.law, drift, config.refined(factor), grid, times=[T])
            ref = pair_density_with_test(fr.at(T), grid, phi)
        val = pair_density_with_test(fh.at(T), grid, phi) - ref
        return WeakErrorEstimate(val, 0.0, "density", kind)
    if M is None:
        raise ConfigurationError("Monte Carlo pathway needs M")
    if kind == "duhamel":
        if reference_field is None:
            if volterra is None:
                raise ConfigurationError("duhamel reference needs a VolterraConfig")
            reference_field = solve_sde_density(config.law, drift, float(config.start()[0]), T, volterra)
        ref = pair_density_with_test(reference_field.at(T), reference_field.grid, phi)
        xt = simulate_batch(config, drift, M, workers=workers, keep_paths=False).terminal[:, 0]
        v = phi(xt)
        return WeakErrorEstimate(float(v.mean() - ref), float(v.std(ddof=1) / math.sqrt(M)), "mc", kind)
    xc, xf = simulate_coupled(config, drift, M, factor, workers=workers)
    diff = phi(xc[:, 0]) - phi(xf[:, 0])
    return WeakErrorEstimate(float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(M)), "mc", kind)


def ensemble_weak_error(values_h, values_ref, grid, tests):
    """Root mean square of ``<Gamma^h - Gamma, phi_i>`` over a family of test functions."""
    d = np.asarray(values_h) - np.asarray(values_ref)
    errs = np.array([pair_density_with_test(d, grid, phi) for phi in tests])
    return float(np.sqrt(np.mean(errs ** 2))), errs


# --------------------------------------------------------------------------
# regression


@dataclass
class RateReport:
    """Fitted log-log slope of errors against h."""

    hs: np.ndarray
    errors: np.ndarray
    stderrs: np.ndarray
    slope: float
    ci: tuple
    intercept: float
    residuals: np.ndarray
    rate_theory: float = math.nan
    setting: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)

    @property
    def ci_lo(self):
        return self.ci[0]

    @property
    def ci_hi(self):
        return self.ci[1]

    def digest(self):
        return hashlib.sha256(repr(sorted(self.setting.items())).encode()).hexdigest()[:12]

    def to_csv(self, path):
        cols = ("setting", "alpha", "d", "p", "theta", "beta", "h", "error", "stderr",
                "slope", "ci_lo", "ci_hi", "rate_theory")
        s = self.setting
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for h, e, se in zip(self.hs, self.errors, self.stderrs):
                row = [s.get("setting", ""), s.get("alpha", ""), s.get("d", 1), s.get("p", INF),
                       s.get("theta", INF), s.get("beta", 0.0), h, e, se, self.slope, self.ci[0],
                       self.ci[1], self.rate_theory]
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


def rate_regression(hs, errors, stderrs=None, rate_theory=math.nan, setting=None, min_levels=4):
    """Weighted least squares of log(error) on log(h).

    Levels whose error is not above twice its standard error are dropped (and
    listed in ``dropped``).  Weights are ``(error / stderr)^2`` when standard
    errors are positive, uniform otherwise.  The 95% interval uses Student's
    t with ``k - 2`` degrees of freedom.
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    stderrs = np.zeros_like(errors) if stderrs is None else np.asarray(stderrs, dtype=float)
    keep = (errors > 2 * stderrs) & (errors > 0)
    dropped = [f"h={h:g}: error {e:.3g} not above 2 sigma ({2 * s:.3g})"
               for h, e, s, k in zip(hs, errors, stderrs, keep) if not k]
    if keep.sum() < min_levels:
        raise InsufficientSignalError(f"only {int(keep.sum())} levels above the noise floor (need {min_levels})")
    x = np.log(hs[keep])
    y = np.log(errors[keep])
    se = stderrs[keep]
    if np.all(se > 0):
        w = (errors[keep] / se) ** 2
    else:
        w = np.ones_like(x)
    X = np.column_stack([np.ones_like(x), x])
    XtW = X.T * w
    cov0 = np.linalg.inv(XtW @ X)
    coef = cov0 @ (XtW @ y)
    res = y - X @ coef
    k = x.size
    s2 = float(np.sum(w * res ** 2) / (k - 2)) if k > 2 else 0.0
    se_slope = math.sqrt(max(s2 * cov0[1, 1], 0.0))
    tq = stats.t.ppf(0.975, k - 2) if k > 2 else math.inf
    slope = float(coef[1])
    return RateReport(hs[keep], errors[keep], stderrs[keep], slope,
                      (slope - tq * se_slope, slope + tq * se_slope), float(coef[0]), res,
                      rate_theory, dict(setting or {}), dropped)


# --------------------------------------------------------------------------
# density rate studies


@dataclass
class StudyResult:
    report: RateReport
    metrics: dict
    fields: dict = field(default_factory=dict)


def function_family(kind, beta, count=64, seed0=1000, **kw):
    """Seeded ensemble of test functions of one class."""
    if kind == "holder":
        return [TestFunction.holder(beta, seed=seed0 + i, **kw) for i in range(count)]
    if kind == "besov":
        return [TestFunction.besov(beta, seed=seed0 + i, **kw) for i in range(count)]
    raise ParameterError(f"unknown test family {kind!r}")


def density_rate_study(law: StableLaw, drift: Drift, variant, ns, grid: SpatialGrid,
                       volterra_steps=4096, T=1.0, metric="l1", rho=1.0, tests=None,
                       dual_beta=None, B=1.0, x0=0.0, setting=None, rate_theory=math.nan,
                       picard_tol=1e-13, reference_field=None):
    """Errors of the scheme densities against the Duhamel density over a ladder of n.

    Parameters
    ----------
    metric : {'l1', 'lrho', 'rms'}
        'lrho': density error in L^rho; 'rms': ensemble weak error over ``tests``.
    dual_beta : float, optional
        Also report the thermic B^{-dual_beta}_{1,1} norm of the density error.
    """
    if reference_field is None:
        vc = VolterraConfig(grid, steps=volterra_steps, tol=picard_tol)
        reference_field = solve_sde_density(law, drift, x0, T, vc)
    ref = reference_field.at(T)
    rows = {"l1": [], "lrho": [], "rms": [], "dual": []}
    hs = []
    for n in ns:
        cfg = SchemeConfig(variant, n, T, law, B=B, x0=x0)
        f = solve_scheme_density(law, drift, cfg, grid, times=[T])
        v = f.at(T)
        hs.append(cfg.h)
        rows["l1"].append(float(np.sum(np.abs(v - ref)) * grid.spacing))
        rows["lrho"].append(density_error_norm(f, _as_field(grid, T, ref), T, rho))
        if tests:
            rows["rms"].append(ensemble_weak_error(v, ref, grid, tests)[0])
        if dual_beta is not None:
            rows["dual"].append(thermic_norm(v - ref, BesovParams(1, 1, -dual_beta), law, grid))
    errs = rows["lrho" if metric == "lrho" else metric]
    rep = rate_regression(hs, errs, None, rate_theory, setting)
    metrics = {}
    for k, v in rows.items():
        if len(v) == len(hs) and all(e > 0 for e in v):
            metrics[k] = rate_regression(hs, v, None, rate_theory, setting).slope
    return StudyResult(rep, {"slopes": metrics, "errors": rows, "hs": hs,
                             "mass_deviation": float(abs(reference_field.mass(T) - 1.0))},
                       {"reference": reference_field})


def _as_field(grid, T, values):
    return DensityField(grid, [T], [values], "sde-duhamel")
