"""Config-driven experiments: parsing, validation, runners, manifests.

Config files are INI files (``configparser``) with one section per concern:
``[experiment]``, ``[law]``, ``[drift]``, ``[scheme]``, ``[grid]``,
``[solver]``, ``[test_function]``, ``[study]`` and kind-specific sections
(``[sample]``, ``[kernel]``, ``[besov]``, ``[inequality]``, ``[gronwall]``).
Any key can be overridden through the environment as
``STABLESDE_<SECTION>_<KEY>``.
"""
from dataclasses import dataclass, field
import configparser
import hashlib
import json
import math
import os
from pathlib import Path
import platform
import time

import numpy as np

from . import __version__, conditions
from .besov import (BesovParams, GronwallInput, check_inequality, gronwall_constant, gronwall_extremal,
                    thermic_norm, write_margin_csv)
from .drift import (BesovSpectral, ConstantDrift, FourierDrift, HolderSpectral, LebesguePower,
                    PowerProfile, Regularity, ZeroDrift)
from .duhamel import VolterraConfig, solve_scheme_density, solve_sde_density, verify_aronson
from .exceptions import (AdmissibilityError, ConfigurationError, ParameterError, StableSDEError)
from .noise import (BarPProfile, SpatialGrid, StableLaw, check_kernel_bounds, grid_for,
                    heat_kernel_grid, sample_increment)
from .rng import Role, stream
from .schemes import SchemeConfig, admissibility, simulate_batch, write_terminal_csv
from .weak import (TestFunction, density_rate_study, function_family, rate_regression,
                   theoretical_rate, weak_error)

KINDS = ("sample", "kernel-check", "besov-norm", "density", "weak-error", "rate-study",
         "inequality-check", "gronwall")
ENV_PREFIX = "STABLESDE_"
INF = math.inf


# --------------------------------------------------------------------------
# parsing


def _num(v):
    s = str(v).strip().lower()
    if s in ("inf", "infinity", "+inf", "oo"):
        return INF
    if s.endswith("pi"):
        head = s[:-2].strip().rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(s)


def _numlist(v):
    return [_num(x) for x in str(v).replace(";", ",").split(",") if x.strip()]


def _canon_value(v):
    s = str(v).strip()
    parts = [p.strip() for p in s.replace(";", ",").split(",")]
    try:
        return [repr(float(_num(p))) for p in parts] if len(parts) > 1 else repr(float(_num(s)))
    except ValueError:
        return s


@dataclass
class ExperimentConfig:
    """Parsed configuration (sections of string values) plus its source path."""

    sections: dict
    path: str = None

    @classmethod
    def load(cls, path, environ=None):
        cp = configparser.ConfigParser(interpolation=None)
        with open(path) as fh:
            cp.read_file(fh)
        sections = {s: dict(cp.items(s)) for s in cp.sections()}
        cfg = cls(sections, str(path))
        cfg.apply_env(os.environ if environ is None else environ)
        return cfg

    @classmethod
    def from_string(cls, text, environ=None):
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        cfg = cls({s: dict(cp.items(s)) for s in cp.sections()})
        cfg.apply_env(environ or {})
        return cfg

    def apply_env(self, environ):
        for k, v in environ.items():
            if not k.startswith(ENV_PREFIX):
                continue
            rest = k[len(ENV_PREFIX):].lower()
            for sec in sorted(self.sections, key=len, reverse=True):
                tag = sec.replace("-", "_").lower() + "_"
                if rest.startswith(tag):
                    self.sections[sec][rest[len(tag):]] = v
                    break
            else:
                sec, _, key = rest.partition("_")
                if key:
                    self.sections.setdefault(sec, {})[key] = v

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def num(self, section, key, default=None):
        v = self.get(section, key)
        return default if v is None else _num(v)

    def int(self, section, key, default=None):
        v = self.num(section, key)
        return default if v is None else int(v)

    def nums(self, section, key, default=None):
        v = self.get(section, key)
        return default if v is None else _numlist(v)

    @property
    def kind(self):
        return str(self.get("experiment", "kind", "")).strip().lower()

    @property
    def seed(self):
        return self.int("experiment", "seed", 0)

    def canonical(self):
        return {sec: {k: _canon_value(v) for k, v in sorted(items.items())}
                for sec, items in sorted(self.sections.items())}

    def digest(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# object builders


def build_law(cfg: ExperimentConfig):
    return StableLaw(cfg.num("law", "alpha", 2.0), cfg.int("law", "dim", 1))


def _profile(cfg):
    e = cfg.num("drift", "profile_exponent")
    return PowerProfile(e) if e else None


def build_drift(cfg: ExperimentConfig, law: StableLaw = None):
    fam = str(cfg.get("drift", "family", "zero")).strip().lower()
    theta = cfg.num("drift", "theta", INF)
    prof = _profile(cfg)
    if fam == "zero":
        return ZeroDrift(cfg.int("law", "dim", 1))
    if fam == "constant":
        return ConstantDrift(cfg.nums("drift", "value", [0.0]), profile=prof,
                             regularity=Regularity(INF, INF, theta, 0.0))
    if fam == "fourier":
        freqs = cfg.nums("drift", "freqs", [1.0])
        amps = cfg.nums("drift", "amps", [1.0] * len(freqs))
        phases = cfg.nums("drift", "phases", [0.0] * len(freqs))
        return FourierDrift(freqs, amps, phases, cfg.num("drift", "const", 0.0), profile=prof,
                            regularity=Regularity(cfg.num("drift", "p", INF), INF, theta, 0.0))
    if fam == "holder":
        return HolderSpectral(cfg.num("drift", "beta", 0.25), cfg.num("drift", "base", 2.0),
                              cfg.int("drift", "levels", 8), cfg.int("drift", "seed", 0), profile=prof)
    if fam == "besov":
        return BesovSpectral(cfg.num("drift", "beta", -0.15), cfg.int("drift", "modes", 16),
                             cfg.int("drift", "seed", 0), cfg.num("drift", "p", INF),
                             cfg.num("drift", "q", INF), cfg.num("drift", "base_frequency", 1.0),
                             profile=prof, theta=theta)
    if fam == "power":
        return LebesguePower(cfg.num("drift", "kappa", 1.0), cfg.num("drift", "delta", 0.5),
                             cfg.int("law", "dim", 1), cfg.num("drift", "r0", 1.0),
                             cfg.num("drift", "p_inner"), theta, profile=prof)
    raise ParameterError(f"unknown drift family {fam!r}")


def build_scheme(cfg: ExperimentConfig, law, n=None):
    return SchemeConfig(cfg.get("scheme", "variant", "hoelder"), n or cfg.int("scheme", "n", 16),
                        cfg.num("scheme", "t", 1.0), law, cfg.num("scheme", "b", 1.0),
                        cfg.num("scheme", "x0", 0.0), cfg.seed)


def build_grid(cfg: ExperimentConfig, law):
    if cfg.get("grid", "half_width") is None:
        t_min = cfg.num("grid", "t_min", 0.05)
        return grid_for(StableLaw(law.alpha, 1), t_min, cfg.num("scheme", "t", 1.0))
    return SpatialGrid(1, cfg.num("grid", "half_width"), cfg.int("grid", "points", 4096))


def build_tests(cfg: ExperimentConfig):
    fam = str(cfg.get("test_function", "family", "smooth")).strip().lower()
    count = cfg.int("test_function", "count", 1)
    seed = cfg.int("test_function", "seed", 1000)
    if fam == "smooth":
        freqs = cfg.nums("test_function", "freqs", [1.0])
        amps = cfg.nums("test_function", "amps", [1.0] * len(freqs))
        return [TestFunction.smooth(freqs, amps, cfg.nums("test_function", "phases", None))]
    if fam == "holder":
        return function_family("holder", cfg.num("test_function", "beta", 0.25), count, seed,
                               levels=cfg.int("test_function", "levels", 8))
    if fam == "besov":
        return function_family("besov", cfg.num("test_function", "beta", -0.15), count, seed,
                               modes=cfg.int("test_function", "modes", 16))
    raise ParameterError(f"unknown test function family {fam!r}")


# --------------------------------------------------------------------------
# validation


@dataclass
class Diagnostic:
    rule: str
    message: str
    lhs: float = math.nan
    rhs: float = math.nan
    severity: str = "error"

    def __str__(self):
        return f"[{self.severity}] {self.rule}: {self.message}"


def _from_violation(v):
    return Diagnostic(v.rule, v.message, v.lhs, v.rhs, v.severity)


def validate(cfg: ExperimentConfig):
    """Every violated hypothesis as a :class:`Diagnostic`; empty means runnable."""
    out = []
    kind = cfg.kind
    if kind not in KINDS:
        out.append(Diagnostic("kind", f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}"))
        return out
    try:
        alpha = cfg.num("law", "alpha", 2.0)
    except ValueError:
        return [Diagnostic("alpha-range", "alpha must be a number in (1, 2]")]
    out += [_from_violation(v) for v in conditions.alpha_range(alpha)]
    if out:
        return out
    try:
        law = build_law(cfg)
    except StableSDEError as e:
        return [Diagnostic("law", str(e))]
    if kind in ("density", "weak-error", "rate-study"):
        try:
            drift = build_drift(cfg, law)
            n = cfg.nums("study", "ladder", [cfg.num("scheme", "n", 16)])
            scheme = build_scheme(cfg, law, int(n[0]))
        except (StableSDEError, ValueError) as e:
            return out + [Diagnostic("construction", str(e))]
        out += [_from_violation(v) for v in admissibility(scheme, drift)]
        if isinstance(drift, LebesguePower):
            out += [_from_violation(v) for v in conditions.power_drift(law.alpha, drift.dim, drift.delta)
                    if v.rule not in {d.rule for d in out}]
        th = drift.regularity.theta
        nrm = drift.profile.lebesgue_norm(th, scheme.T) if not drift.time_constant else 1.0
        out += [_from_violation(v) for v in conditions.profile_integrability(nrm, th)]
        if law.dim != 1 and (kind == "density" or cfg.get("study", "pathway", "density") == "density"):
            out.append(Diagnostic("dimension", "density pathway is one dimensional"))
        if kind == "rate-study":
            ladder = cfg.nums("study", "ladder", [])
            if len(ladder) < 4:
                out.append(Diagnostic("ladder", f"rate study needs >= 4 step counts, got {len(ladder)}",
                                      len(ladder), 4))
            for v in ladder:
                try:
                    build_scheme(cfg, law, int(v))
                except StableSDEError as e:
                    out.append(Diagnostic("ladder", str(e)))
        try:
            build_grid(cfg, law)
        except StableSDEError as e:
            out.append(Diagnostic("grid-resolution", str(e)))
    if kind in ("weak-error", "rate-study") and cfg.get("study", "pathway", "density") == "mc":
        M = cfg.int("study", "m", 0)
        if M < 1:
            out.append(Diagnostic("paths", "Monte Carlo pathway needs M >= 1", M, 1))
    if kind == "gronwall":
        out += [_from_violation(v) for v in conditions.gronwall_exponents(
            cfg.num("gronwall", "a1", 0.0), cfg.num("gronwall", "a2", 0.0))]
    if kind == "sample" and cfg.int("sample", "m", 10000) < 1:
        out.append(Diagnostic("paths", "sample needs M >= 1"))
    return out


# --------------------------------------------------------------------------
# running


@dataclass
class Manifest:
    config_digest: str
    tool_version: str
    wall_clock: dict
    cell_seeds: dict
    outputs: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def cell_seed(seed, i):
    return int(np.random.SeedSequence([int(seed), int(i)]).generate_state(1)[0] % (2 ** 31))


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else repr(float(v)) for v in r) + "\n")


def _write_figure(path, rows, comment):
    # gnuplot-ready whitespace table: x y yerr
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n# x y yerr\n")
        for x, y, e in rows:
            fh.write(f"{float(x)!r} {float(y)!r} {float(e)!r}\n")


def _run_sample(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    M = cfg.int("sample", "m", 10000)
    dt = cfg.num("sample", "dt", 1.0)
    seeds["sample"] = cfg.seed
    z = sample_increment(law, dt, stream(cfg.seed, 0, 0, Role.SUBORDINATOR), size=M,
                         gaussian_rng=stream(cfg.seed, 0, 0, Role.GAUSSIAN))
    write_terminal_csv(z, out / "increments.csv")
    freqs = cfg.nums("sample", "frequencies", [0.25, 0.5, 1.0, 1.5, 2.0])
    rows, fig = [], []
    for xi in freqs:
        c = np.cos(xi * z[:, 0])
        emp, se = c.mean(), c.std(ddof=1) / math.sqrt(M)
        exact = math.exp(-dt * float(law.psi(xi)))
        rows.append((xi, emp, exact, se, (emp - exact) / se if se > 0 else 0.0))
        fig.append((xi, emp, se))
    _write_table(out / "charfun.csv", ("xi", "empirical", "exact", "stderr", "zscore"), rows)
    _write_figure(out / "charfun.dat", fig, "empirical characteristic function")
    summary["max_abs_zscore"] = max(abs(r[4]) for r in rows)
    return ["increments.csv", "charfun.csv", "charfun.dat"]


def _run_kernel(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    times = cfg.nums("kernel", "times", [0.1, 1.0])
    if cfg.get("grid", "half_width") is None:
        grid = grid_for(law, min(times), max(times), cfg.num("kernel", "budget", 1e-6), law.dim)
    else:
        grid = SpatialGrid(law.dim, cfg.num("grid", "half_width"), cfg.int("grid", "points", 1024))
    order = cfg.int("kernel", "order", 0)
    theta = cfg.int("kernel", "theta", 0)
    rep = check_kernel_bounds(law, times, grid, order, theta, budget=cfg.num("kernel", "budget", 1e-6))
    rows = [(t, r) for t, r in sorted(rep.ratios.items())]
    _write_table(out / "kernel_bounds.csv", ("t", "ratio"), rows)
    _write_figure(out / "kernel_bounds.dat", [(t, r, 0.0) for t, r in rows], "sup ratio vs t")
    summary.update(sup=rep.sup, passed=rep.passed)
    return ["kernel_bounds.csv", "kernel_bounds.dat"]


def _run_besov(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    grid = build_grid(cfg, law)
    params = BesovParams(cfg.num("besov", "l", 2.0), cfg.num("besov", "m", 2.0), cfg.num("besov", "beta", 0.0),
                         cfg.int("besov", "order"), cfg.num("besov", "horizon", 1.0), cfg.int("besov", "nodes", 96))
    target = str(cfg.get("besov", "field", "drift")).strip().lower()
    rows = []
    if target == "heat":
        for s in cfg.nums("besov", "times", [0.4, 0.2, 0.1]):
            f = heat_kernel_grid(law, s, grid, budget=cfg.num("besov", "budget", 1e-6))
            rows.append((s, thermic_norm(f, params, law, grid)))
    else:
        drift = build_drift(cfg, law)
        f = drift(0.0, grid.nodes)
        rows.append((0.0, thermic_norm(f, params, law, grid)))
    _write_table(out / "besov_norm.csv", ("s", "norm"), rows)
    _write_figure(out / "besov_norm.dat", [(s, v, 0.0) for s, v in rows], "thermic norm")
    summary["norms"] = [r[1] for r in rows]
    return ["besov_norm.csv", "besov_norm.dat"]


def _run_density(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    drift = build_drift(cfg, law)
    grid = build_grid(cfg, law)
    scheme = build_scheme(cfg, law)
    T = scheme.T
    vc = VolterraConfig(grid, cfg.int("solver", "steps", 4096), cfg.int("solver", "picard_cap", 50),
                        cfg.num("solver", "tol", 1e-13))
    f = solve_sde_density(law, drift, float(scheme.start()[0]), T, vc)
    f.to_csv(out / "density_sde.csv")
    g = solve_scheme_density(law, drift, scheme, grid, times=[T])
    g.to_csv(out / "density_scheme.csv")
    prof = BarPProfile(law)
    summary["aronson_constant"] = verify_aronson(f, prof).constant
    summary["mass_deviation"] = float(abs(f.mass(T) - 1))
    _write_figure(out / "density.dat", [(x, v, 0.0) for x, v in zip(grid.nodes, f.at(T))], "SDE density at T")
    return ["density_sde.csv", "density_sde.csv.json", "density_scheme.csv", "density_scheme.csv.json",
            "density.dat"]


def _run_weak(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    drift = build_drift(cfg, law)
    scheme = build_scheme(cfg, law)
    tests = build_tests(cfg)
    pathway = cfg.get("study", "pathway", "density")
    ref = cfg.get("study", "reference", "duhamel")
    M = cfg.int("study", "m") if pathway == "mc" else None
    grid = build_grid(cfg, law) if law.dim == 1 else None
    vc = VolterraConfig(grid, cfg.int("solver", "steps", 4096)) if grid is not None else None
    seeds["weak-error"] = scheme.seed
    rows = []
    for i, phi in enumerate(tests):
        est = weak_error(scheme, drift, phi, ref, M=M, grid=grid, volterra=vc, pathway=pathway, workers=workers)
        rows.append((i, scheme.h, est.value, est.stderr))
    _write_table(out / "weak_error.csv", ("test_id", "h", "error", "stderr"), rows)
    summary["errors"] = [r[2] for r in rows]
    return ["weak_error.csv"]


def _setting_of(variant, drift):
    return {"lebesgue": "lebesgue", "hoelder": "hoelder", "besov": "besov"}[variant]


def _run_rate(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    drift = build_drift(cfg, law)
    ladder = [int(v) for v in cfg.nums("study", "ladder")]
    base = build_scheme(cfg, law, ladder[0])
    reg = drift.regularity
    setting = _setting_of(base.variant, drift)
    rate = theoretical_rate(setting, law.alpha, law.dim, reg.p, reg.theta, reg.beta)
    meta = {"setting": setting, "alpha": law.alpha, "d": law.dim, "p": reg.p, "theta": reg.theta,
            "beta": reg.beta}
    pathway = cfg.get("study", "pathway", "density")
    metric = cfg.get("study", "metric", "l1")
    if pathway == "density":
        grid = build_grid(cfg, law)
        tests = build_tests(cfg) if metric == "rms" else None
        res = density_rate_study(law, drift, base.variant, ladder, grid, cfg.int("solver", "steps", 4096),
                                 base.T, metric, cfg.num("study", "rho", 1.0), tests, None, base.B,
                                 float(base.start()[0]), meta, rate, cfg.num("solver", "tol", 1e-13))
        report = res.report
        summary["slopes"] = res.metrics["slopes"]
    else:
        M = cfg.int("study", "m")
        phi = build_tests(cfg)[0]
        grid = build_grid(cfg, law)
        vc = VolterraConfig(grid, cfg.int("solver", "steps", 4096))
        reff = solve_sde_density(law, drift, float(base.start()[0]), base.T, vc)
        hs, errs, ses = [], [], []
        for i, n in enumerate(ladder):
            sc = build_scheme(cfg, law, n)
            sc = SchemeConfig(sc.variant, n, sc.T, law, sc.B, sc.x0, cell_seed(cfg.seed, i))
            seeds[f"n={n}"] = sc.seed
            est = weak_error(sc, drift, phi, "duhamel", M=M, reference_field=reff, workers=workers)
            hs.append(sc.h), errs.append(abs(est.value)), ses.append(est.stderr)
        report = rate_regression(hs, errs, ses, rate, meta)
    report.to_csv(out / "rate_report.csv")
    _write_figure(out / "rate.dat", list(zip(report.hs, report.errors, report.stderrs)), "error vs h")
    band = cfg.nums("study", "band")
    summary.update(slope=report.slope, ci=list(report.ci), rate_theory=rate, dropped=report.dropped)
    if band:
        summary["in_band"] = bool(band[0] <= report.slope <= band[1])
    return ["rate_report.csv", "rate.dat"]


def _random_field(grid, rng, kmin=3, kmax=24, modes=4):
    K = int(rng.integers(1, modes + 1))
    lattice = np.pi / grid.half_width
    freqs = lattice * rng.integers(int(kmin / lattice), int(kmax / lattice), size=K)
    from .spectral import FourierSeries
    return FourierSeries(freqs, rng.normal(size=K), rng.uniform(0, 2 * np.pi, K))(grid.nodes)


def _run_inequality(cfg, out, workers, seeds, summary):
    law = build_law(cfg)
    grid = SpatialGrid(1, cfg.num("grid", "half_width", 8 * math.pi), cfg.int("grid", "points", 4096))
    kind = cfg.get("inequality", "kind", "duality")
    cases = cfg.int("inequality", "cases", 100)
    rng = np.random.default_rng(cfg.seed)
    seeds["inequality"] = cfg.seed
    reports = []
    for _ in range(cases):
        reports.append(random_inequality_case(kind, rng, law, grid))
    write_margin_csv(reports, out / "margins.csv")
    summary["max_ratio"] = max(r.ratio for r in reports)
    return ["margins.csv"]


def random_inequality_case(kind, rng, law, grid):
    """One seeded instance of an inequality check on random spectral fields."""
    f = _random_field(grid, rng)
    g = _random_field(grid, rng)
    ells = [1.0, 2.0, 4.0, INF]
    ms = [1.0, 2.0, INF]
    beta = float(rng.uniform(-0.8, 0.8))
    ell = ells[rng.integers(len(ells))]
    m = ms[rng.integers(len(ms))]
    if kind == "duality":
        g = f + g  # shared modes keep the pairing away from zero
        return check_inequality("duality", (f, g), dict(beta=beta, l=ell, m=m), law, grid)
    if kind == "product":
        f = 1.0 + 0.5 * f / max(np.max(np.abs(f)), 1e-300)
        rho = abs(beta) + float(rng.uniform(0.05, 0.5))
        return check_inequality("product", (f, g), dict(beta=beta, rho=rho, l=ell, m=m), law, grid)
    if kind == "young":
        g = f + g  # disjoint modes would convolve to zero
        l2 = ells[rng.integers(len(ells))]
        # 1 + 1/l = 1/l1 + 1/l2 with l1 = 1 keeps the exponents admissible
        delta = float(rng.uniform(-0.3, 0.3))
        m1 = ms[rng.integers(len(ms))]
        return check_inequality("young", (f, g), dict(beta=beta, delta=delta, l=l2, m=m1, l1=1.0, m1=m1,
                                                      l2=l2, m2=INF), law, grid)
    if kind == "embedding":
        side = "lower" if rng.random() < 0.5 else "upper"
        return check_inequality("embedding", (f,), dict(l=ell, side=side), law, grid)
    raise ParameterError(f"unknown inequality kind {kind!r}")


def _run_gronwall(cfg, out, workers, seeds, summary):
    inp = GronwallInput(cfg.num("gronwall", "kappa", 1.0), cfg.num("gronwall", "lam", 1.0),
                        cfg.num("gronwall", "a1", 0.0), cfg.num("gronwall", "a2", 0.0),
                        cfg.num("gronwall", "t", 1.0), cfg.int("gronwall", "n", 8))
    C = gronwall_constant(inp)
    _, vals = gronwall_extremal(inp)
    rows = [(inp.kappa, inp.lam, inp.a1, inp.a2, inp.T, inp.N, C, float(vals.max()))]
    _write_table(out / "gronwall.csv", ("kappa", "lambda", "a1", "a2", "T", "N", "C", "sup_f"), rows)
    summary.update(C=C, sup_f=float(vals.max()), sound=bool(vals.max() <= C * inp.kappa * (1 + 1e-12)))
    return ["gronwall.csv"]


RUNNERS = {
    "sample": _run_sample,
    "kernel-check": _run_kernel,
    "besov-norm": _run_besov,
    "density": _run_density,
    "weak-error": _run_weak,
    "rate-study": _run_rate,
    "inequality-check": _run_inequality,
    "gronwall": _run_gronwall,
}


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(cfg: ExperimentConfig, out_dir=None, workers=1):
    """Validate and execute; returns (exit status, manifest or diagnostics)."""
    diags = [d for d in validate(cfg) if d.severity == "error"]
    if diags:
        return 2, diags
    out = Path(out_dir or cfg.get("experiment", "output", "out"))
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    seeds, summary = {}, {}
    try:
        files = RUNNERS[cfg.kind](cfg, out, workers, seeds, summary)
    except StableSDEError as e:
        return e.exit_code if e.exit_code in (2, 3) else 3, [Diagnostic(type(e).__name__, str(e))]
    t1 = time.time()
    man = Manifest(cfg.digest(), __version__,
                   {"start": t0, "end": t1, "seconds": t1 - t0, "host": platform.node()},
                   seeds, {f: _sha(out / f) for f in files}, summary)
    man.write(out / "manifest.json")
    return 0, man
