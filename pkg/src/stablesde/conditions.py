"""Admissibility rules shared by the schemes, the rate formulas and validation.

Each rule returns a list of :class:`Violation` records (empty when the rule
holds).  ``RULES`` is the table enumerated in ``docs/validation.md``.
"""
from dataclasses import dataclass
import math

INF = math.inf


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    lhs: float = math.nan
    rhs: float = math.nan
    severity: str = "error"

    def __str__(self):
        return self.message


def _inv(x):
    return 0.0 if x == INF else 1.0 / x


def _fmt(x):
    return "inf" if x == INF else f"{x:.6g}"


def alpha_range(alpha):
    if not (1.0 < alpha <= 2.0):
        return [Violation("alpha-range", f"stability index must satisfy α ∈ (1,2], got alpha = {_fmt(alpha)}",
                          alpha, 2.0)]
    return []


def krylov_rockner(alpha, d, p, theta, label=""):
    """d/p + alpha/theta < alpha - 1 together with p >= 2."""
    out = []
    tag = f" ({label})" if label else ""
    lhs = d * _inv(p) + alpha * _inv(theta)
    rhs = alpha - 1.0
    if not lhs < rhs:
        out.append(Violation(
            "krylov-rockner",
            f"Krylov-Rockner condition violated{tag}: d/p + alpha/theta = {_fmt(lhs)} >= alpha - 1 = {_fmt(rhs)}",
            lhs, rhs))
    if not p >= 2:
        out.append(Violation("integrability-p", f"Lebesgue drift needs p >= 2{tag}, got p = {_fmt(p)}",
                             p, 2.0))
    if theta < 1 or not theta > 0:
        out.append(Violation("integrability-theta", f"time integrability theta must be >= 1{tag}, got {_fmt(theta)}",
                             theta, 1.0))
    return out


def lebesgue_sum(alpha, d, pieces):
    """Per-piece Krylov-Rockner plus d/p_min + alpha/theta_min <= alpha - 1.

    ``pieces`` is a list of (p_i, theta_i).
    """
    out = []
    for i, (p, th) in enumerate(pieces):
        out += krylov_rockner(alpha, d, p, th, label=f"piece {i}")
    if pieces:
        p_min = min(p for p, _ in pieces)
        th_min = min(t for _, t in pieces)
        lhs = d * _inv(p_min) + alpha * _inv(th_min)
        if not lhs <= alpha - 1:
            out.append(Violation(
                "lebesgue-sum-min",
                f"sum condition violated: d/p_min + alpha/theta_min = {_fmt(lhs)} > alpha - 1 = {_fmt(alpha - 1)}",
                lhs, alpha - 1))
    return out


def lebesgue_beta(beta):
    if beta != 0:
        return [Violation("lebesgue-beta", f"Lebesgue cutoff scheme needs declared beta = 0, got {beta:g}",
                          beta, 0.0)]
    return []


def hoelder_range(beta):
    if not (0 < beta < 1):
        return [Violation("hoelder-range", f"Hoelder setting needs beta in (0, 1), got beta = {beta:g}",
                          beta, 1.0)]
    return []


def hoelder_time(theta, time_dependent=False):
    out = []
    if theta != INF:
        out.append(Violation("hoelder-theta", f"Hoelder scheme needs theta = inf, got theta = {_fmt(theta)}",
                             theta, INF))
    if time_dependent:
        out.append(Violation("hoelder-time-dependence",
                             "time dependent Hoelder drift: outside the proven rate statement",
                             severity="warning"))
    return out


def gamma_besov(alpha, d, p, theta, beta):
    return alpha - 1.0 + 2.0 * beta - d * _inv(p) - alpha * _inv(theta)


def besov_serrin(alpha, d, p, theta, beta):
    """beta in ((1 - alpha + d/p + alpha/theta)/2, 0), Brownian noise excluded."""
    out = []
    if alpha == 2.0:
        out.append(Violation("besov-brownian",
                             "Brownian noise (alpha = 2) is excluded for Besov drifts; use alpha < 2",
                             alpha, 2.0))
    if not beta < 0:
        out.append(Violation("besov-beta", f"Besov setting needs beta < 0, got beta = {beta:g}", beta, 0.0))
    lower = (1.0 - alpha + d * _inv(p) + alpha * _inv(theta)) / 2.0
    g = gamma_besov(alpha, d, p, theta, beta)
    if not g > 0:
        out.append(Violation(
            "besov-gamma",
            f"Besov condition violated: gamma = alpha - 1 + 2 beta - d/p - alpha/theta = {_fmt(g)} <= 0 "
            f"(need beta > {_fmt(lower)})", g, 0.0))
    if p < 1 or theta < 1:
        out.append(Violation("besov-indices", "Besov indices need p >= 1 and theta >= 1",
                             min(p, theta), 1.0))
    return out


def power_drift(alpha, d, delta):
    """Example singular drift |x|^{-delta}: delta < min(alpha - 1, d/2)."""
    rhs = min(alpha - 1.0, d / 2.0)
    if not delta < rhs:
        return [Violation("power-exponent",
                          f"power drift needs delta < min(alpha - 1, d/2) = {_fmt(rhs)}, got delta = {_fmt(delta)}",
                          delta, rhs)]
    return []


def power_membership(d, delta, p_inner):
    if not p_inner < d / delta:
        return [Violation("power-membership",
                          f"inner piece of |x|^-delta is in L^p only for p < d/delta = {_fmt(d / delta)}, "
                          f"got p = {_fmt(p_inner)}", p_inner, d / delta)]
    return []


def profile_integrability(norm, theta):
    if not math.isfinite(norm):
        return [Violation("profile-theta", f"time profile is not in L^theta for theta = {_fmt(theta)}",
                          norm, INF)]
    return []


def gronwall_exponents(a1, a2):
    out = []
    for name, a in (("a1", a1), ("a2", a2)):
        if not 0 <= a < 1:
            out.append(Violation("gronwall-exponent", f"{name} must lie in [0, 1), got {a:g}", a, 1.0))
    return out


RULES = {
    "alpha-range": "1 < alpha <= 2",
    "krylov-rockner": "d/p + alpha/theta < alpha - 1 (Lebesgue drift)",
    "integrability-p": "p >= 2 (Lebesgue drift)",
    "integrability-theta": "theta >= 1",
    "lebesgue-sum-min": "d/p_min + alpha/theta_min <= alpha - 1 (sum of Lebesgue drifts)",
    "lebesgue-beta": "declared beta = 0 for the cutoff scheme",
    "hoelder-range": "0 < beta < 1 (Hoelder drift / test function)",
    "hoelder-theta": "theta = inf for the Hoelder scheme",
    "hoelder-time-dependence": "warning: time dependent Hoelder drift",
    "besov-brownian": "alpha < 2 for Besov drifts",
    "besov-beta": "beta < 0 for Besov drifts",
    "besov-gamma": "gamma = alpha - 1 + 2 beta - d/p - alpha/theta > 0",
    "besov-indices": "p >= 1, theta >= 1",
    "besov-spectral": "the mollified scheme needs a spectral drift",
    "dimension": "drift and noise dimensions agree",
    "power-exponent": "delta < min(alpha - 1, d/2) for the |x|^-delta example",
    "power-membership": "p_inner < d/delta",
    "profile-theta": "time profile in L^theta",
    "gronwall-exponent": "0 <= a1, a2 < 1",
    "product-rule": "rho > |beta| (product rule)",
    "young-exponents": "1 + 1/l = 1/l1 + 1/l2, 1/m <= 1/m1 + 1/m2",
    "grid-resolution": "aliasing budget and Nyquist bandwidth (numerical quality, exit 3)",
}
