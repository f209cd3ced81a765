"""Cross-correlation validity bounds for the bivariate models.

The central quantity is the infimum over r > 0 of a positive integrand
assembled from closed-form auxiliary functions (``q_fn`` for the powered
exponential family, ``p_fn`` for the generalized Cauchy family).  The square
root of that infimum bounds the colocated correlation rho: any |rho| at or
below the bound yields a provably positive definite model in R^n, n in
{1, 3}.  A zero infimum is NOT a proof of invalidity, so outcomes carry a
three-way decidability tag:

* ``SufficientBound``     -- positive infimum; |rho| <= bound is certified.
* ``NecessarilyZero``     -- a spectral necessary condition forces rho = 0.
* ``ZeroInfimumInconclusive`` -- the infimum is zero but nothing forces
                                 rho = 0; the bound is simply uninformative.

The infimum engine works on the log of the integrand (the raw integrand
overflows double precision near the endpoints), scanning a log-spaced grid,
refining the best local minima by golden-section search, and evaluating the
r -> 0+ and r -> infinity limits exactly from the exponent structure.

``generic_sufficient_check`` recomputes the same bound from raw derivatives
of the correlation functions (a second, independent code path) for any model
whose members are smooth enough; it must agree with the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .bimodels import BivariateModel
from .corrfn import CorrelationFamily, derivative, evaluate
from .spectral import spherical_density_closed_form, tan_roots

__all__ = [
    "ExcludedPoint",
    "NotApplicable",
    "ValidityReport",
    "TrivialityVerdict",
    "q_fn",
    "p_fn",
    "stable_bound_integrand",
    "cauchy_bound_integrand",
    "max_rho_stable",
    "max_rho_cauchy",
    "generic_sufficient_check",
    "spherical_triviality",
]

AT_ZERO = "AtZero"
AT_INFINITY = "AtInfinity"

SUFFICIENT = "SufficientBound"
NECESSARILY_ZERO = "NecessarilyZero"
INCONCLUSIVE = "ZeroInfimumInconclusive"

_QZERO_TOL = 1e-12   # |q12| below this is an excluded point of the infimum
_EQ_TOL = 1e-12      # relative tolerance for parameter equality in case analysis


class ExcludedPoint(ValueError):
    """The cross auxiliary function vanishes at this r; the point is excluded."""


class NotApplicable(Exception):
    """The generic derivative criterion's preconditions fail for this model."""


@dataclass(frozen=True)
class ValidityReport:
    rho_bound_raw: float
    rho_bound: float
    infimum: float
    case: str
    infimum_location: object   # positive float, or AT_ZERO / AT_INFINITY
    decidability: str
    n: int
    note: str = ""


@dataclass(frozen=True)
class TrivialityVerdict:
    valid: bool
    witness_u: float | None
    reason: str


# ---------------------------------------------------------------------------
# Auxiliary closed forms.

def q_fn(alpha: float, s: float, n: int, r):
    """Powered-exponential auxiliary function for dimension n in {1, 3}."""
    _check_n13(n)
    rr, scalar = _as_positive(r)
    t = (s * rr) ** alpha
    if n == 1:
        out = alpha * t - alpha + 1.0
    else:
        out = (alpha ** 2 * t ** 2 - 3.0 * alpha ** 2 * t + 4.0 * alpha * t
               + alpha ** 2 - 4.0 * alpha + 3.0)
    return float(out[0]) if scalar else out


def p_fn(alpha: float, beta: float, s: float, n: int, r):
    """Generalized-Cauchy auxiliary function for dimension n in {1, 3}.

    The linear coefficient in the n = 3 numerator is fixed by the identity
    psi''(r) - r psi'''(r) = beta s^alpha r^(alpha-2) p(r); any other value
    breaks it (cross-checked against raw derivatives in the test suite).
    """
    _check_n13(n)
    rr, scalar = _as_positive(r)
    t = (s * rr) ** alpha
    if n == 1:
        out = ((beta + 1.0) * t - alpha + 1.0) / (1.0 + t) ** (beta / alpha + 2.0)
    else:
        k1 = 4.0 * beta + 6.0 - 4.0 * alpha - 3.0 * alpha * beta - alpha ** 2
        num = ((beta + 1.0) * (beta + 3.0) * t ** 2 + k1 * t
               + (alpha - 1.0) * (alpha - 3.0))
        out = num / (1.0 + t) ** (beta / alpha + 3.0)
    return float(out[0]) if scalar else out


def _check_n13(n: int) -> None:
    if n not in (1, 3):
        raise ValueError(f"dimension n must be 1 or 3, got {n}")


def _as_positive(r) -> tuple[np.ndarray, bool]:
    arr = np.asarray(r, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0.0):
        raise ValueError("r must be positive")
    return arr, scalar


# ---------------------------------------------------------------------------
# Parameter extraction and the public integrands.

def _stable_triple(model: BivariateModel):
    for f in (model.psi11, model.psi12, model.psi22):
        if f.kind != "Stable":
            raise ValueError("model members must all be of the stable family")
    a11, a22 = model.psi11.params.alpha, model.psi22.params.alpha
    a12 = model.psi12.params.alpha
    if a11 > 1.0 or a22 > 1.0:
        raise ValueError("marginal smoothness must lie in (0, 1]")
    return (a11, a12, a22,
            model.psi11.params.scale, model.psi12.params.scale, model.psi22.params.scale)


def _cauchy_triple(model: BivariateModel):
    for f in (model.psi11, model.psi12, model.psi22):
        if f.kind != "Cauchy":
            raise ValueError("model members must all be of the Cauchy family")
    p11, p12, p22 = model.psi11.params, model.psi12.params, model.psi22.params
    if p11.alpha > 1.0 or p22.alpha > 1.0:
        raise ValueError("marginal smoothness must lie in (0, 1]")
    return (p11.alpha, p12.alpha, p22.alpha, p11.beta, p12.beta, p22.beta,
            p11.scale, p12.scale, p22.scale)


def stable_bound_integrand(model: BivariateModel, n: int, r):
    """The expression under the infimum for the powered exponential bound.

    Includes the constant prefactor, so an all-equal model gives exactly 1
    for every r.  Raises :class:`ExcludedPoint` where |q12(r)| < 1e-12.
    """
    _check_n13(n)
    a11, a12, a22, s11, s12, s22 = _stable_triple(model)
    rr, scalar = _as_positive(r)
    q11 = q_fn(a11, s11, n, rr)
    q22 = q_fn(a22, s22, n, rr)
    q12 = q_fn(a12, s12, n, rr)
    bad = np.abs(q12) < _QZERO_TOL
    if np.any(bad):
        raise ExcludedPoint(f"q12 vanishes at r = {rr[bad][0]:.17g}")
    pref = (a11 * a22 * s11 ** a11 * s22 ** a22) / (a12 ** 2 * s12 ** (2.0 * a12))
    expo = 2.0 * (s12 * rr) ** a12 - (s11 * rr) ** a11 - (s22 * rr) ** a22
    with np.errstate(over="ignore", under="ignore"):
        out = pref * rr ** (a11 + a22 - 2.0 * a12) * np.exp(expo) * q11 * q22 / q12 ** 2
    return float(out[0]) if scalar else out


def cauchy_bound_integrand(model: BivariateModel, n: int, r):
    """The expression under the infimum for the generalized Cauchy bound.

    Includes the constant prefactor; raises :class:`ExcludedPoint` where
    |p12(r)| < 1e-12.
    """
    _check_n13(n)
    a11, a12, a22, b11, b12, b22, s11, s12, s22 = _cauchy_triple(model)
    rr, scalar = _as_positive(r)
    p11v = p_fn(a11, b11, s11, n, rr)
    p22v = p_fn(a22, b22, s22, n, rr)
    p12v = p_fn(a12, b12, s12, n, rr)
    bad = np.abs(p12v) < _QZERO_TOL
    if np.any(bad):
        raise ExcludedPoint(f"p12 vanishes at r = {rr[bad][0]:.17g}")
    pref = (b11 * b22 / b12 ** 2) * (s11 ** a11 * s22 ** a22) / s12 ** (2.0 * a12)
    with np.errstate(over="ignore", under="ignore"):
        out = pref * rr ** (a11 + a22 - 2.0 * a12) * p11v * p22v / p12v ** 2
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Log-domain evaluation of the integrands (engine internals).

def _log_q_terms(alpha: float, s: float, n: int, lr: np.ndarray):
    """log|q| and sign(q) via signed log-sum-exp; lr = log(r)."""
    lt = alpha * (math.log(s) + lr)       # log t, t = (s r)^alpha
    if n == 1:
        coefs = np.array([alpha, 1.0 - alpha])
        powers = np.array([1.0, 0.0])
    else:
        coefs = np.array([alpha ** 2, alpha * (4.0 - 3.0 * alpha),
                          (alpha - 1.0) * (alpha - 3.0)])
        powers = np.array([2.0, 1.0, 0.0])
    keep = coefs != 0.0
    coefs, powers = coefs[keep], powers[keep]
    terms = powers[:, None] * lt[None, :] + np.log(np.abs(coefs))[:, None]
    return logsumexp(terms, axis=0, b=np.sign(coefs)[:, None], return_sign=True)


def _log1p_exp(w: np.ndarray) -> np.ndarray:
    # log(1 + e^w), stable for both signs of w
    out = np.empty_like(w)
    big = w > 30.0
    out[big] = w[big]
    out[~big] = np.log1p(np.exp(w[~big]))
    return out


def _log_p_terms(alpha: float, beta: float, s: float, n: int, lr: np.ndarray):
    """log|p| and sign(p) for the Cauchy auxiliary function."""
    lt = alpha * (math.log(s) + lr)
    if n == 1:
        coefs = np.array([beta + 1.0, 1.0 - alpha])
        powers = np.array([1.0, 0.0])
        denom_pow = beta / alpha + 2.0
    else:
        k1 = 4.0 * beta + 6.0 - 4.0 * alpha - 3.0 * alpha * beta - alpha ** 2
        coefs = np.array([(beta + 1.0) * (beta + 3.0), k1,
                          (alpha - 1.0) * (alpha - 3.0)])
        powers = np.array([2.0, 1.0, 0.0])
        denom_pow = beta / alpha + 3.0
    keep = coefs != 0.0
    coefs, powers = coefs[keep], powers[keep]
    terms = powers[:, None] * lt[None, :] + np.log(np.abs(coefs))[:, None]
    lnum, sign = logsumexp(terms, axis=0, b=np.sign(coefs)[:, None], return_sign=True)
    return lnum - denom_pow * _log1p_exp(lt), sign


def _stable_log_integrand(params, n):
    a11, a12, a22, s11, s12, s22 = params
    log_a = (math.log(a11) + math.log(a22) + a11 * math.log(s11) + a22 * math.log(s22)
             - 2.0 * math.log(a12) - 2.0 * a12 * math.log(s12))
    p_pow = a11 + a22 - 2.0 * a12

    def fn(lr: np.ndarray):
        lr = np.atleast_1d(np.asarray(lr, dtype=float))
        h = (2.0 * np.exp(a12 * (math.log(s12) + lr))
             - np.exp(a11 * (math.log(s11) + lr))
             - np.exp(a22 * (math.log(s22) + lr)))
        l11, g11 = _log_q_terms(a11, s11, n, lr)
        l22, g22 = _log_q_terms(a22, s22, n, lr)
        l12, g12 = _log_q_terms(a12, s12, n, lr)
        li = log_a + p_pow * lr + h + l11 + l22 - 2.0 * l12
        li = np.where((g11 > 0) & (g22 > 0) & (g12 != 0), li, np.nan)
        return li, g12

    return fn


def _cauchy_log_integrand(params, n):
    a11, a12, a22, b11, b12, b22, s11, s12, s22 = params
    log_a = (math.log(b11) + math.log(b22) - 2.0 * math.log(b12)
             + a11 * math.log(s11) + a22 * math.log(s22) - 2.0 * a12 * math.log(s12))
    p_pow = a11 + a22 - 2.0 * a12

    def fn(lr: np.ndarray):
        lr = np.atleast_1d(np.asarray(lr, dtype=float))
        l11, g11 = _log_p_terms(a11, b11, s11, n, lr)
        l22, g22 = _log_p_terms(a22, b22, s22, n, lr)
        l12, g12 = _log_p_terms(a12, b12, s12, n, lr)
        li = log_a + p_pow * lr + l11 + l22 - 2.0 * l12
        li = np.where((g11 > 0) & (g22 > 0) & (g12 != 0), li, np.nan)
        return li, g12

    return fn


# ---------------------------------------------------------------------------
# Exact endpoint limits.

def _near(x: float, y: float) -> bool:
    return abs(x - y) <= _EQ_TOL * max(1.0, abs(x), abs(y))


def _origin_exponent(a11: float, a12: float, a22: float) -> float:
    # each auxiliary factor contributes r^0 at the origin except exactly at
    # alpha = 1, where its constant term vanishes and it behaves like r^1
    adj = (1.0 if a11 == 1.0 else 0.0) + (1.0 if a22 == 1.0 else 0.0) \
        - 2.0 * (1.0 if a12 == 1.0 else 0.0)
    return a11 + a22 - 2.0 * a12 + adj


def _log_c0_factor(alpha: float, s: float, n: int, beta: float | None) -> float:
    """log| lim q(r)/r^o | as r -> 0+, o = 1 if alpha == 1 else 0."""
    if alpha == 1.0:
        return math.log(s) if beta is None else math.log((beta + 1.0) * s)
    if n == 1:
        return math.log(abs(1.0 - alpha))
    return math.log(abs((alpha - 1.0) * (alpha - 3.0)))


def _stable_limits(params, n):
    """(log-limit, tag) candidates at r -> 0+ and r -> infinity.

    A limit of -inf means the integrand tends to 0 there; +inf limits are
    dropped (they never constrain the infimum).
    """
    a11, a12, a22, s11, s12, s22 = params
    log_a = (math.log(a11) + math.log(a22) + a11 * math.log(s11) + a22 * math.log(s22)
             - 2.0 * math.log(a12) - 2.0 * a12 * math.log(s12))
    out = []

    e0 = _origin_exponent(a11, a12, a22)
    if e0 > _EQ_TOL:
        out.append((-math.inf, AT_ZERO))
    elif abs(e0) <= _EQ_TOL:
        c0 = (log_a + _log_c0_factor(a11, s11, n, None)
              + _log_c0_factor(a22, s22, n, None) - 2.0 * _log_c0_factor(a12, s12, n, None))
        out.append((c0, AT_ZERO))

    # growth comparison of h(r) = 2(s12 r)^a12 - (s11 r)^a11 - (s22 r)^a22:
    # group equal exponents, then the largest exponent with a nonzero net
    # coefficient decides; full cancellation leaves a finite limit
    groups: dict[float, float] = {}
    for a, coef in ((a12, 2.0 * s12 ** a12), (a11, -(s11 ** a11)), (a22, -(s22 ** a22))):
        key = next((k for k in groups if _near(k, a)), a)
        groups[key] = groups.get(key, 0.0) + coef
    scale_mag = 2.0 * s12 ** a12 + s11 ** a11 + s22 ** a22
    decided = False
    for a in sorted(groups, reverse=True):
        if abs(groups[a]) > _EQ_TOL * scale_mag:
            if groups[a] < 0.0:
                out.append((-math.inf, AT_INFINITY))
            decided = True
            break
    if not decided:
        # all exponents equal and scale terms cancel: h == 0, the power of r
        # is zero, and the q-ratio tends to a positive constant
        kappa = 1.0 if n == 1 else 2.0
        out.append((log_a + kappa * a11 * (math.log(s11) + math.log(s22)
                                           - 2.0 * math.log(s12)), AT_INFINITY))
    return out


def _cauchy_limits(params, n):
    a11, a12, a22, b11, b12, b22, s11, s12, s22 = params
    log_a = (math.log(b11) + math.log(b22) - 2.0 * math.log(b12)
             + a11 * math.log(s11) + a22 * math.log(s22) - 2.0 * a12 * math.log(s12))
    out = []

    e0 = _origin_exponent(a11, a12, a22)
    if e0 > _EQ_TOL:
        out.append((-math.inf, AT_ZERO))
    elif abs(e0) <= _EQ_TOL:
        c0 = (log_a + _log_c0_factor(a11, s11, n, b11)
              + _log_c0_factor(a22, s22, n, b22) - 2.0 * _log_c0_factor(a12, s12, n, b12))
        out.append((c0, AT_ZERO))

    e_inf = 2.0 * b12 - b11 - b22
    if e_inf < -_EQ_TOL * max(1.0, b11, b22, b12):
        out.append((-math.inf, AT_INFINITY))
    elif abs(e_inf) <= _EQ_TOL * max(1.0, b11, b22, b12):
        if n == 1:
            lead = (math.log((b11 + 1.0) * (b22 + 1.0)) - 2.0 * math.log(b12 + 1.0))
        else:
            lead = (math.log((b11 + 1.0) * (b11 + 3.0) * (b22 + 1.0) * (b22 + 3.0))
                    - 2.0 * math.log((b12 + 1.0) * (b12 + 3.0)))
        c_inf = (log_a + lead - b11 * math.log(s11) - b22 * math.log(s22)
                 + 2.0 * b12 * math.log(s12) - a11 * math.log(s11)
                 - a22 * math.log(s22) + 2.0 * a12 * math.log(s12))
        # the alpha-dependent scale powers of log_a cancel against the tail
        # powers of the p-ratio, leaving s11^-b11 s22^-b22 s12^(2 b12)
        out.append((c_inf, AT_INFINITY))
    return out


# ---------------------------------------------------------------------------
# The infimum engine: grid scan + golden-section refinement + exact limits.

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_GRID_LO, _GRID_HI = math.log(1e-8), math.log(1e8)


def _golden_min(f, a: float, b: float, tol: float = 1e-10):
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(200):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _scan_infimum(log_fn, limits, grid_points: int = 4096, n_brackets: int = 8,
                  tol: float = 1e-10):
    """Minimize a log-integrand over log(r) in [log 1e-8, log 1e8].

    Returns (log_infimum, location) where location is a positive r or one of
    the endpoint tags.  ``n_brackets = 0`` skips the golden-section polish
    and reports the best grid point (cheap mode for inner fitting loops).
    """
    x = np.linspace(_GRID_LO, _GRID_HI, grid_points)
    li, sgn = log_fn(x)
    finite = np.isfinite(li)

    candidates: list[tuple[float, object]] = []
    if n_brackets == 0:
        if np.any(finite):
            best = int(np.nanargmin(np.where(finite, li, np.nan)))
            candidates.append((float(li[best]), math.exp(float(x[best]))))
    else:
        interior = np.zeros(li.shape, dtype=bool)
        interior[1:-1] = (finite[1:-1] & finite[:-2] & finite[2:]
                          & (li[1:-1] <= li[:-2]) & (li[1:-1] <= li[2:])
                          & (sgn[1:-1] == sgn[:-2]) & (sgn[1:-1] == sgn[2:]))
        idx = np.flatnonzero(interior)
        if idx.size == 0 and np.any(finite):
            # monotone over the grid: refine around the best grid point anyway
            best = int(np.nanargmin(np.where(finite, li, np.nan)))
            idx = np.array([min(max(best, 1), grid_points - 2)])
        if idx.size:
            order = np.argsort(li[idx])
            scalar_f = lambda t: float(log_fn(np.array([t]))[0][0])
            for i in idx[order[:n_brackets]]:
                xm, fm = _golden_min(scalar_f, x[i - 1], x[i + 1], tol=tol)
                if math.isfinite(fm):
                    candidates.append((fm, math.exp(xm)))

    for value, tag in limits:
        if value < math.inf:
            candidates.append((value, tag))

    if not candidates:
        raise RuntimeError("infimum engine found no admissible points")
    candidates.sort(key=lambda c: (c[0], isinstance(c[1], str)))
    return candidates[0]


# ---------------------------------------------------------------------------
# Case classification by smoothness ordering.

def _eq(x, y):
    return _near(x, y)


def _lt(x, y):
    return x < y and not _near(x, y)


def _gt(x, y):
    return x > y and not _near(x, y)


def _classify_stable(a11, a12, a22, s11, s12, s22) -> str:
    mean = 0.5 * (a11 + a22)
    if _lt(a12, mean):
        return "alpha12-below-mean"
    if _eq(a12, a11) and _eq(a12, a22):
        lhs, rhs = s12 ** a11, 0.5 * (s11 ** a11 + s22 ** a11)
        return "i" if (lhs > rhs or _eq(lhs, rhs)) else "no-positive-case"
    if _eq(a12, a11) and _gt(a11, a22):
        return "ii" if _gt(s12, 2.0 ** (-1.0 / a11) * s11) else "no-positive-case"
    if _eq(a12, a22) and _gt(a22, a11):
        return "iii" if _gt(s12, 2.0 ** (-1.0 / a22) * s22) else "no-positive-case"
    if _gt(a12, max(a11, a22)):
        return "iv"
    return "no-positive-case"


def _classify_cauchy(a11, a12, a22, b11, b12, b22, n) -> tuple[str, str | None]:
    mean_a = 0.5 * (a11 + a22)
    mean_b = 0.5 * (b11 + b22)
    if _lt(a12, mean_a):
        return "i", NECESSARILY_ZERO
    if _lt(b12, mean_b):
        if _lt(b11, n) and _lt(b22, n) and _lt(b12, n):
            return "ii", NECESSARILY_ZERO
        for bii, bjj in ((b11, b22), (b22, b11)):
            if _lt(2.0 * b12, bii + n) and _lt(bii, n) and _gt(bjj, n):
                return "iii", NECESSARILY_ZERO
        return "iv", INCONCLUSIVE
    return "v", None


_EDGE_NOTE = ("infimum vanishes at the origin because a smoothness parameter sits "
              "exactly at 1, where the sufficiency case analysis does not apply")


def _resolve_dim(n: int) -> tuple[int, str]:
    if n == 2:
        return 3, "n = 2 answered by the n = 3 criterion (validity in R^3 implies R^2)"
    _check_n13(n)
    return n, ""


def _finish_report(log_inf, location, case, decidability, n, note) -> ValidityReport:
    infimum = math.exp(log_inf) if log_inf > -math.inf else 0.0
    raw = math.exp(0.5 * log_inf) if log_inf > -math.inf else 0.0
    if decidability == NECESSARILY_ZERO:
        infimum, raw = 0.0, 0.0
    return ValidityReport(rho_bound_raw=raw, rho_bound=min(raw, 1.0), infimum=infimum,
                          case=case, infimum_location=location,
                          decidability=decidability, n=n, note=note)


def max_rho_stable(model: BivariateModel, n: int, grid_points: int = 4096,
                   refine_brackets: int = 8) -> ValidityReport:
    """Maximum certifiable |rho| for a bivariate powered exponential model."""
    n_used, note = _resolve_dim(n)
    params = _stable_triple(model)
    case = _classify_stable(*params)
    log_inf, location = _scan_infimum(_stable_log_integrand(params, n_used),
                                      _stable_limits(params, n_used),
                                      grid_points=grid_points,
                                      n_brackets=refine_brackets)
    if case == "alpha12-below-mean":
        decidability = NECESSARILY_ZERO
    elif log_inf > -math.inf:
        decidability = SUFFICIENT
    else:
        decidability = INCONCLUSIVE
        if case in ("i", "ii", "iii", "iv"):
            note = (note + "; " if note else "") + _EDGE_NOTE
    return _finish_report(log_inf, location, case, decidability, n_used, note)


def max_rho_cauchy(model: BivariateModel, n: int, grid_points: int = 4096,
                   refine_brackets: int = 8) -> ValidityReport:
    """Maximum certifiable |rho| for a bivariate generalized Cauchy model."""
    n_used, note = _resolve_dim(n)
    params = _cauchy_triple(model)
    case, forced = _classify_cauchy(params[0], params[1], params[2],
                                    params[3], params[4], params[5], n_used)
    log_inf, location = _scan_infimum(_cauchy_log_integrand(params, n_used),
                                      _cauchy_limits(params, n_used),
                                      grid_points=grid_points,
                                      n_brackets=refine_brackets)
    if forced == NECESSARILY_ZERO:
        decidability = NECESSARILY_ZERO
    elif log_inf > -math.inf:
        decidability = SUFFICIENT
    else:
        decidability = INCONCLUSIVE
        if case == "v":
            note = (note + "; " if note else "") + _EDGE_NOTE
    return _finish_report(log_inf, location, case, decidability, n_used, note)


# ---------------------------------------------------------------------------
# Generic route: the same bound from raw derivatives of arbitrary members.

def _second_form(fam: CorrelationFamily, rr: np.ndarray, n: int) -> np.ndarray:
    d2 = derivative(fam, rr, 2)
    if n == 1:
        return np.asarray(d2)
    return np.asarray(d2) - rr * np.asarray(derivative(fam, rr, 3))


def generic_sufficient_check(model: BivariateModel, n: int,
                             grid_points: int = 4096) -> ValidityReport:
    """Bound |rho| from derivative ratios of any sufficiently smooth members.

    Works directly on psi'' (n = 1) or psi'' - r psi''' (n = 3), with no
    family-specific algebra; for stable and Cauchy members the result must
    coincide with the closed-form routes.  Raises :class:`NotApplicable`
    when the preconditions fail on the probe grid (marginal second-order
    forms must be nonnegative, members must decay, spherical members are
    rejected outright because of their kink).
    """
    n_used, note = _resolve_dim(n)
    fams = (model.psi11, model.psi12, model.psi22)
    if any(f.kind == "Spherical" for f in fams):
        raise NotApplicable("spherical members are not smooth enough at their kink")

    x = np.linspace(_GRID_LO, _GRID_HI, grid_points)
    rr = np.exp(x)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        d11 = _second_form(model.psi11, rr, n_used)
        d22 = _second_form(model.psi22, rr, n_used)
        d12 = _second_form(model.psi12, rr, n_used)

    for name, fam, vals in (("psi11", model.psi11, d11), ("psi22", model.psi22, d22)):
        good = np.isfinite(vals)
        if np.min(vals[good]) < -1e-8 * max(1.0, np.max(np.abs(vals[good]))):
            raise NotApplicable(f"{name} violates the marginal second-order sign condition")
        tail = evaluate(fam, np.array([1e4, 1e6, 1e8]))
        if not (tail[2] < 0.999 and tail[2] <= tail[1] <= tail[0]):
            raise NotApplicable(f"{name} does not decay over the probe grid")
    tail12 = evaluate(model.psi12, np.array([1e4, 1e6, 1e8]))
    if not (tail12[2] < 0.999 and tail12[2] <= tail12[1] <= tail12[0]):
        raise NotApplicable("psi12 does not decay over the probe grid")

    def log_fn(lx):
        r_loc = np.exp(np.atleast_1d(np.asarray(lx, dtype=float)))
        with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
            a = _second_form(model.psi11, r_loc, n_used)
            b = _second_form(model.psi22, r_loc, n_used)
            c = _second_form(model.psi12, r_loc, n_used)
            li = np.log(a) + np.log(b) - 2.0 * np.log(np.abs(c))
        li = np.where(np.isfinite(li), li, np.nan)
        return li, np.sign(c)

    log_inf, location = _scan_infimum(log_fn, [], grid_points=grid_points)
    return _finish_report(log_inf, location, "generic", SUFFICIENT, n_used, note)


# ---------------------------------------------------------------------------
# Bivariate spherical impossibility.

def spherical_triviality(s11: float, s12: float, s22: float, rho: float,
                         k_max: int = 200) -> TrivialityVerdict:
    """Decide validity of the bivariate spherical model.

    The model is valid exactly when rho = 0 or all three scales coincide.
    Otherwise a frequency is produced at which the spectral matrix has a
    negative determinant: the zeros of one marginal density (at twice its
    scale times the tan-equation roots) are generically not zeros of the
    cross density.
    """
    for name, s in (("s11", s11), ("s12", s12), ("s22", s22)):
        if s <= 0.0:
            raise ValueError(f"{name} must be positive")
    if abs(rho) > 1.0:
        raise ValueError("|rho| must not exceed 1")
    if rho == 0.0:
        return TrivialityVerdict(True, None, "rho is zero")
    if _eq(s11, s12) and _eq(s12, s22) and _eq(s11, s22):
        return TrivialityVerdict(True, None, "all scales equal")

    base = s11 if not _eq(s12, s11) else s22
    roots = tan_roots(k_max)
    us = 2.0 * base * roots
    f11 = spherical_density_closed_form(s11, us)
    f22 = spherical_density_closed_form(s22, us)
    f12 = spherical_density_closed_form(s12, us)
    lhs = f11 * f22
    rhs = rho ** 2 * f12 ** 2
    hit = (rhs > 1e3 * lhs) & (rhs > 1e-300)
    if np.any(hit):
        u_star = float(us[np.argmax(hit)])
        return TrivialityVerdict(False, u_star,
                                 "spectral determinant negative at the witness frequency")
    return TrivialityVerdict(False, None,
                             f"distinct scales make the model invalid, but no witness "
                             f"frequency surfaced within the first {k_max} density zeros")
