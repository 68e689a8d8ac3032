"""Joint step/perturbation laws.

A law describes one i.i.d. pair (xi, eta) of strictly positive random
variables: xi is the step length of the driving random walk, eta the
perturbation attached to that step.  The components may be dependent; the
walk only ever sees pairs drawn together.

Built-in families (spec strings shown as parsed by `parse_law`):

    det(a,b)                  xi == a, eta == b (degenerate; exact oracles)
    exp_indep(lx,le)          independent exponentials, rates lx and le
    eta_eq_xi(base)           eta identical to xi; base is exp(l) or
                              lognormal(m,s)
    lognormal_indep(m,s,le)   xi lognormal(m,s), eta exponential(le)
    slow_tail(lx)             xi exponential(lx); eta has CDF 1 - 1/log(t)
                              for t >= e, so no moment of any positive order
                              is finite

All families expose a closed-form perturbation CDF; `eta_cdf_form` exists so
that hypothetical empirical laws can be represented and rejected cleanly by
operations that require the CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import InvalidParameterError, UnsupportedQueryError

__all__ = [
    "JointStepLaw",
    "make_law",
    "parse_law",
    "sample_pair",
    "FAMILIES",
]

FAMILIES = ("det", "exp_indep", "eta_eq_xi", "lognormal_indep", "slow_tail")

#: families accepted as the base step law of eta_eq_xi
_BASE_FAMILIES = ("exp", "lognormal")

#: lower edge of the slow_tail perturbation support
_E = math.e

# Quadrature controls for the CDF integral: aim for a node spacing of 0.01
# but keep the node count inside [1e3, 2e6] so very small and very large
# upper limits both stay cheap and accurate (relative error <= 1e-6 against
# the analytic antiderivatives of every built-in family).
_QUAD_TARGET_STEP = 0.01
_QUAD_MIN_NODES = 1_000
_QUAD_MAX_NODES = 2_000_000
_QUAD_CHUNK = 1_000_000


def _lognormal_moments(m: float, s: float) -> tuple[float, float]:
    mu = math.exp(m + 0.5 * s * s)
    sigma2 = (math.exp(s * s) - 1.0) * math.exp(2.0 * m + s * s)
    return mu, sigma2


def _positive_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    # random() covers [0, 1); the clamp keeps inverse transforms strictly
    # positive and finite at the 2^-53 corner.
    return np.maximum(rng.random(shape), 2.0**-53)


def _exp_inverse(u: np.ndarray, rate: float) -> np.ndarray:
    return -np.log1p(-u) / rate


@dataclass(frozen=True)
class JointStepLaw:
    """Immutable description of one (xi, eta) pair law.

    Instances are created through `make_law` or `parse_law`; the constructor
    performs no validation of its own.
    """

    family: str
    params: tuple[float, ...]
    mu: float
    sigma2: float
    base: str | None = None
    eta_cdf_form: str = field(default="closed-form")

    # -- representation ----------------------------------------------------

    @property
    def spec_string(self) -> str:
        """Canonical parseable form, stable for fingerprinting."""
        args = ",".join(repr(float(p)) for p in self.params)
        if self.family == "eta_eq_xi":
            return f"eta_eq_xi({self.base}({args}))"
        return f"{self.family}({args})"

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0.0

    @property
    def eta_mean_finite(self) -> bool:
        """Whether the perturbation has a finite mean (slow_tail does not)."""
        return self.family != "slow_tail"

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw n pairs (xi, eta) as two aligned float arrays.

        Everything is inverse-transform sampled from a fixed budget of
        uniforms per pair (two, one for the shared-step family, none for
        det), consumed in index order.  That makes the variates independent
        of how a long run is split into blocks: sampling 100 pairs equals
        sampling 60 then 40 on the same generator, so a walk truncated at a
        smaller horizon is an exact prefix of the longer walk.
        """
        if self.family == "det":
            a, b = self.params
            return np.full(n, a), np.full(n, b)
        if self.family == "eta_eq_xi":
            xi = self._base_inverse(_positive_uniform(rng, n))
            return xi, xi
        u = _positive_uniform(rng, (n, 2))
        if self.family == "exp_indep":
            lx, le = self.params
            return _exp_inverse(u[:, 0], lx), _exp_inverse(u[:, 1], le)
        if self.family == "lognormal_indep":
            m, s, le = self.params
            return np.exp(m + s * ndtri(u[:, 0])), _exp_inverse(u[:, 1], le)
        if self.family == "slow_tail":
            (lx,) = self.params
            v = 1.0 - u[:, 1]  # in (0, 1); v -> 1 maps to eta -> e
            with np.errstate(over="ignore"):
                eta = np.exp(1.0 / v)  # saturates to inf beyond any horizon
            return _exp_inverse(u[:, 0], lx), eta
        raise UnsupportedQueryError(f"unknown family {self.family!r}")

    def _base_inverse(self, u: np.ndarray) -> np.ndarray:
        if self.base == "exp":
            (l,) = self.params
            return _exp_inverse(u, l)
        if self.base == "lognormal":
            m, s = self.params
            return np.exp(m + s * ndtri(u))
        raise UnsupportedQueryError(f"unknown base family {self.base!r}")

    # -- distribution functions ---------------------------------------------

    def xi_cdf(self, t):
        """CDF of the step length, vectorised."""
        t = np.asarray(t, dtype=float)
        if self.family == "det":
            out = np.where(t >= self.params[0], 1.0, 0.0)
        elif self.family in ("exp_indep", "slow_tail"):
            lx = self.params[0]
            out = -np.expm1(-lx * np.maximum(t, 0.0))
        elif self.family == "eta_eq_xi":
            out = self._base_cdf(t)
        elif self.family == "lognormal_indep":
            m, s, _ = self.params
            out = self._lognormal_cdf(t, m, s)
        else:
            raise UnsupportedQueryError(f"unknown family {self.family!r}")
        return out

    def eta_cdf(self, t):
        """CDF of the perturbation, vectorised; 0 for negative arguments."""
        if self.eta_cdf_form != "closed-form":
            raise UnsupportedQueryError(
                f"law {self.spec_string} has no closed-form perturbation CDF"
            )
        t = np.asarray(t, dtype=float)
        if self.family == "det":
            out = np.where(t >= self.params[1], 1.0, 0.0)
        elif self.family == "exp_indep":
            le = self.params[1]
            out = -np.expm1(-le * np.maximum(t, 0.0))
        elif self.family == "eta_eq_xi":
            out = self._base_cdf(t)
        elif self.family == "lognormal_indep":
            le = self.params[2]
            out = -np.expm1(-le * np.maximum(t, 0.0))
        elif self.family == "slow_tail":
            safe = np.maximum(t, _E)
            out = np.where(t >= _E, 1.0 - 1.0 / np.log(safe), 0.0)
        else:
            raise UnsupportedQueryError(f"unknown family {self.family!r}")
        return out

    def _base_cdf(self, t: np.ndarray) -> np.ndarray:
        if self.base == "exp":
            return -np.expm1(-self.params[0] * np.maximum(t, 0.0))
        if self.base == "lognormal":
            m, s = self.params
            return self._lognormal_cdf(t, m, s)
        raise UnsupportedQueryError(f"unknown base family {self.base!r}")

    @staticmethod
    def _lognormal_cdf(t: np.ndarray, m: float, s: float) -> np.ndarray:
        out = np.zeros_like(t, dtype=float)
        pos = t > 0.0
        out[pos] = ndtr((np.log(t[pos]) - m) / s)
        return out

    def eta_cdf_integral(self, t: float) -> float:
        """integral_0^t of the perturbation CDF, by composite midpoint rule.

        The degenerate family is integrated exactly (its CDF is a step, which
        the midpoint rule handles poorly); every other family is smooth
        enough that the node budget keeps the relative error below 1e-6.
        """
        t = float(t)
        if t <= 0.0:
            return 0.0
        if self.family == "det":
            return max(0.0, t - self.params[1])
        n = int(min(_QUAD_MAX_NODES, max(_QUAD_MIN_NODES, math.ceil(t / _QUAD_TARGET_STEP))))
        h = t / n
        total = 0.0
        for start in range(0, n, _QUAD_CHUNK):
            stop = min(start + _QUAD_CHUNK, n)
            mid = (np.arange(start, stop, dtype=float) + 0.5) * h
            total += float(np.sum(self.eta_cdf(mid)))
        return total * h


def make_law(family: str, params) -> JointStepLaw:
    """Validate parameters and build a law; see module docstring for families.

    For eta_eq_xi, `params` may be a plain rate (exponential base) or a
    ("exp"|"lognormal", params) tuple; spec strings like
    "eta_eq_xi(lognormal(0,0.5))" go through `parse_law`.
    """
    if family not in FAMILIES:
        raise InvalidParameterError(
            f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}"
        )

    if family == "eta_eq_xi":
        base, bparams = _normalise_base(params)
        if base == "exp":
            (l,) = _positive(bparams, 1, "eta_eq_xi exp base rate")
            return JointStepLaw("eta_eq_xi", (l,), 1.0 / l, 1.0 / (l * l), base="exp")
        m, s = _floats(bparams, 2, "eta_eq_xi lognormal base")
        if s <= 0.0:
            raise InvalidParameterError("lognormal shape must be positive")
        mu, sigma2 = _lognormal_moments(m, s)
        return JointStepLaw("eta_eq_xi", (m, s), mu, sigma2, base="lognormal")

    if family == "det":
        a, b = _positive(params, 2, "det(a,b)")
        return JointStepLaw("det", (a, b), a, 0.0)
    if family == "exp_indep":
        lx, le = _positive(params, 2, "exp_indep(lx,le)")
        return JointStepLaw("exp_indep", (lx, le), 1.0 / lx, 1.0 / (lx * lx))
    if family == "lognormal_indep":
        m, s, le = _floats(params, 3, "lognormal_indep(m,s,le)")
        if s <= 0.0 or le <= 0.0:
            raise InvalidParameterError("lognormal_indep needs s > 0 and le > 0")
        mu, sigma2 = _lognormal_moments(m, s)
        return JointStepLaw("lognormal_indep", (m, s, le), mu, sigma2)
    # slow_tail
    (lx,) = _positive(params, 1, "slow_tail(lx)")
    return JointStepLaw("slow_tail", (lx,), 1.0 / lx, 1.0 / (lx * lx))


def sample_pair(law: JointStepLaw, rng: np.random.Generator) -> tuple[float, float]:
    """Draw a single (xi, eta) pair."""
    xi, eta = law.sample(rng, 1)
    return float(xi[0]), float(eta[0])


# -- spec-string parsing ----------------------------------------------------


def parse_law(text: str) -> JointStepLaw:
    """Parse a law spec string such as "exp_indep(1,1)".

    The grammar is name(arg,...) where each arg is a float literal or, for
    eta_eq_xi only, a nested base spec.  Whitespace is ignored.
    """
    name, args = _split_call(text)
    if name == "eta_eq_xi":
        if len(args) != 1:
            raise InvalidParameterError("eta_eq_xi takes exactly one base spec")
        bname, bargs = _split_call(args[0])
        if bname not in _BASE_FAMILIES:
            raise InvalidParameterError(
                f"eta_eq_xi base must be one of {', '.join(_BASE_FAMILIES)}"
            )
        return make_law("eta_eq_xi", (bname, [_to_float(a) for a in bargs]))
    return make_law(name, [_to_float(a) for a in args])


def _split_call(text: str) -> tuple[str, list[str]]:
    text = text.strip()
    lp = text.find("(")
    if lp < 0 or not text.endswith(")"):
        raise InvalidParameterError(f"malformed law spec {text!r}")
    name = text[:lp].strip()
    body = text[lp + 1 : -1]
    args: list[str] = []
    depth = 0
    cur = ""
    for ch in body:
        if ch == "," and depth == 0:
            args.append(cur)
            cur = ""
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise InvalidParameterError(f"malformed law spec {text!r}")
        cur += ch
    if depth != 0:
        raise InvalidParameterError(f"malformed law spec {text!r}")
    if cur.strip() or args:
        args.append(cur)
    return name, [a.strip() for a in args]


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InvalidParameterError(f"expected a number, got {text!r}") from None


def _normalise_base(params) -> tuple[str, list[float]]:
    if (
        isinstance(params, (tuple, list))
        and len(params) == 2
        and isinstance(params[0], str)
    ):
        return params[0], list(params[1])
    # bare numbers mean an exponential base
    return "exp", [float(p) for p in np.atleast_1d(np.asarray(params, dtype=float))]


def _floats(params, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(p) for p in params)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{what}: parameters must be numbers") from None
    if len(vals) != n:
        raise InvalidParameterError(f"{what}: expected {n} parameters, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise InvalidParameterError(f"{what}: parameters must be finite")
    return vals


def _positive(params, n: int, what: str) -> tuple[float, ...]:
    vals = _floats(params, n, what)
    if any(v <= 0.0 for v in vals):
        raise InvalidParameterError(f"{what}: parameters must be positive")
    return vals
