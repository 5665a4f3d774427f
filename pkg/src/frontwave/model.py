"""Model data and closed-form derived quantities.

The reaction pair couples a bacteria density u and an infective density v
through u_t = d1*u_xx - a*u + H(v), v_t = d2*v_xx - b*v + G(u). The pair
(H, G) is strictly increasing, strictly concave, vanishes at 0, and
saturates: G(H(z)/a) < b*z for some z > 0.

Closed forms implemented here:

* reproduction number  R0 = H'(0) G'(0) / (a b); spreading needs R0 > 1
* equilibrium (u*, v*): the unique positive root of a*u = H(v), b*v = G(u)
* threshold habitat length
      l0 = pi * sqrt( (a d2 + b d1 + sqrt((a d2 - b d1)^2 + 4 d1 d2 H'(0)G'(0)))
                      / (2 (H'(0)G'(0) - a b)) )
  for a Dirichlet fixed boundary, and half of that for Neumann.

All types are frozen dataclasses; operations are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import (
    BracketingFailure,
    InvalidRegime,
    NonCompliant,
    NoPositiveRoot,
)

__all__ = [
    "BoundaryKind",
    "Nonlinearity",
    "ModelParams",
    "Equilibrium",
    "InitialData",
    "HypothesisReport",
    "ValidationReport",
    "saturating",
    "cholera",
    "check_hypotheses",
    "compute_R0",
    "compute_equilibrium",
    "compute_l0",
    "validate_initial_data",
]


class BoundaryKind(str, Enum):
    """Operator imposed at the fixed boundary x = 0."""

    DIRICHLET = "dirichlet"  # value pinned to 0
    NEUMANN = "neumann"      # one-sided slope pinned to 0


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction pair (H, G) with analytic first and second derivatives.

    Derivatives are required inputs rather than finite-differenced: they feed
    the minimal-speed tangency, the threshold length and the decay rates,
    where differencing noise would corrupt tangency detection. All callables
    must accept scalars or numpy arrays of nonnegative arguments.

    ``weak_h`` / ``weak_g`` admit a linear component (second derivative
    identically zero, e.g. the cholera variant H(v) = c*v); the strict
    concavity clause is then relaxed to <= 0 for that component.
    """

    name: str
    H: Callable
    G: Callable
    dH: Callable
    dG: Callable
    d2H: Callable
    d2G: Callable
    params: tuple = ()
    weak_h: bool = False
    weak_g: bool = False


def saturating(hp: float = 2.0, hq: float = 1.0, gp: float = 2.0, gq: float = 1.0) -> Nonlinearity:
    """Saturating pair H(z) = hp*z/(1+hq*z), G(z) = gp*z/(1+gq*z).

    The package default; hp=gp=2, hq=gq=1 with a=b=1 is the symmetric
    benchmark scenario (equilibrium at (1,1), R0=4).
    """
    if min(hp, gp) <= 0 or min(hq, gq) <= 0:
        raise ValueError("saturating pair needs positive coefficients")
    return Nonlinearity(
        name="saturating",
        H=lambda z: hp * z / (1.0 + hq * z),
        G=lambda z: gp * z / (1.0 + gq * z),
        dH=lambda z: hp / (1.0 + hq * z) ** 2,
        dG=lambda z: gp / (1.0 + gq * z) ** 2,
        d2H=lambda z: -2.0 * hp * hq / (1.0 + hq * z) ** 3,
        d2G=lambda z: -2.0 * gp * gq / (1.0 + gq * z) ** 3,
        params=(("hp", hp), ("hq", hq), ("gp", gp), ("gq", gq)),
    )


def cholera(c: float = 1.0, gp: float = 2.0, gq: float = 1.0) -> Nonlinearity:
    """Cholera variant: linear H(v) = c*v with a saturating G.

    H'' is identically zero, so the pair only weakly satisfies the structure
    hypotheses; the report records this and downstream callers decide.
    """
    if c <= 0 or gp <= 0 or gq <= 0:
        raise ValueError("cholera variant needs positive coefficients")
    return Nonlinearity(
        name="cholera",
        H=lambda z: c * np.asarray(z, dtype=float) * 1.0,
        G=lambda z: gp * z / (1.0 + gq * z),
        dH=lambda z: c * np.ones_like(np.asarray(z, dtype=float)),
        dG=lambda z: gp / (1.0 + gq * z) ** 2,
        d2H=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        d2G=lambda z: -2.0 * gp * gq / (1.0 + gq * z) ** 3,
        params=(("c", c), ("gp", gp), ("gq", gq)),
        weak_h=True,
    )


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters and the fixed-boundary operator.

    d1, d2 are diffusivities, a, b linear decay rates, mu1, mu2 the Stefan
    coefficients in h'(t) = -mu1*u_x(t,h) - mu2*v_x(t,h). Both mu may be zero
    together only for the degenerate fixed-domain case; the free-boundary
    speed machinery requires mu1 + mu2 > 0 and enforces it there.
    """

    d1: float
    d2: float
    a: float
    b: float
    mu1: float
    mu2: float
    boundary: BoundaryKind = BoundaryKind.NEUMANN

    def __post_init__(self):
        for name in ("d1", "d2", "a", "b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("Stefan coefficients must be nonnegative")
        object.__setattr__(self, "boundary", BoundaryKind(self.boundary))


@dataclass(frozen=True)
class Equilibrium:
    """Positive equilibrium (u*, v*) with the derivative values used downstream."""

    u_star: float
    v_star: float
    Hp_vstar: float  # H'(v*)
    Gp_ustar: float  # G'(u*)


@dataclass(frozen=True)
class InitialData:
    """Initial densities sampled on nodes of [0, h0].

    Admissible data vanishes at h0 and is positive inside; at x = 0 it
    vanishes with positive inward slope (Dirichlet) or has zero one-sided
    slope (Neumann).
    """

    h0: float
    x: np.ndarray
    u0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        if self.h0 <= 0:
            raise ValueError("h0 must be positive")
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise ValueError("initial data needs at least 3 sample nodes")
        if abs(x[0]) > 1e-14 * self.h0 or abs(x[-1] - self.h0) > 1e-12 * self.h0:
            raise ValueError("sample nodes must span [0, h0]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u0", np.asarray(self.u0, dtype=float))
        object.__setattr__(self, "v0", np.asarray(self.v0, dtype=float))
        if self.u0.shape != x.shape or self.v0.shape != x.shape:
            raise ValueError("u0, v0 must match the sample nodes")

    @classmethod
    def from_callables(cls, h0: float, fu: Callable, fv: Callable, n: int = 401) -> "InitialData":
        x = np.linspace(0.0, h0, n)
        return cls(h0=h0, x=x, u0=fu(x), v0=fv(x))

    @classmethod
    def sine(cls, h0: float, amplitude: float = 0.5, n: int = 401) -> "InitialData":
        """A*sin(pi x / h0): Dirichlet-admissible bump."""
        return cls.from_callables(h0, lambda x: amplitude * np.sin(np.pi * x / h0),
                                  lambda x: amplitude * np.sin(np.pi * x / h0), n)

    @classmethod
    def cosine_bump(cls, h0: float, amplitude: float = 0.5, n: int = 401) -> "InitialData":
        """A*cos(pi x / (2 h0)): Neumann-admissible bump (flat at 0, zero at h0)."""
        return cls.from_callables(h0, lambda x: amplitude * np.cos(np.pi * x / (2 * h0)),
                                  lambda x: amplitude * np.cos(np.pi * x / (2 * h0)), n)

    @classmethod
    def from_table(cls, path) -> "InitialData":
        """Load columns x,u0,v0 from a CSV file with a one-line header."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float)
        if data.ndim != 2 or data.shape[1] != 3:
            raise ValueError("table file must have three columns: x,u0,v0")
        x = data[:, 0]
        return cls(h0=float(x[-1]), x=x, u0=data[:, 1], v0=data[:, 2])


# ---------------------------------------------------------------------------
# hypothesis checking
# ---------------------------------------------------------------------------

_CLAUSES = ("origin", "dH_positive", "dG_positive", "d2H_negative", "d2G_negative", "saturation")


@dataclass(frozen=True)
class HypothesisReport:
    """Per-clause verdicts of the structure hypotheses on a sampled grid."""

    passed: bool
    clauses: dict
    min_dH: float
    min_dG: float
    max_d2H: float
    max_d2G: float
    z_hat: float | None
    weak: bool
    failures: tuple

    def raise_if_failed(self) -> None:
        if not self.passed:
            raise NonCompliant(self.failures[0])


def check_hypotheses(nl: Nonlinearity, params: ModelParams, z_max: float,
                     n_samples: int = 512) -> HypothesisReport:
    """Verify the structure hypotheses on a log-spaced sample of [1e-8, z_max].

    Sampled, not symbolic: nonlinearities are supplied as callables. Records
    the extreme derivative values seen and the smallest sampled z with
    G(H(z)/a) < b*z, or marks the saturation clause failed.
    """
    if z_max <= 0:
        raise ValueError("z_max must be positive")
    z = np.geomspace(1e-8, z_max, n_samples)

    h0 = float(nl.H(0.0))
    g0 = float(nl.G(0.0))
    origin_ok = h0 == 0.0 and g0 == 0.0

    dh = np.asarray(nl.dH(np.concatenate(([0.0], z))), dtype=float)
    dg = np.asarray(nl.dG(np.concatenate(([0.0], z))), dtype=float)
    min_dH = float(dh.min())
    min_dG = float(dg.min())

    d2h = np.asarray(nl.d2H(z), dtype=float)
    d2g = np.asarray(nl.d2G(z), dtype=float)
    max_d2H = float(d2h.max())
    max_d2G = float(d2g.max())
    conc_h_ok = max_d2H <= 0.0 if nl.weak_h else max_d2H < 0.0
    conc_g_ok = max_d2G <= 0.0 if nl.weak_g else max_d2G < 0.0

    sat = np.asarray(nl.G(np.asarray(nl.H(z)) / params.a), dtype=float) < params.b * z
    z_hat = float(z[np.argmax(sat)]) if bool(sat.any()) else None

    clauses = {
        "origin": origin_ok,
        "dH_positive": min_dH > 0.0,
        "dG_positive": min_dG > 0.0,
        "d2H_negative": conc_h_ok,
        "d2G_negative": conc_g_ok,
        "saturation": z_hat is not None,
    }
    failures = tuple(name for name in _CLAUSES if not clauses[name])
    return HypothesisReport(
        passed=not failures,
        clauses=clauses,
        min_dH=min_dH,
        min_dG=min_dG,
        max_d2H=max_d2H,
        max_d2G=max_d2G,
        z_hat=z_hat,
        weak=nl.weak_h or nl.weak_g,
        failures=failures,
    )


def compute_R0(nl: Nonlinearity, params: ModelParams) -> float:
    """Basic reproduction number H'(0) G'(0) / (a b)."""
    return float(nl.dH(0.0)) * float(nl.dG(0.0)) / (params.a * params.b)


def compute_equilibrium(nl: Nonlinearity, params: ModelParams) -> Equilibrium:
    """Positive root of a*u = H(v), b*v = G(u) by bracketed bisection.

    Scalar root-find on g(v) = b*v - G(H(v)/a): negative near 0 when R0 > 1,
    positive for large v by the saturation clause. Bracket grows by doubling
    from [eps, 1]; bisection runs to absolute width 1e-14 (or 4 ulp), then a
    few secant polish steps. Both residuals come out <= 1e-12 relative.
    """
    a, b = params.a, params.b
    if compute_R0(nl, params) <= 1.0:
        raise NoPositiveRoot("R0 <= 1: only the trivial equilibrium exists")

    def g(v: float) -> float:
        return b * v - float(nl.G(float(nl.H(v)) / a))

    lo = 1e-12
    while g(lo) >= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise BracketingFailure("no negative value of g near 0")
    hi = 1.0
    doublings = 0
    while g(hi) <= 0.0:
        lo = hi  # g(hi) <= 0: hi is a valid lower bracket end
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise BracketingFailure("bracket expansion exhausted without sign change")

    while hi - lo > max(1e-14, 4.0 * np.spacing(hi)):
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    v = 0.5 * (lo + hi)

    for _ in range(3):  # secant polish; bisection already near machine width
        gv = g(v)
        dv = 1e-7 * max(1.0, abs(v))
        slope = (g(v + dv) - gv) / dv
        if slope == 0.0 or not math.isfinite(slope):
            break
        step = gv / slope
        if abs(step) > abs(hi - lo):
            break
        v -= step

    u = float(nl.H(v)) / a
    res_u = abs(a * u - float(nl.H(v))) / max(abs(a * u), 1e-300)
    res_v = abs(b * v - float(nl.G(u))) / max(abs(b * v), 1e-300)
    if u <= 0 or v <= 0 or max(res_u, res_v) > 1e-12:
        raise BracketingFailure(f"equilibrium residuals too large: {res_u:.2e}, {res_v:.2e}")
    return Equilibrium(u_star=u, v_star=v,
                       Hp_vstar=float(nl.dH(v)), Gp_ustar=float(nl.dG(u)))


def compute_l0(nl: Nonlinearity, params: ModelParams) -> float:
    """Threshold habitat length; spreading is guaranteed once h0 >= l0.

    Neumann value is exactly half the Dirichlet value.
    """
    k = float(nl.dH(0.0)) * float(nl.dG(0.0))
    ab = params.a * params.b
    if k <= ab:
        raise InvalidRegime("H'(0)G'(0) <= a*b: threshold length undefined")
    core = math.sqrt(
        (params.a * params.d2 + params.b * params.d1
         + math.sqrt((params.a * params.d2 - params.b * params.d1) ** 2
                     + 4.0 * params.d1 * params.d2 * k))
        / (2.0 * (k - ab))
    )
    half = 1.0 if params.boundary is BoundaryKind.DIRICHLET else 0.5
    return half * math.pi * core


# ---------------------------------------------------------------------------
# initial-data validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple  # of (component, clause, node_index)


def _one_sided_slope(x: np.ndarray, w: np.ndarray) -> float:
    # second-order 3-point stencil at the left end; requires near-uniform spacing there
    dx = x[1] - x[0]
    return float((-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dx))


def validate_initial_data(init: InitialData, params: ModelParams) -> ValidationReport:
    """Check the admissibility clauses for the active boundary operator.

    Report-style: never raises on bad data; violations carry the component,
    the failed clause and the offending node index. Endpoint zeros are
    checked to 1e-12 of the data scale (sampled analytic shapes leave
    roundoff-level residue at the endpoints).
    """
    if init.x.size < 3:
        raise ValueError("initial data needs at least 3 sample nodes")
    violations = []
    for name, w in (("u0", init.u0), ("v0", init.v0)):
        scale = float(np.max(np.abs(w))) or 1.0
        tol = 1e-12 * scale
        if abs(w[-1]) > tol:
            violations.append((name, "value_at_h0", init.x.size - 1))
        interior = slice(1, -1)
        bad = np.where(w[interior] <= 0.0)[0]
        if bad.size:
            violations.append((name, "interior_positive", int(bad[0]) + 1))
        slope0 = _one_sided_slope(init.x, w)
        if params.boundary is BoundaryKind.DIRICHLET:
            if abs(w[0]) > tol:
                violations.append((name, "value_at_0", 0))
            if slope0 <= 0.0:
                violations.append((name, "inward_slope_positive", 0))
        else:
            if w[0] <= 0.0:
                violations.append((name, "value_at_0_positive", 0))
            if abs(slope0) > 1e-6 * scale / init.h0:
                violations.append((name, "zero_slope_at_0", 0))
    return ValidationReport(passed=not violations, violations=tuple(violations))
