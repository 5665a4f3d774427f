"""Semi-wave profiles, minimal speed, and the free-boundary speed c0.

The travelling ansatz on the half line gives the two-point problem

    d1*phi'' - c*phi' - a*phi + H(psi) = 0,   x > 0,
    d2*psi'' - c*psi' - b*psi + G(phi) = 0,   x > 0,
    phi(0) = psi(0) = 0,   (phi, psi)(inf) = (u*, v*),

which has a unique strictly increasing solution for every speed c in
[0, c*). Three speeds matter:

* c*: smallest c for which P(lam, c) = (d1 lam^2 - c lam - a)
  (d2 lam^2 - c lam - b) - H'(0)G'(0) has a positive double root with a
  positive eigenvector. On the admissible branch (both factors negative)

      c(lam) = (S + sqrt(D^2 + 4 H'(0)G'(0))) / (2 lam),
      S = (d1 lam^2 - a) + (d2 lam^2 - b),  D = (d1 lam^2 - a) - (d2 lam^2 - b),

  and c* = min over lam > 0, located by a scan plus a tangency Newton
  iteration on (P, dP/dlam) = 0.

* c0: the unique root in (0, c*) of F(c) = mu1*phi_c'(0) + mu2*psi_c'(0) - c.
  F(0) > 0 since the slopes are positive; a ladder of profile solves
  brackets the sign change, bisection finishes.

* beta(c): the tail rate in (u* - phi, v* - psi) ~ e^{-beta x} (p, q).
  Linearizing at (u*, v*) gives (d1 b^2 + c b - a)(d2 b^2 + c b - b) =
  H'(v*) G'(u*); a positive eigenvector (p, q) forces both factors
  negative, i.e. the smaller positive root.

The BVP itself is solved by parabolic relaxation (diffusion, advection and
self-decay implicit per component, cross coupling explicit) from the guess
(u* tanh x, v* tanh x), finished by a damped Newton iteration on the
discretized steady system (second-order central differences, hard pin to
(u*, v*) at the truncation point X_max = max(40, 12/beta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    NoAdmissibleRoot,
    NoConvergence,
    NoSignChange,
    NotPositive,
    NoTangency,
    SolverError,
    SpeedOutOfRange,
    TailUnderflow,
)
from .model import Equilibrium, ModelParams, Nonlinearity, compute_equilibrium, compute_R0
from ._format import write_csv

__all__ = [
    "SemiwaveNumerics",
    "SemiWaveProfile",
    "SteadyHalfLineProfile",
    "SpeedPair",
    "DecayFit",
    "compute_cstar",
    "solve_semiwave",
    "find_c0",
    "decay_rate_theoretical",
    "decay_rate_empirical",
    "solve_halfline_steady",
]

# profile values this close to saturation are below double-precision
# resolution of u* - phi; strictness checks skip them
_SATURATION_TOL = 1e-12


@dataclass(frozen=True)
class SemiwaveNumerics:
    dx: float = 0.02
    x_max: float | None = None      # None: max(40, 12/beta), rounded to the grid
    residual_tol: float = 1e-8
    relax_dt: float = 0.25
    relax_rate_tol: float = 1e-10   # sup time-derivative per unit pseudo-time
    max_relax_steps: int = 40_000
    max_newton: int = 12
    ladder: int = 32                # speed samples bracketing the c0 sign change
    c_tol: float = 1e-9
    f_tol: float = 1e-8
    c_max_frac: float = 0.999


@dataclass(frozen=True)
class SemiWaveProfile:
    """Monotone half-line profile at speed c, pinned to (u*, v*) at x_max."""

    c: float
    x_nodes: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    slope0_phi: float
    slope0_psi: float
    residual_inf: float
    x_max: float

    def to_csv(self, path) -> None:
        write_csv(path, ("x", "phi", "psi"), zip(self.x_nodes, self.phi, self.psi))


@dataclass(frozen=True)
class SteadyHalfLineProfile:
    """Zero-speed steady state on the half line (identical system at c=0)."""

    x_nodes: np.ndarray
    U: np.ndarray
    V: np.ndarray
    residual_inf: float


@dataclass(frozen=True)
class SpeedPair:
    c_star: float
    c0: float
    lambda_star: float
    F_residual: float


@dataclass(frozen=True)
class DecayFit:
    alpha: float
    r_squared: float
    n_points: int


# ---------------------------------------------------------------------------
# minimal speed: tangency of the characteristic polynomial
# ---------------------------------------------------------------------------

def _poly_terms(lam: float, c: float, params: ModelParams, k: float):
    A = params.d1 * lam * lam - c * lam - params.a
    B = params.d2 * lam * lam - c * lam - params.b
    A_l = 2.0 * params.d1 * lam - c
    B_l = 2.0 * params.d2 * lam - c
    P = A * B - k
    P_l = A_l * B + A * B_l
    P_c = -lam * (A + B)
    P_ll = 2.0 * params.d1 * B + 2.0 * A_l * B_l + 2.0 * params.d2 * A
    P_lc = -(A + B) - lam * (A_l + B_l)
    return A, B, P, P_l, P_c, P_ll, P_lc


def compute_cstar(nl: Nonlinearity, params: ModelParams) -> tuple[float, float]:
    """Minimal wave speed and its tangency root (c*, lambda*).

    Scan the admissible branch c(lam), refine the minimum, then Newton on
    (P, dP/dlam) = 0 with the analytic Jacobian until both tangency
    residuals are at machine level (well under the 1e-9 requirement).
    """
    k = float(nl.dH(0.0)) * float(nl.dG(0.0))
    ab = params.a * params.b
    if k <= ab:
        raise NoTangency("reproduction number at or below 1: no positive growth mode")

    def c_branch(lam):
        fa = params.d1 * lam * lam - params.a
        fb = params.d2 * lam * lam - params.b
        return (fa + fb + np.sqrt((fa - fb) ** 2 + 4.0 * k)) / (2.0 * lam)

    lam_grid = np.geomspace(1e-3, 1e3, 4001)
    c_vals = c_branch(lam_grid)
    i0 = int(np.argmin(c_vals))
    lo = lam_grid[max(i0 - 1, 0)]
    hi = lam_grid[min(i0 + 1, lam_grid.size - 1)]
    res = minimize_scalar(c_branch, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    lam, c = float(res.x), float(res.fun)

    for _ in range(60):
        A, B, P, P_l, P_c, P_ll, P_lc = _poly_terms(lam, c, params, k)
        if abs(P) < 1e-13 and abs(P_l) < 1e-13:
            break
        det = P_l * P_lc - P_c * P_ll
        if det == 0.0 or not math.isfinite(det):
            break
        dlam = -(P * P_lc - P_c * P_l) / det
        dc = -(P_l * P_l - P * P_ll) / det
        lam += dlam
        c += dc
    A, B, P, P_l, *_ = _poly_terms(lam, c, params, k)
    if not (lam > 0 and c > 0 and abs(P) <= 1e-9 and abs(P_l) <= 1e-9 and A < 0 and B < 0):
        raise NoTangency(f"tangency polish failed: P={P:.2e}, dP/dlam={P_l:.2e}")
    return c, lam


# ---------------------------------------------------------------------------
# tail decay rate at the saturated end
# ---------------------------------------------------------------------------

def decay_rate_theoretical(nl: Nonlinearity, params: ModelParams, c: float,
                           eq: Equilibrium | None = None) -> tuple[float, float]:
    """Tail rate beta and amplitude ratio p/q of the approach to (u*, v*).

    beta is the unique positive root of
        (a - d1 b^2 - c b)(b - d2 b^2 - c b) = H'(v*) G'(u*)
    with both factors positive (the eigenvector (p, q) is then positive);
    that is the smaller of the two positive roots of the quartic.
    """
    eq = eq or compute_equilibrium(nl, params)
    prod = eq.Hp_vstar * eq.Gp_ustar
    a, b, d1, d2 = params.a, params.b, params.d1, params.d2
    if a * b <= prod:
        raise NoAdmissibleRoot("H'(v*)G'(u*) >= a*b: equilibrium not linearly stable")

    beta_a = (-c + math.sqrt(c * c + 4.0 * d1 * a)) / (2.0 * d1)
    beta_b = (-c + math.sqrt(c * c + 4.0 * d2 * b)) / (2.0 * d2)
    bmax = min(beta_a, beta_b)

    def g(beta):
        return (a - d1 * beta * beta - c * beta) * (b - d2 * beta * beta - c * beta) - prod

    beta = brentq(g, 0.0, bmax, xtol=1e-15, rtol=8.9e-16)
    p_over_q = eq.Hp_vstar / (a - d1 * beta * beta - c * beta)
    return float(beta), float(p_over_q)


# ---------------------------------------------------------------------------
# BVP solve: relaxation + Newton polish
# ---------------------------------------------------------------------------

def _steady_residual(phi, psi, c, nl, params, dx):
    """Interior residual of the discretized steady system (both components)."""
    d1, d2, a, b = params.d1, params.d2, params.a, params.b
    lap_phi = (phi[:-2] - 2.0 * phi[1:-1] + phi[2:]) / (dx * dx)
    lap_psi = (psi[:-2] - 2.0 * psi[1:-1] + psi[2:]) / (dx * dx)
    adv_phi = (phi[2:] - phi[:-2]) / (2.0 * dx)
    adv_psi = (psi[2:] - psi[:-2]) / (2.0 * dx)
    r_phi = d1 * lap_phi - c * adv_phi - a * phi[1:-1] + nl.H(psi[1:-1])
    r_psi = d2 * lap_psi - c * adv_psi - b * psi[1:-1] + nl.G(phi[1:-1])
    return r_phi, r_psi


def _implicit_operator(n, kappa, gamma, decay, dt):
    """Banded (1,1) matrix of (1/dt - d*dxx + c*dx + decay) with pinned ends."""
    ab = np.zeros((3, n))
    ab[1, :] = 1.0 / dt + 2.0 * kappa + decay
    ab[0, 1:] = -kappa + gamma   # superdiagonal: coefficient of w_{i+1}
    ab[2, :-1] = -kappa - gamma  # subdiagonal: coefficient of w_{i-1}
    ab[1, 0] = ab[1, -1] = 1.0
    ab[0, 1] = 0.0
    ab[2, -2] = 0.0
    return ab


def _relax(phi, psi, c, nl, params, dx, num: SemiwaveNumerics, u_star, v_star):
    n = phi.size
    dt = num.relax_dt
    kap1 = params.d1 / (dx * dx)
    kap2 = params.d2 / (dx * dx)
    gam = c / (2.0 * dx)
    ab1 = _implicit_operator(n, kap1, gam, params.a, dt)
    ab2 = _implicit_operator(n, kap2, gam, params.b, dt)
    for _ in range(num.max_relax_steps):
        rhs = phi / dt + nl.H(psi)
        rhs[0], rhs[-1] = 0.0, u_star
        phi_new = solve_banded((1, 1), ab1, rhs)
        rhs = psi / dt + nl.G(phi_new)
        rhs[0], rhs[-1] = 0.0, v_star
        psi_new = solve_banded((1, 1), ab2, rhs)
        rate = max(np.max(np.abs(phi_new - phi)), np.max(np.abs(psi_new - psi))) / dt
        phi, psi = phi_new, psi_new
        if not np.isfinite(rate):
            raise NoConvergence(num.max_relax_steps, "relaxation diverged")
        if rate < num.relax_rate_tol:
            break
    return phi, psi


def _newton_polish(phi, psi, c, nl, params, dx, num: SemiwaveNumerics):
    n = phi.size
    m = n - 2  # interior nodes
    d1, d2, a, b = params.d1, params.d2, params.a, params.b
    kap1, kap2 = d1 / (dx * dx), d2 / (dx * dx)
    gam = c / (2.0 * dx)

    def resid_norm(p, q):
        r1, r2 = _steady_residual(p, q, c, nl, params, dx)
        return max(np.max(np.abs(r1)), np.max(np.abs(r2)))

    res = resid_norm(phi, psi)
    for _ in range(num.max_newton):
        if res <= 1e-13:
            break
        r1, r2 = _steady_residual(phi, psi, c, nl, params, dx)
        rhs = np.empty(2 * m)
        rhs[0::2] = -r1
        rhs[1::2] = -r2

        ab = np.zeros((5, 2 * m))
        ab[2, 0::2] = -2.0 * kap1 - a                    # phi diagonal
        ab[2, 1::2] = -2.0 * kap2 - b                    # psi diagonal
        ab[1, 1::2] = nl.dH(psi[1:-1])                   # phi-row coupling to psi_i
        ab[3, 0:-1:2] = nl.dG(phi[1:-1])                 # psi-row coupling to phi_i
        ab[0, 2::2] = kap1 - gam                         # phi_{i+1}
        ab[0, 3::2] = kap2 - gam                         # psi_{i+1}
        ab[4, 0:-2:2] = kap1 + gam                       # phi_{i-1}
        ab[4, 1:-2:2] = kap2 + gam                       # psi_{i-1}

        delta = solve_banded((2, 2), ab, rhs)
        step = 1.0
        for _ in range(8):
            p_try = phi.copy()
            q_try = psi.copy()
            p_try[1:-1] += step * delta[0::2]
            q_try[1:-1] += step * delta[1::2]
            new_res = resid_norm(p_try, q_try)
            if new_res < res:
                phi, psi, res = p_try, q_try, new_res
                break
            step *= 0.5
        else:
            break  # no improving step: stagnated at float precision
    return phi, psi, res


def _one_sided_slope(w, dx):
    return (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dx)


def _validate_profile(phi, psi, u_star, v_star):
    for w, w_star, name in ((phi, u_star, "phi"), (psi, v_star, "psi")):
        if not np.all(np.isfinite(w)):
            raise SolverError(f"{name} contains non-finite values")
        if w[0] != 0.0:
            raise SolverError(f"{name}(0) not pinned to zero")
        if w.min() < 0.0 or w.max() > w_star:
            raise SolverError(f"{name} outside [0, {name}*]")
        d = np.diff(w)
        if np.any(d < 0.0):
            raise SolverError(f"{name} not monotone")
        unsaturated = (w_star - w[:-1]) > _SATURATION_TOL * max(w_star, 1.0)
        if np.any(d[unsaturated] <= 0.0):
            raise SolverError(f"{name} not strictly increasing away from saturation")


def solve_semiwave(c: float, nl: Nonlinearity, params: ModelParams,
                   numerics: SemiwaveNumerics | None = None,
                   eq: Equilibrium | None = None,
                   cstar: float | None = None,
                   initial_guess: SemiWaveProfile | None = None) -> SemiWaveProfile:
    """Solve the half-line profile at speed c in [0, c*).

    Relaxation brings the tanh guess near the profile; Newton drives the
    discrete residual to machine level. A warm start (``initial_guess`` on
    the same grid) skips straight to Newton — the speed-ladder continuation
    in find_c0 relies on this.
    """
    num = numerics or SemiwaveNumerics()
    eq = eq or compute_equilibrium(nl, params)
    if c < 0:
        raise SpeedOutOfRange("negative speeds are not admissible")
    cs = cstar if cstar is not None else compute_cstar(nl, params)[0]
    if c >= cs:
        raise SpeedOutOfRange(f"c={c} >= c*={cs}")

    beta, _ = decay_rate_theoretical(nl, params, c, eq)
    if num.x_max is None:
        x_max = max(40.0, 12.0 / beta)
    else:
        x_max = num.x_max
    n_cells = int(math.ceil(x_max / num.dx - 1e-12))
    x = np.linspace(0.0, n_cells * num.dx, n_cells + 1)
    dx = num.dx
    x_max = float(x[-1])

    warm = (initial_guess is not None and initial_guess.x_nodes.size == x.size
            and abs(initial_guess.x_max - x_max) < 1e-12)
    if warm:
        phi = initial_guess.phi.copy()
        psi = initial_guess.psi.copy()
    else:
        phi = eq.u_star * np.tanh(x)
        psi = eq.v_star * np.tanh(x)
        phi[0] = psi[0] = 0.0
        phi[-1], psi[-1] = eq.u_star, eq.v_star
        phi, psi = _relax(phi, psi, c, nl, params, dx, num, eq.u_star, eq.v_star)

    phi, psi, res = _newton_polish(phi, psi, c, nl, params, dx, num)
    if res > num.residual_tol:
        if warm:  # bad warm start: fall back to the cold path once
            return solve_semiwave(c, nl, params, num, eq, cs, None)
        raise NoConvergence(num.max_newton, f"steady residual {res:.2e}")

    # roundoff guard: Newton may leave values a few ulp outside [0, w*]
    np.clip(phi, 0.0, eq.u_star, out=phi)
    np.clip(psi, 0.0, eq.v_star, out=psi)
    phi[0] = psi[0] = 0.0
    _validate_profile(phi, psi, eq.u_star, eq.v_star)

    return SemiWaveProfile(
        c=float(c),
        x_nodes=x,
        phi=phi,
        psi=psi,
        slope0_phi=float(_one_sided_slope(phi, dx)),
        slope0_psi=float(_one_sided_slope(psi, dx)),
        residual_inf=float(res),
        x_max=x_max,
    )


# ---------------------------------------------------------------------------
# free-boundary speed
# ---------------------------------------------------------------------------

def find_c0(nl: Nonlinearity, params: ModelParams,
            numerics: SemiwaveNumerics | None = None
            ) -> tuple[SpeedPair, SemiWaveProfile]:
    """Locate the unique c0 in (0, c*) with mu1*phi'(0) + mu2*psi'(0) = c0.

    Evaluates F along an equispaced speed ladder until the sign change is
    bracketed (F(0) > 0 always: the slopes are positive), then bisects the
    bracket to c_tol. Monotonicity of F is not assumed.
    """
    num = numerics or SemiwaveNumerics()
    if params.mu1 + params.mu2 <= 0.0:
        raise ValueError("free-boundary speed needs mu1 + mu2 > 0")
    if compute_R0(nl, params) <= 1.0:
        raise NoTangency("reproduction number at or below 1")
    eq = compute_equilibrium(nl, params)
    c_star, lam_star = compute_cstar(nl, params)

    last_profile: list[SemiWaveProfile | None] = [None]

    def F(c: float) -> float:
        prof = solve_semiwave(c, nl, params, num, eq, c_star, last_profile[0])
        last_profile[0] = prof
        return params.mu1 * prof.slope0_phi + params.mu2 * prof.slope0_psi - c

    f_lo = F(0.0)
    if f_lo <= 0.0:
        raise NoSignChange(f"F(0)={f_lo:.3e} not positive: slopes corrupt")
    c_lo = 0.0
    c_hi = None
    top = num.c_max_frac * c_star
    for i in range(1, num.ladder + 1):
        ci = top * i / num.ladder
        fi = F(ci)
        if fi <= 0.0:
            c_hi = ci
            break
        c_lo, f_lo = ci, fi
    if c_hi is None:
        raise NoSignChange(f"F positive over the whole ladder up to {top:.6g}")

    while c_hi - c_lo > num.c_tol:
        mid = 0.5 * (c_lo + c_hi)
        if F(mid) > 0.0:
            c_lo = mid
        else:
            c_hi = mid

    c0 = 0.5 * (c_lo + c_hi)
    profile = solve_semiwave(c0, nl, params, num, eq, c_star, last_profile[0])
    f_res = abs(params.mu1 * profile.slope0_phi + params.mu2 * profile.slope0_psi - c0)
    if f_res > num.f_tol:
        raise SolverError(f"|F(c0)|={f_res:.3e} exceeds tolerance {num.f_tol}")
    if not (0.0 < c0 < c_star):
        raise SolverError(f"c0={c0} outside (0, c*)")
    return SpeedPair(c_star=c_star, c0=float(c0), lambda_star=lam_star,
                     F_residual=float(f_res)), profile


# ---------------------------------------------------------------------------
# empirical tail rate and the half-line steady state
# ---------------------------------------------------------------------------

def decay_rate_empirical(profile: SemiWaveProfile, eq: Equilibrium,
                         tail_frac: float = 0.3,
                         pin_guard_frac: float = 0.15) -> DecayFit:
    """Least-squares log-slope of u*-phi + v*-psi over the grid tail.

    The window is the trailing ``tail_frac`` of the grid, stopped short of
    the last ``pin_guard_frac``: the hard pin at x_max carries a truncation
    boundary layer (decaying inward at the second characteristic rate) that
    would bias the fitted slope. Nodes indistinguishable from saturation
    (< 1e-13) are dropped, and fewer than 8 usable nodes is an underflow.
    """
    x = profile.x_nodes
    vals = (eq.u_star - profile.phi) + (eq.v_star - profile.psi)
    window = ((x >= (1.0 - tail_frac) * profile.x_max)
              & (x <= (1.0 - pin_guard_frac) * profile.x_max))
    usable = window & (vals >= 1e-13)
    if int(usable.sum()) < 8:
        raise TailUnderflow(f"only {int(usable.sum())} usable tail nodes")
    xw = x[usable]
    yw = np.log(vals[usable])
    slope, intercept = np.polyfit(xw, yw, 1)
    fitted = slope * xw + intercept
    ss_res = float(np.sum((yw - fitted) ** 2))
    ss_tot = float(np.sum((yw - yw.mean()) ** 2))
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(alpha=float(-slope), r_squared=r2, n_points=int(usable.sum()))


def solve_halfline_steady(nl: Nonlinearity, params: ModelParams,
                          x_max: float | None = None,
                          numerics: SemiwaveNumerics | None = None) -> SteadyHalfLineProfile:
    """Bounded positive steady state on the half line with value 0 at x=0.

    This is exactly the zero-speed profile, so the same solver is used.
    Below the spreading regime only the trivial state is bounded; the
    relaxation then collapses to zero and NotPositive reports it.
    """
    num = numerics or SemiwaveNumerics()
    if x_max is not None:
        num = replace(num, x_max=float(x_max))
    if compute_R0(nl, params) <= 1.0:
        _report_trivial_collapse(nl, params, num)
    prof = solve_semiwave(0.0, nl, params, num)
    return SteadyHalfLineProfile(x_nodes=prof.x_nodes, U=prof.phi, V=prof.psi,
                                 residual_inf=prof.residual_inf)


def _report_trivial_collapse(nl, params, num: SemiwaveNumerics):
    x_max = num.x_max or 40.0
    n = int(math.ceil(x_max / num.dx)) + 1
    x = np.linspace(0.0, x_max, n)
    w = 0.5 * np.sin(np.pi * x / x_max) + 1e-3
    w[0] = w[-1] = 0.0
    phi, psi = w.copy(), w.copy()
    dt = 0.5
    kap1 = params.d1 / (x[1] - x[0]) ** 2
    kap2 = params.d2 / (x[1] - x[0]) ** 2
    ab1 = _implicit_operator(n, kap1, 0.0, params.a, dt)
    ab2 = _implicit_operator(n, kap2, 0.0, params.b, dt)
    for _ in range(4000):
        rhs = phi / dt + nl.H(psi)
        rhs[0] = rhs[-1] = 0.0
        phi = solve_banded((1, 1), ab1, rhs)
        rhs = psi / dt + nl.G(phi)
        rhs[0] = rhs[-1] = 0.0
        psi = solve_banded((1, 1), ab2, rhs)
        sup = max(np.max(np.abs(phi)), np.max(np.abs(psi)))
        if sup < 1e-8:
            raise NotPositive(f"half-line steady state collapsed to zero (sup {sup:.2e})")
    raise NoConvergence(4000, "sub-threshold half-line relaxation did not settle")
