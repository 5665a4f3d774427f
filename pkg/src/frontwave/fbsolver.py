"""Time integration of the free-boundary system on an immobilized grid.

The moving domain (0, h(t)) maps to the fixed interval [0, 1] by
xi = x / h(t), turning the system into

    u_t = (d1/h^2) u_xixi + (xi h'/h) u_xi - a u + H(v),
    v_t = (d2/h^2) v_xixi + (xi h'/h) v_xi - b v + G(u),
    h'  = -(mu1 u_xi(1) + mu2 v_xi(1)) / h,

with u = v = 0 at xi = 1 and the configured operator at xi = 0. One step:
Stefan flux from the current state (3-point one-sided stencil, the same
stencil the semi-wave slope extraction uses, so simulated and semi-wave
speeds share discretization bias), explicit front update, explicit
advection + reaction, implicit diffusion (one tridiagonal solve per
component, evaluated on the advanced front). Neumann at xi = 0 enters by
ghost-node reflection. Time step obeys dt <= cfl * dxi * h / (|h'| + c_adv),
capped at dt_cap.

Runs are bit-reproducible: no stochastic elements anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    DegenerateFront,
    NegativeSpeed,
    NonFinite,
    StabilityViolation,
)
from .model import BoundaryKind, InitialData, ModelParams, Nonlinearity, validate_initial_data
from ._format import write_csv

__all__ = [
    "SolverNumerics",
    "StopRule",
    "FreeBoundaryState",
    "ImmobilizedCoefficients",
    "Snapshot",
    "RunTrace",
    "immobilize",
    "stefan_flux",
    "step",
    "simulate",
]

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class SolverNumerics:
    n: int = 400                    # grid cells on [0, 1]
    dt_cap: float = 1e-3
    cfl: float = 0.4
    c_adv: float = 0.0              # extra advective scale in the CFL denominator
    fixed_dt: float | None = None   # exact step for convergence studies
    trace_cadence: float = 0.1
    snapshot_times: tuple = ()


@dataclass(frozen=True)
class StopRule:
    t_end: float
    x_budget: float = math.inf
    vanish_sup: float = 1e-6
    vanish_sustain: float = 1.0


@dataclass(frozen=True)
class FreeBoundaryState:
    """Fields on the immobilized grid xi_i = i/N; physical x = xi * h."""

    t: float
    h: float
    h_prime: float
    u: np.ndarray
    v: np.ndarray

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.u.size)


@dataclass(frozen=True)
class ImmobilizedCoefficients:
    """Coefficient fields of the fixed-domain form of the equations."""

    diff_u: float        # d1 / h^2
    diff_v: float        # d2 / h^2
    adv: np.ndarray      # xi * h' / h


@dataclass(frozen=True)
class Snapshot:
    t: float
    h: float
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray


@dataclass
class RunTrace:
    t: np.ndarray
    h: np.ndarray
    hprime: np.ndarray
    sup_u: np.ndarray
    sup_v: np.ndarray
    mass: np.ndarray
    snapshots: list = field(default_factory=list)
    stop_reason: str = ""
    h0: float = 0.0

    def to_csv(self, path) -> None:
        write_csv(path, ("t", "h", "hprime", "sup_u", "sup_v", "mass"),
                  zip(self.t, self.h, self.hprime, self.sup_u, self.sup_v, self.mass))

    def snapshots_to_csv(self, path) -> None:
        def rows():
            for s in self.snapshots:
                for x, u, v in zip(s.x, s.u, s.v):
                    yield (s.t, x, u, v)
        write_csv(path, ("t", "x", "u", "v"), rows())


def immobilize(state: FreeBoundaryState, params: ModelParams,
               dx_physical: float | None = None) -> ImmobilizedCoefficients:
    """Coefficients of the immobilized equations at the given state.

    With h = 1 and h' = 0 these reduce to the physical ones. The guard fires
    when the domain is thinner than ten initial grid spacings.
    """
    if state.h <= 0:
        raise DegenerateFront("front at or behind the origin")
    if dx_physical is not None and state.h <= 10.0 * dx_physical:
        raise DegenerateFront(f"h={state.h:.3e} under 10 grid spacings")
    h2 = state.h * state.h
    return ImmobilizedCoefficients(
        diff_u=params.d1 / h2,
        diff_v=params.d2 / h2,
        adv=state.xi * (state.h_prime / state.h),
    )


def _flux(u: np.ndarray, v: np.ndarray, h: float, dxi: float, params: ModelParams) -> float:
    # second-order one-sided xi-derivative at the front, divided by h
    du = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * dxi)
    dv = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dxi)
    hp = -(params.mu1 * du + params.mu2 * dv) / h
    if hp < -1e-12:
        raise NegativeSpeed(f"h'={hp:.3e} at the front")
    return max(hp, 0.0)  # roundoff guard keeps h nondecreasing


def stefan_flux(state: FreeBoundaryState, params: ModelParams) -> float:
    """Front speed h' = -mu1 u_x - mu2 v_x evaluated at x = h."""
    dxi = 1.0 / (state.u.size - 1)
    return _flux(state.u, state.v, state.h, dxi, params)


class _Stepper:
    """Preallocated one-step kernel; simulate() drives it."""

    def __init__(self, params: ModelParams, nl: Nonlinearity, n: int):
        self.params = params
        self.nl = nl
        self.n = n
        self.xi = np.linspace(0.0, 1.0, n + 1)
        self.dxi = 1.0 / n
        self.ab = np.zeros((3, n + 1))
        self.dirichlet = params.boundary is BoundaryKind.DIRICHLET

    def _implicit_solve(self, rhs: np.ndarray, r: float) -> np.ndarray:
        ab = self.ab
        ab[1, :] = 1.0 + 2.0 * r
        ab[0, 1:] = -r
        ab[2, :-1] = -r
        # front row: value pinned to zero
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        rhs[-1] = 0.0
        if self.dirichlet:
            ab[1, 0] = 1.0
            ab[0, 1] = 0.0
            rhs[0] = 0.0
        else:
            # ghost reflection u[-1] == u[1]: row is (1+2r) u0 - 2r u1
            ab[1, 0] = 1.0 + 2.0 * r
            ab[0, 1] = -2.0 * r
        return solve_banded((1, 1), ab, rhs, overwrite_ab=False, overwrite_b=True)

    def advance(self, u: np.ndarray, v: np.ndarray, h: float, dt: float):
        p = self.params
        hp = _flux(u, v, h, self.dxi, p)
        h_new = h + dt * hp

        adv = self.xi * (hp / h)
        grad_u = np.empty_like(u)
        grad_v = np.empty_like(v)
        grad_u[1:-1] = (u[2:] - u[:-2]) / (2.0 * self.dxi)
        grad_v[1:-1] = (v[2:] - v[:-2]) / (2.0 * self.dxi)
        grad_u[0] = grad_u[-1] = 0.0  # boundary rows are overwritten below
        grad_v[0] = grad_v[-1] = 0.0

        rhs_u = u + dt * (adv * grad_u - p.a * u + self.nl.H(v))
        rhs_v = v + dt * (adv * grad_v - p.b * v + self.nl.G(u))

        scale = dt / (h_new * h_new * self.dxi * self.dxi)
        u_new = self._implicit_solve(rhs_u, p.d1 * scale)
        v_new = self._implicit_solve(rhs_v, p.d2 * scale)

        low = min(u_new.min(), v_new.min())
        if low < -1e-10:
            raise StabilityViolation(f"min density {low:.3e} after step")
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new)) and math.isfinite(h_new)):
            raise NonFinite("state lost finiteness")
        np.maximum(u_new, 0.0, out=u_new)
        np.maximum(v_new, 0.0, out=v_new)
        return u_new, v_new, h_new, hp


def step(state: FreeBoundaryState, params: ModelParams, nl: Nonlinearity,
         dt: float) -> FreeBoundaryState:
    """One IMEX step from the given state (fresh stepper; simulate is faster)."""
    stepper = _Stepper(params, nl, state.u.size - 1)
    u, v, h, hp = stepper.advance(state.u.copy(), state.v.copy(), state.h, dt)
    return FreeBoundaryState(t=state.t + dt, h=h, h_prime=hp, u=u, v=v)


def _resample(init: InitialData, x_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if init.x.size == x_grid.size and np.allclose(init.x, x_grid, rtol=0.0, atol=1e-12):
        return init.u0.copy(), init.v0.copy()
    return np.interp(x_grid, init.x, init.u0), np.interp(x_grid, init.x, init.v0)


def simulate(params: ModelParams, nl: Nonlinearity, init: InitialData,
             numerics: SolverNumerics | None = None,
             stop: StopRule | None = None,
             validate: bool = True) -> RunTrace:
    """Run the stepper until the stop rule fires; deterministic per config.

    Stops at t_end, when the front exceeds the budget, or once the total
    sup-norm stays under the vanishing threshold for the sustain window.
    ``validate=False`` admits degenerate data (identically zero tests).
    """
    num = numerics or SolverNumerics()
    stop = stop or StopRule(t_end=10.0)
    if validate:
        report = validate_initial_data(init, params)
        if not report.passed:
            raise ValueError(f"inadmissible initial data: {report.violations}")

    stepper = _Stepper(params, nl, num.n)
    h = float(init.h0)
    u, v = _resample(init, stepper.xi * h)
    u[-1] = v[-1] = 0.0
    if stepper.dirichlet:
        u[0] = v[0] = 0.0

    t = 0.0
    hp = _flux(u, v, h, stepper.dxi, params)
    rows = [(t, h, hp, u.max(), v.max(), h * _trapz(u + v, dx=stepper.dxi))]
    snapshots: list[Snapshot] = []
    snap_times = sorted(num.snapshot_times)
    snap_idx = 0
    next_record = num.trace_cadence
    vanish_t0 = None
    stop_reason = ""

    while True:
        if num.fixed_dt is not None:
            dt = num.fixed_dt
        else:
            denom = abs(hp) + num.c_adv
            dt = num.dt_cap if denom == 0.0 else min(num.dt_cap, num.cfl * stepper.dxi * h / denom)
        dt = min(dt, stop.t_end - t)
        u, v, h, hp = stepper.advance(u, v, h, dt)
        t += dt

        recorded = False
        if t >= next_record - 1e-12:
            rows.append((t, h, hp, u.max(), v.max(), h * _trapz(u + v, dx=stepper.dxi)))
            recorded = True
            while next_record <= t + 1e-12:
                next_record += num.trace_cadence
        while snap_idx < len(snap_times) and t >= snap_times[snap_idx] - 1e-12:
            snapshots.append(Snapshot(t=t, h=h, x=stepper.xi * h, u=u.copy(), v=v.copy()))
            snap_idx += 1

        sup_total = float(np.max(u + v))
        if sup_total < stop.vanish_sup:
            if vanish_t0 is None:
                vanish_t0 = t
            # one extra cadence so the *sampled* stretch also spans the window
            elif t - vanish_t0 >= stop.vanish_sustain + num.trace_cadence:
                stop_reason = "vanishing"
        else:
            vanish_t0 = None

        if not stop_reason and t >= stop.t_end - 1e-12:
            stop_reason = "t_end"
        if not stop_reason and h >= stop.x_budget:
            stop_reason = "front_budget"
        if stop_reason:
            if not recorded:
                rows.append((t, h, hp, u.max(), v.max(), h * _trapz(u + v, dx=stepper.dxi)))
            break

    cols = list(zip(*rows))
    return RunTrace(
        t=np.asarray(cols[0]), h=np.asarray(cols[1]), hprime=np.asarray(cols[2]),
        sup_u=np.asarray(cols[3]), sup_v=np.asarray(cols[4]), mass=np.asarray(cols[5]),
        snapshots=snapshots, stop_reason=stop_reason, h0=float(init.h0),
    )
