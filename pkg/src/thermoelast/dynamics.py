"""Time integration of the coupled wave-heat system

    u_tt + A u = -mu * grad(theta)
    theta_t - laplacian(theta) = -mu * theta * div(u_t)

where A is -laplacian or the elastic (Lame) operator.  The stepper is a
Strang composition: half-step of the exact linear flows (per-mode heat decay
and per-mode wave rotation, in cos/sinc form), a full step of the coupling
integrated with an explicit midpoint rule, then the linear half-steps again.
The two linear sub-flows act on disjoint fields and commute, so the scheme is
time-symmetric and second order.

States are held in physical space at the API boundary; `run` keeps the state
spectral between steps and materialises physical fields on the record cadence.
Products in the coupling are formed pointwise in physical space and dealiased
by the 2/3 rule (unless disabled).  The evolved state is confined to the
Nyquist-free subspace in either mode: the -m/2 lines carry modes without
conjugate partners, and odd derivatives there cannot keep a real field real.
Temperature positivity is enforced by error: a step that drags min(theta) to
the configured floor raises PositivityLoss rather than clamping, unless the
clamp debug flag is set.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import ScalarField, TorusGrid, VectorField
from .operators import check_lame_ellipticity

__all__ = [
    "ModelParams",
    "SimState",
    "StepperConfig",
    "PositivityLoss",
    "NonFinite",
    "evaluate_rhs",
    "step",
    "run",
]

log = logging.getLogger(__name__)

OPERATOR_KINDS = ("laplacian", "lame")


class PositivityLoss(RuntimeError):
    """Temperature reached the positivity floor during a step."""

    def __init__(self, t: float, theta_min: float):
        self.t = t
        self.theta_min = theta_min
        super().__init__(f"temperature positivity lost at t={t:.6g}: min(theta)={theta_min:.6g}")


class NonFinite(RuntimeError):
    """A state field stopped being finite during a step."""

    def __init__(self, t: float, what: str = "state"):
        self.t = t
        self.what = what
        super().__init__(f"non-finite {what} at t={t:.6g}")


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: coupling strength and elastic operator choice."""

    mu: float
    operator: str = "laplacian"
    zeta: float = 1.0
    lame_lambda: float = 0.5

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.operator not in OPERATOR_KINDS:
            raise ValueError(f"operator must be one of {OPERATOR_KINDS}, got {self.operator!r}")

    def validate_for_dimension(self, d: int) -> None:
        if self.operator == "lame":
            check_lame_ellipticity(self.zeta, self.lame_lambda, d)


@dataclass
class SimState:
    """Displacement u, velocity v = u_t, temperature theta at time t."""

    t: float
    u: VectorField
    v: VectorField
    theta: ScalarField

    def __post_init__(self) -> None:
        if not (self.u.grid == self.v.grid == self.theta.grid):
            raise ValueError("state fields must share one grid")

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid

    def copy(self) -> "SimState":
        return SimState(self.t, self.u.copy(), self.v.copy(), self.theta.copy())

    @classmethod
    def equilibrium(cls, grid: TorusGrid, theta_value: float = 1.0) -> "SimState":
        theta = ScalarField(grid, np.full(grid.shape, float(theta_value)))
        return cls(0.0, VectorField.zeros(grid), VectorField.zeros(grid), theta)


@dataclass(frozen=True)
class StepperConfig:
    """Stepping controls.  t_end must be an integer multiple of dt."""

    dt: float
    t_end: float = 0.0
    dealias: bool = True
    positivity_floor: float = 1e-10
    record_every: int = 1
    clamp_theta: bool = False
    deterministic_reduction: bool = True
    # > 0 restricts products to the mode cube |k|_inf <= product_band instead
    # of the 2/3 rule, making the run the exact Galerkin truncation of that
    # cube (used when comparing against the truncated-system oracle)
    product_band: int = 0

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if not self.positivity_floor > 0.0:
            raise ValueError(f"positivity_floor must be > 0, got {self.positivity_floor}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.product_band < 0:
            raise ValueError(f"product_band must be >= 0, got {self.product_band}")
        if self.product_band and not self.dealias:
            raise ValueError("product_band requires dealias = true")
        self.n_steps()

    def n_steps(self) -> int:
        ratio = self.t_end / self.dt
        n = int(round(ratio))
        if abs(self.t_end - n * self.dt) > 1e-12 * max(1.0, abs(self.t_end)):
            raise ValueError(
                f"t_end={self.t_end!r} is not an integer multiple of dt={self.dt!r}"
            )
        return n


class _SpectralStepper:
    """One Strang step in spectral variables.  dt may be signed (used by
    centred-difference diagnostics); forward runs always use dt > 0."""

    def __init__(
        self,
        grid: TorusGrid,
        p: ModelParams,
        dt: float,
        dealias: bool = True,
        product_band: int = 0,
    ):
        p.validate_for_dimension(grid.d)
        self.grid = grid
        self.p = p
        self.dt = float(dt)
        self.dealias = bool(dealias)
        if product_band:
            # alias-free collocation products on the cube need m >= 3*band + 1
            short = min(grid.n_per_axis)
            if short < 3 * product_band + 1:
                raise ValueError(
                    f"product_band {product_band} needs at least {3 * product_band + 1} "
                    f"points per axis for alias-free products, grid has {short}"
                )
            self.product_mask = grid.mode_cube_mask(product_band)
        else:
            # products leave the Nyquist lines occupied even when aliasing is
            # tolerated; those modes have no conjugate partner and must stay empty
            self.product_mask = grid.dealias_mask if self.dealias else grid.nyquist_free_mask
        h = 0.5 * self.dt
        k_sq = grid.k_sq
        self.heat_half = np.exp(-k_sq * h)
        self.ik = [1j * k for k in grid.wavevectors]
        if p.operator == "laplacian":
            self.wave_sets = [(1.0, *self._rotation(k_sq, 1.0, h))]
        else:
            self.wave_sets = [
                (p.zeta, *self._rotation(k_sq, p.zeta, h)),
                (2.0 * p.zeta + p.lame_lambda, *self._rotation(k_sq, 2.0 * p.zeta + p.lame_lambda, h)),
            ]

    @staticmethod
    def _rotation(k_sq: np.ndarray, speed_sq: float, h: float):
        """cos(w h) and sin(w h)/w for w = sqrt(speed_sq * |k|^2)."""
        om = np.sqrt(speed_sq * k_sq)
        c = np.cos(om * h)
        s = h * np.sinc(om * h / math.pi)
        return c, s

    def _wave_half(self, uh: np.ndarray, vh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grid = self.grid
        k = grid.wavevectors
        if self.p.operator == "laplacian":
            a, c, s = self.wave_sets[0]
            new_u = c * uh + s * vh
            new_v = -a * grid.k_sq * s * uh + c * vh
            return new_u, new_v
        # Lame: rotate the longitudinal (k-parallel) and transverse parts
        # with their own speeds; the zero mode rides the transverse branch.
        ku = sum(k[i] * uh[i] for i in range(grid.d))
        kv = sum(k[i] * vh[i] for i in range(grid.d))
        u_long = np.stack([k[i] * ku * grid.inv_k_sq for i in range(grid.d)])
        v_long = np.stack([k[i] * kv * grid.inv_k_sq for i in range(grid.d)])
        u_tr = uh - u_long
        v_tr = vh - v_long
        a_t, c_t, s_t = self.wave_sets[0]
        a_l, c_l, s_l = self.wave_sets[1]
        new_u = c_t * u_tr + s_t * v_tr + c_l * u_long + s_l * v_long
        new_v = (
            -a_t * grid.k_sq * s_t * u_tr
            + c_t * v_tr
            - a_l * grid.k_sq * s_l * u_long
            + c_l * v_long
        )
        return new_u, new_v

    def _coupling_rhs(self, vh: np.ndarray, th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grid = self.grid
        dv = np.stack([-self.p.mu * ik * th for ik in self.ik])
        div_v = grid.to_physical(sum(self.ik[i] * vh[i] for i in range(grid.d)))
        theta = grid.to_physical(th)
        dth = -self.p.mu * grid.to_spectral(theta * div_v) * self.product_mask
        return dv, dth

    def _couple(self, vh: np.ndarray, th: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dt = self.dt
        k1v, k1t = self._coupling_rhs(vh, th)
        k2v, k2t = self._coupling_rhs(vh + 0.5 * dt * k1v, th + 0.5 * dt * k1t)
        return vh + dt * k2v, th + dt * k2t

    def step(self, uh: np.ndarray, vh: np.ndarray, th: np.ndarray):
        th = self.heat_half * th
        uh, vh = self._wave_half(uh, vh)
        vh, th = self._couple(vh, th)
        uh, vh = self._wave_half(uh, vh)
        th = self.heat_half * th
        return uh, vh, th


def evaluate_rhs(s: SimState, p: ModelParams, dealias: bool = True) -> tuple[VectorField, VectorField, ScalarField]:
    """Instantaneous tendencies (du/dt, dv/dt, dtheta/dt) of the full system."""
    grid = s.grid
    p.validate_for_dimension(grid.d)
    k = grid.wavevectors
    nyq = grid.nyquist_free_mask
    uh = s.u.spectral() * nyq
    vh = s.v.spectral() * nyq
    th = s.theta.spectral() * nyq
    if p.operator == "laplacian":
        au = grid.k_sq * uh
    else:
        ku = sum(k[i] * uh[i] for i in range(grid.d))
        au = np.stack(
            [p.zeta * grid.k_sq * uh[i] + (p.zeta + p.lame_lambda) * k[i] * ku for i in range(grid.d)]
        )
    dv_h = -au + np.stack([-p.mu * 1j * k[i] * th for i in range(grid.d)])
    div_v = grid.to_physical(sum(1j * k[i] * vh[i] for i in range(grid.d)))
    coupling = grid.to_spectral(s.theta.values * div_v)
    coupling = coupling * (grid.dealias_mask if dealias else nyq)
    dth_h = -grid.k_sq * th - p.mu * coupling
    return (
        VectorField(grid, s.v.components.copy()),
        VectorField.from_spectral(grid, dv_h),
        ScalarField.from_spectral(grid, dth_h),
    )


def _check_finite(t: float, arrays: dict[str, np.ndarray]) -> None:
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr.view(np.float64) if np.iscomplexobj(arr) else arr)):
            raise NonFinite(t, name)


def _state_mask(grid: TorusGrid, product_band: int) -> np.ndarray:
    """Subspace the evolution lives in: the mode cube in Galerkin mode, else
    everything but the unpaired Nyquist lines."""
    return grid.mode_cube_mask(product_band) if product_band else grid.nyquist_free_mask


def _signed_step(
    s: SimState, p: ModelParams, dt: float, dealias: bool = True, product_band: int = 0
) -> SimState:
    """Single Strang step with signed dt; no positivity enforcement.

    Intended for centred-difference diagnostics with |dt| small.
    """
    grid = s.grid
    stepper = _SpectralStepper(grid, p, dt, dealias, product_band)
    nyq = _state_mask(grid, product_band)
    uh, vh, th = stepper.step(s.u.spectral() * nyq, s.v.spectral() * nyq, s.theta.spectral() * nyq)
    t = s.t + dt
    _check_finite(t, {"u": uh, "v": vh, "theta": th})
    return SimState(
        t,
        VectorField.from_spectral(grid, uh),
        VectorField.from_spectral(grid, vh),
        ScalarField.from_spectral(grid, th),
    )


def step(s: SimState, p: ModelParams, cfg: StepperConfig) -> SimState:
    """Advance one step of cfg.dt, enforcing the positivity floor."""
    out = _signed_step(s, p, cfg.dt, cfg.dealias, cfg.product_band)
    tmin = float(np.min(out.theta.values))
    if tmin <= cfg.positivity_floor:
        if cfg.clamp_theta:
            n_clamped = int(np.sum(out.theta.values <= cfg.positivity_floor))
            log.warning(
                "clamped %d temperature values to %.3e at t=%.6g (min was %.3e)",
                n_clamped, cfg.positivity_floor, out.t, tmin,
            )
            np.maximum(out.theta.values, cfg.positivity_floor, out=out.theta.values)
        else:
            raise PositivityLoss(out.t, tmin)
    return out


def _dt_advisory(s: SimState, p: ModelParams, dt: float) -> None:
    grid = s.grid
    vh = s.v.spectral()
    div_v = grid.to_physical(sum(1j * k * vh[i] for i, k in enumerate(grid.wavevectors)))
    scale = p.mu * float(np.max(np.abs(s.theta.values))) * float(np.max(np.abs(div_v)))
    bound = 0.5 / (scale + 1.0)
    if dt > bound:
        log.warning(
            "dt=%.3g exceeds the advisory coupling bound %.3g "
            "(0.5 / (mu * max|theta| * max|div v| + 1)); accuracy may suffer",
            dt, bound,
        )


def run(
    s0: SimState,
    p: ModelParams,
    cfg: StepperConfig,
    sink: Callable[[SimState], None] | None = None,
) -> SimState:
    """Integrate from s0 for cfg.t_end, emitting states on the record cadence.

    The sink receives the initial state, every record_every-th step, and the
    final state.  Identical inputs produce identical outputs bit for bit.
    """
    grid = s0.grid
    p.validate_for_dimension(grid.d)
    n_steps = cfg.n_steps()
    _dt_advisory(s0, p, cfg.dt)
    if float(np.min(s0.theta.values)) <= cfg.positivity_floor:
        raise PositivityLoss(s0.t, float(np.min(s0.theta.values)))

    stepper = _SpectralStepper(grid, p, cfg.dt, cfg.dealias, cfg.product_band)
    nyq = _state_mask(grid, cfg.product_band)
    uh = s0.u.spectral() * nyq
    vh = s0.v.spectral() * nyq
    th = s0.theta.spectral() * nyq
    t0 = s0.t

    if sink is not None:
        sink(s0.copy())

    def materialise(t: float) -> SimState:
        return SimState(
            t,
            VectorField.from_spectral(grid, uh),
            VectorField.from_spectral(grid, vh),
            ScalarField.from_spectral(grid, th),
        )

    state = s0.copy()
    clamp_total = 0
    for i in range(1, n_steps + 1):
        uh, vh, th = stepper.step(uh, vh, th)
        t = t0 + i * cfg.dt
        _check_finite(t, {"u": uh, "v": vh, "theta": th})
        theta_phys = grid.to_physical(th)
        tmin = float(np.min(theta_phys))
        if tmin <= cfg.positivity_floor:
            if cfg.clamp_theta:
                n_clamped = int(np.sum(theta_phys <= cfg.positivity_floor))
                clamp_total += n_clamped
                log.warning(
                    "clamped %d temperature values to %.3e at t=%.6g (min was %.3e)",
                    n_clamped, cfg.positivity_floor, t, tmin,
                )
                theta_phys = np.maximum(theta_phys, cfg.positivity_floor)
                # clamping is pointwise and repopulates the unpaired Nyquist
                # lines; project back onto the evolution subspace
                th = grid.to_spectral(theta_phys) * nyq
            else:
                raise PositivityLoss(t, tmin)
        if i == n_steps or (sink is not None and i % cfg.record_every == 0):
            state = SimState(
                t,
                VectorField.from_spectral(grid, uh),
                VectorField.from_spectral(grid, vh),
                ScalarField(grid, theta_phys),
            )
            if sink is not None and (i % cfg.record_every == 0 or i == n_steps):
                sink(state.copy())
    if clamp_total:
        log.warning("run clamped temperature %d times in total", clamp_total)
    return state
