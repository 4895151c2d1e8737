"""Propagators: exact free multiplier, Strang splitting, time-ordered flows.

The free flow exp(-i t H_o) is an exact momentum multiplier.  Interacting
flows use symmetric (Strang) splitting, optionally with a spectral transform
g so the kinetic phase is g(P(k)) instead of P(k).  Every propagation runs
behind a wrap-around guard: the fastest occupied group velocity times the
horizon must stay below 0.45 of the smallest box half-length, which turns
silent periodic aliasing into a hard precondition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardViolation
from .field import Lattice, WaveFunction
from .potential import StaticPotential, TimeEnvelope
from .symbol import DispersionSymbol, SIGNED

OCCUPANCY_THRESHOLD = 1e-10
GUARD_FRACTION = 0.45
SELF_CONVERGENCE_TARGET = 1e-8
MAX_DT_HALVINGS = 4


@dataclass(frozen=True)
class SpectralTransform:
    """Monotone reparametrization g of the dispersion for invariance runs."""

    name: str
    fn: callable
    derivative: callable


def named_transform(name: str) -> SpectralTransform:
    """Catalog of invariance functions: quartic_root on [0,inf), sinh on R."""
    if name == "quartic_root":
        return SpectralTransform(
            "quartic_root",
            fn=lambda lam: (1.0 + lam**4) ** 0.25,
            derivative=lambda lam: lam**3 * (1.0 + lam**4) ** (-0.75),
        )
    if name == "sinh":
        return SpectralTransform("sinh", fn=np.sinh, derivative=np.cosh)
    raise KeyError(name)


def symbol_field(sym: DispersionSymbol, lat: Lattice) -> np.ndarray:
    """P(k) on the centered momentum grid."""
    if not lat.matches_symbol(sym):
        raise ValueError("lattice block map does not match the symbol")
    total = 0.0
    for j, b in enumerate(sym.blocks):
        if b.dim == 1:
            (axis,) = lat.block_axes(j)
            k = lat.axis_mesh(axis, lat.momenta(axis))
            p = np.abs(k) ** b.exponent
            if b.kind == SIGNED:
                p = p * np.sign(k)
            elif b.kind != "positive":
                p = -p
        else:
            r2 = lat.block_radius2(j, momentum=True)
            p = r2 ** (b.exponent / 2.0)
            if b.kind != "positive":
                p = -p
        total = total + p
    return np.broadcast_to(total, lat.shape).copy()


def velocity_field(sym: DispersionSymbol, lat: Lattice) -> np.ndarray:
    """|grad P(k)| on the momentum grid (sign structure drops out)."""
    v2 = 0.0
    for j, b in enumerate(sym.blocks):
        a = b.exponent
        r2 = lat.block_radius2(j, momentum=True)
        v2 = v2 + a * a * r2 ** (a - 1.0)
    return np.broadcast_to(np.sqrt(v2), lat.shape).copy()


def velocity_components(sym: DispersionSymbol, lat: Lattice) -> list[np.ndarray]:
    """|dP/dk_i| per axis, for the componentwise wrap-around guard."""
    out = []
    for j, b in enumerate(sym.blocks):
        a = b.exponent
        if b.dim == 1:
            (axis,) = lat.block_axes(j)
            k = lat.momenta(axis)
            comp = lat.axis_mesh(axis, a * np.abs(k) ** (a - 1.0))
            out.append((axis, comp))
        else:
            r2 = lat.block_radius2(j, momentum=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                radial = np.where(r2 > 0.0, a * r2 ** ((a - 2.0) / 2.0), 0.0)
            for axis in lat.block_axes(j):
                k = lat.axis_mesh(axis, np.abs(lat.momenta(axis)))
                out.append((axis, radial * k))
    return [comp for _, comp in sorted(out, key=lambda item: item[0])]


@dataclass(frozen=True)
class PropagationPlan:
    symbol: DispersionSymbol
    lattice: Lattice
    dt: float = 1.0 / 64.0
    transform: SpectralTransform | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        base = symbol_field(self.symbol, self.lattice)
        comps = velocity_components(self.symbol, self.lattice)
        if self.transform is not None:
            kin = self.transform.fn(base)
            scale = np.abs(self.transform.derivative(base))
            comps = [scale * c for c in comps]
        else:
            kin = base
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_kinetic", kin)
        object.__setattr__(self, "_kinetic_raw", np.fft.ifftshift(kin))
        object.__setattr__(self, "_velocity", comps)

    @property
    def kinetic_field(self) -> np.ndarray:
        return self._kinetic

    @property
    def base_field(self) -> np.ndarray:
        """P(k) before any spectral transform."""
        return self._base

    def occupied_vmax(self, wf: WaveFunction, axis: int | None = None) -> float:
        w = np.abs(wf.momentum) ** 2
        total = float(np.sum(w))
        if total == 0.0:
            return 0.0
        mask = w >= OCCUPANCY_THRESHOLD * total
        if axis is not None:
            field = np.broadcast_to(self._velocity[axis], self.lattice.shape)
            return float(np.max(field[mask]))
        return max(
            float(np.max(np.broadcast_to(c, self.lattice.shape)[mask]))
            for c in self._velocity
        )

    def guard(self, wf: WaveFunction, total_time: float) -> float:
        """Componentwise wrap-around check: v_i * |T| <= 0.45 L_i per axis.

        Returns the largest occupied speed; raises GuardViolation with the
        speed and the box size the horizon would need.
        """
        vmax = 0.0
        for i in range(self.lattice.ndim):
            v_i = self.occupied_vmax(wf, axis=i)
            vmax = max(vmax, v_i)
            budget = GUARD_FRACTION * self.lattice.axes[i][1]
            travel = v_i * abs(total_time)
            if travel > budget:
                need = travel / GUARD_FRACTION
                raise GuardViolation(
                    f"wrap-around guard on axis {i}: v_max = {v_i:.6g} over "
                    f"|t| = {abs(total_time):.6g} travels {travel:.6g} > {budget:.6g}; "
                    f"axis half-length must be >= {need:.6g}"
                )
        return vmax


def spectral_multiply(plan: PropagationPlan, wf: WaveFunction, fn) -> WaveFunction:
    """Apply the Fourier multiplier fn(kinetic field) to the state."""
    khat = wf.momentum * fn(plan.kinetic_field)
    return WaveFunction.from_momentum(wf.lattice, khat)


def free_evolve(plan: PropagationPlan, wf: WaveFunction, t: float) -> WaveFunction:
    plan.guard(wf, t)
    khat = wf.momentum * np.exp(-1j * t * plan.kinetic_field)
    return WaveFunction.from_momentum(wf.lattice, khat)


def _potential_samples(v) -> np.ndarray:
    return v.samples if isinstance(v, StaticPotential) else np.asarray(v, dtype=float)


def _strang_run(plan: PropagationPlan, psi: np.ndarray, vfield: np.ndarray,
                n: int, h: float) -> np.ndarray:
    exp_vh = np.exp(-0.5j * h * vfield)
    exp_k = np.exp(-1j * h * plan._kinetic_raw)
    psi = psi * exp_vh
    full_v = exp_vh * exp_vh
    for step in range(n):
        psi = np.fft.ifftn(exp_k * np.fft.fftn(psi))
        psi = psi * (exp_vh if step == n - 1 else full_v)
    return psi


def _pick_step(plan: PropagationPlan, psi: np.ndarray, vfield: np.ndarray,
               t: float) -> float:
    """Halve dt until a short self-convergence probe meets the target."""
    h = plan.dt
    probe = min(1.0, abs(t))
    for _ in range(MAX_DT_HALVINGS + 1):
        n = max(1, math.ceil(probe / h))
        hp = math.copysign(probe / n, t)
        a = _strang_run(plan, psi, vfield, n, hp)
        b = _strang_run(plan, psi, vfield, 2 * n, hp / 2.0)
        err = np.sqrt(np.sum(np.abs(a - b) ** 2) * plan.lattice.dvol)
        if err <= SELF_CONVERGENCE_TARGET * probe:
            return h
        h /= 2.0
    return h


def evolve_static(plan: PropagationPlan, potential, wf: WaveFunction, t: float,
                  auto_dt: bool = True) -> WaveFunction:
    """Strang approximation of exp(-i t (H_o + V)) psi for a static real V."""
    plan.guard(wf, t)
    if t == 0.0:
        return wf
    vfield = _potential_samples(potential)
    if not np.any(vfield):
        khat = wf.momentum * np.exp(-1j * t * plan.kinetic_field)
        return WaveFunction.from_momentum(wf.lattice, khat)
    h = _pick_step(plan, wf.psi, vfield, t) if auto_dt else plan.dt
    n = max(1, math.ceil(abs(t) / h))
    psi = _strang_run(plan, wf.psi, vfield, n, t / n)
    return WaveFunction(wf.lattice, psi)


def evolve_timedep(plan: PropagationPlan, static: StaticPotential,
                   envelope: TimeEnvelope, wf: WaveFunction,
                   s: float, t: float) -> WaveFunction:
    """Time-ordered propagator U(t, s) psi with midpoint-sampled envelope."""
    plan.guard(wf, t - s)
    if t == s:
        return wf
    span = t - s
    n = max(1, math.ceil(abs(span) / plan.dt))
    h = span / n
    exp_k = np.exp(-1j * h * plan._kinetic_raw)
    psi = wf.psi
    shape = static.samples
    for step in range(n):
        t_mid = s + (step + 0.5) * h
        exp_vh = np.exp(-0.5j * h * envelope(t_mid) * shape)
        psi = exp_vh * np.fft.ifftn(exp_k * np.fft.fftn(exp_vh * psi))
    return WaveFunction(wf.lattice, psi)


def monodromy_apply(plan: PropagationPlan, static: StaticPotential,
                    envelope: TimeEnvelope, wf: WaveFunction,
                    periods: int = 1, inverse: bool = False) -> WaveFunction:
    """Apply M^periods (or M^-periods), M = U(1, 0) of a 1-periodic Hamiltonian."""
    if envelope.kind != "periodic":
        raise ValueError("monodromy needs a 1-periodic envelope")
    n = int(periods)
    if n < 0:
        n, inverse = -n, not inverse
    if inverse:
        return evolve_timedep(plan, static, envelope, wf, float(n), 0.0)
    return evolve_timedep(plan, static, envelope, wf, 0.0, float(n))
