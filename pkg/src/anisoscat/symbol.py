"""Block-anisotropic dispersion symbols and the smooth spectral cutoff.

A symbol is a sum of power laws over coordinate blocks,

    P(k) = sum_j p_j(k_j),   p_j(k_j) = |k_j|^a_j,  |k_j|^a_j sign(k_j),  or  -|k_j|^a_j,

with exponents a_j > 1.  Blocks are ordered: positive kinds first, then
sign-valued ones (which must be one-dimensional), then negative kinds.
The free Hamiltonian acts as multiplication by P(k) in momentum space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POSITIVE = "positive"
SIGNED = "signed"
NEGATIVE = "negative"

_KINDS = (POSITIVE, SIGNED, NEGATIVE)


@dataclass(frozen=True)
class BlockSpec:
    """One coordinate block: dimension, power-law exponent, sign kind."""

    dim: int
    exponent: float
    kind: str = POSITIVE

    def __post_init__(self):
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ValueError(f"block dim must be a positive integer, got {self.dim}")
        if not self.exponent > 1:
            raise ValueError(f"block exponent must exceed 1, got {self.exponent}")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.kind == SIGNED and self.dim != 1:
            raise ValueError("sign-valued blocks must be one-dimensional")

    @property
    def tau(self) -> float:
        """Dispersive scaling exponent (a-1)/a, always in (0, 1)."""
        return (self.exponent - 1.0) / self.exponent


@dataclass(frozen=True)
class DispersionSymbol:
    """Ordered block list with the positive/signed/negative boundaries."""

    blocks: tuple[BlockSpec, ...]
    j_minus: int
    j_plus: int

    @property
    def nu(self) -> int:
        return len(self.blocks)

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    @property
    def j_set_plus(self) -> tuple[int, ...]:
        """Block indices 1..j_plus (1-based), the upward-propagating blocks."""
        return tuple(range(1, self.j_plus + 1))

    @property
    def j_set_minus(self) -> tuple[int, ...]:
        """Block indices {j_minus - 1, ..., nu}, clipped to {1..nu}."""
        lo = max(1, self.j_minus - 1)
        return tuple(range(lo, self.nu + 1))

    def block_slices(self) -> list[slice]:
        """Coordinate slice of each block within the flat k vector."""
        out, off = [], 0
        for b in self.blocks:
            out.append(slice(off, off + b.dim))
            off += b.dim
        return out


def make_dispersion(blocks, j_minus: int, j_plus: int) -> DispersionSymbol:
    """Validate block kinds against (j_minus, j_plus) and build the symbol."""
    blocks = tuple(blocks)
    nu = len(blocks)
    if nu < 1:
        raise ValueError("need at least one block")
    if not (0 <= j_minus <= j_plus <= nu):
        raise ValueError(f"need 0 <= j_minus <= j_plus <= nu, got ({j_minus}, {j_plus}, {nu})")
    for j, b in enumerate(blocks, start=1):
        want = POSITIVE if j <= j_minus else (SIGNED if j <= j_plus else NEGATIVE)
        if b.kind != want:
            raise ValueError(
                f"block {j} has kind {b.kind!r}, but position implies {want!r} "
                f"for (j_minus, j_plus) = ({j_minus}, {j_plus})"
            )
    return DispersionSymbol(blocks, j_minus, j_plus)


def block_symbol(block: BlockSpec, kj: np.ndarray) -> np.ndarray:
    """p_j on one block; kj has the block's coordinates along its last axis."""
    kj = np.asarray(kj, dtype=float)
    r = np.abs(kj) if block.dim == 1 else np.sqrt(np.sum(kj * kj, axis=-1))
    pw = r**block.exponent
    if block.kind == POSITIVE:
        return pw
    if block.kind == NEGATIVE:
        return -pw
    return pw * np.sign(kj)


def block_gradient(block: BlockSpec, kj: np.ndarray) -> np.ndarray:
    """grad p_j; zero at kj = 0 by continuity (valid since a_j > 1)."""
    kj = np.asarray(kj, dtype=float)
    a = block.exponent
    if block.dim == 1:
        g = a * np.abs(kj) ** (a - 1.0)
        if block.kind == POSITIVE:
            return g * np.sign(kj)
        if block.kind == NEGATIVE:
            return -g * np.sign(kj)
        return g  # signed symbol is strictly increasing
    r = np.sqrt(np.sum(kj * kj, axis=-1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(r > 0.0, a * r ** (a - 2.0) * kj, 0.0)
    return g if block.kind == POSITIVE else -g


def eval_symbol(sym: DispersionSymbol, k) -> float:
    """P(k) for a single point k of length sym.dim."""
    k = np.asarray(k, dtype=float).reshape(-1)
    if k.size != sym.dim:
        raise ValueError(f"k has dimension {k.size}, symbol expects {sym.dim}")
    total = 0.0
    for b, sl in zip(sym.blocks, sym.block_slices()):
        kj = k[sl]
        total += float(block_symbol(b, kj if b.dim > 1 else kj[0]))
    return total


def group_velocity(sym: DispersionSymbol, k) -> np.ndarray:
    """grad P(k) for a single point k."""
    k = np.asarray(k, dtype=float).reshape(-1)
    if k.size != sym.dim:
        raise ValueError(f"k has dimension {k.size}, symbol expects {sym.dim}")
    out = np.empty_like(k)
    for b, sl in zip(sym.blocks, sym.block_slices()):
        kj = k[sl]
        out[sl] = block_gradient(b, kj if b.dim > 1 else kj[0])
    return out


def symbol_range(sym: DispersionSymbol) -> str:
    """Range of P over R^d: "[0,inf)" iff every block is positive, else "R"."""
    if all(b.kind == POSITIVE for b in sym.blocks):
        return "[0,inf)"
    return "R"


@dataclass(frozen=True)
class SmoothCutoff:
    """C^3 step: 0 below `lower`, 1 above `upper`, degree-7 smoothstep between."""

    lower: float = 0.5
    upper: float = 1.0
    bridge_order: int = field(default=3)

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("cutoff needs lower < upper")

    def __call__(self, lam):
        u = (np.asarray(lam, dtype=float) - self.lower) / (self.upper - self.lower)
        u = np.clip(u, 0.0, 1.0)
        # S3 smoothstep: first three derivatives vanish at both ends
        val = u**4 * (35.0 - 84.0 * u + 70.0 * u**2 - 20.0 * u**3)
        return val if val.ndim else float(val)

    def derivative(self, lam):
        u = (np.asarray(lam, dtype=float) - self.lower) / (self.upper - self.lower)
        inside = (u > 0.0) & (u < 1.0)
        uc = np.clip(u, 0.0, 1.0)
        dv = 140.0 * uc**3 * (1.0 - uc) ** 3 / (self.upper - self.lower)
        dv = np.where(inside, dv, 0.0)
        return dv if dv.ndim else float(dv)


def cutoff_eval(c: SmoothCutoff, lam) -> float:
    return c(lam)


@dataclass(frozen=True)
class SpectralWindow:
    """Smooth bump built from two cutoffs: 1 on the plateau, 0 outside (lo, hi)."""

    lo: float
    hi: float
    edge: float

    def __post_init__(self):
        if not (self.edge > 0 and self.lo + 2 * self.edge <= self.hi):
            raise ValueError("window needs lo + 2*edge <= hi with positive edge")

    def __call__(self, lam):
        rise = SmoothCutoff(self.lo, self.lo + self.edge)
        fall = SmoothCutoff(self.hi - self.edge, self.hi)
        lam = np.asarray(lam, dtype=float)
        val = rise(lam) * (1.0 - fall(lam))
        return val if np.ndim(val) else float(val)

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)
