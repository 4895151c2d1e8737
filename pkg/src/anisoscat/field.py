"""Periodic tensor-product lattices and complex wavefunctions.

Positions on axis i are x = -L_i + 2 L_i m / N_i (m = 0..N_i-1) and momenta
are k = pi (m - N_i/2) / L_i, both centered and ascending.  The transform
pair matches the continuum convention

    psihat(k) = (2 pi)^(-d/2) integral e^{-i k x} psi(x) dx

discretized with the grid volume element, so it is unitary between the
position and momentum volume-weighted norms and round-trips exactly up to
floating-point error.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .admissibility import DecayIndex, decay_index
from .symbol import DispersionSymbol


@dataclass(frozen=True)
class Lattice:
    """Grid axes (points, half-length) plus the coordinate->block partition."""

    axes: tuple[tuple[int, float], ...]
    block_dims: tuple[int, ...]

    def __post_init__(self):
        for i, (n, half) in enumerate(self.axes):
            if n < 16 or (n & (n - 1)) != 0:
                raise ValueError(f"axis {i}: point count must be a power of two >= 16, got {n}")
            if not half > 0:
                raise ValueError(f"axis {i}: half-length must be positive, got {half}")
        if sum(self.block_dims) != len(self.axes):
            raise ValueError(
                f"block dims {self.block_dims} do not partition {len(self.axes)} axes"
            )

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.axes)

    def positions(self, i: int) -> np.ndarray:
        n, half = self.axes[i]
        return -half + (2.0 * half / n) * np.arange(n)

    def momenta(self, i: int) -> np.ndarray:
        n, half = self.axes[i]
        return (np.pi / half) * (np.arange(n) - n // 2)

    def dx(self, i: int) -> float:
        n, half = self.axes[i]
        return 2.0 * half / n

    def dk(self, i: int) -> float:
        return np.pi / self.axes[i][1]

    @property
    def dvol(self) -> float:
        out = 1.0
        for i in range(self.ndim):
            out *= self.dx(i)
        return out

    @property
    def kvol(self) -> float:
        out = 1.0
        for i in range(self.ndim):
            out *= self.dk(i)
        return out

    @property
    def min_half_length(self) -> float:
        return min(half for _, half in self.axes)

    def axis_mesh(self, i: int, values: np.ndarray) -> np.ndarray:
        """Reshape a per-axis 1D array for broadcasting over the full grid."""
        shape = [1] * self.ndim
        shape[i] = len(values)
        return values.reshape(shape)

    def block_axes(self, j: int) -> list[int]:
        """Axis indices belonging to block j (0-based block index)."""
        off = sum(self.block_dims[:j])
        return list(range(off, off + self.block_dims[j]))

    def block_radius2(self, j: int, momentum: bool = False) -> np.ndarray:
        """|x_j|^2 (or |k_j|^2) broadcast over the grid."""
        total = 0.0
        for i in self.block_axes(j):
            v = self.momenta(i) if momentum else self.positions(i)
            total = total + self.axis_mesh(i, v * v)
        return total

    def radius2(self, momentum: bool = False) -> np.ndarray:
        total = 0.0
        for i in range(self.ndim):
            v = self.momenta(i) if momentum else self.positions(i)
            total = total + self.axis_mesh(i, v * v)
        return total

    def matches_symbol(self, sym: DispersionSymbol) -> bool:
        return tuple(b.dim for b in sym.blocks) == self.block_dims


def lattice_for(sym: DispersionSymbol, axes) -> Lattice:
    return Lattice(tuple((int(n), float(half)) for n, half in axes),
                   tuple(b.dim for b in sym.blocks))


def _forward_scale(lat: Lattice) -> float:
    return lat.dvol / (2.0 * np.pi) ** (lat.ndim / 2.0)


def _backward_scale(lat: Lattice) -> float:
    out = 1.0
    for i in range(lat.ndim):
        out *= lat.dk(i) * lat.shape[i]
    return out / (2.0 * np.pi) ** (lat.ndim / 2.0)


def to_momentum_array(lat: Lattice, psi: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(psi))) * _forward_scale(lat)


def to_position_array(lat: Lattice, khat: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(khat))) * _backward_scale(lat)


class WaveFunction:
    """Complex field on a lattice; treat instances as immutable values."""

    def __init__(self, lattice: Lattice, psi: np.ndarray, _khat: np.ndarray | None = None):
        psi = np.asarray(psi, dtype=np.complex128)
        if psi.shape != lattice.shape:
            raise ValueError(f"samples shaped {psi.shape}, lattice expects {lattice.shape}")
        self.lattice = lattice
        self.psi = psi
        self._khat = _khat

    @classmethod
    def from_momentum(cls, lattice: Lattice, khat: np.ndarray) -> "WaveFunction":
        khat = np.asarray(khat, dtype=np.complex128)
        return cls(lattice, to_position_array(lattice, khat), _khat=khat)

    @property
    def momentum(self) -> np.ndarray:
        if self._khat is None:
            self._khat = to_momentum_array(self.lattice, self.psi)
        return self._khat

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.lattice.dvol))

    def momentum_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.momentum) ** 2) * self.lattice.kvol))

    def inner(self, other: "WaveFunction") -> complex:
        return complex(np.vdot(self.psi, other.psi) * self.lattice.dvol)

    def momentum_mean(self) -> np.ndarray:
        w = np.abs(self.momentum) ** 2
        total = np.sum(w)
        out = np.empty(self.lattice.ndim)
        for i in range(self.lattice.ndim):
            ki = self.lattice.axis_mesh(i, self.lattice.momenta(i))
            out[i] = np.sum(ki * w) / total
        return out

    def scaled(self, factor: complex) -> "WaveFunction":
        kh = None if self._khat is None else self._khat * factor
        return WaveFunction(self.lattice, self.psi * factor, _khat=kh)

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        return WaveFunction(self.lattice, self.psi + other.psi)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        return WaveFunction(self.lattice, self.psi - other.psi)


def to_momentum(wf: WaveFunction) -> np.ndarray:
    return wf.momentum


def to_position(lattice: Lattice, khat: np.ndarray) -> WaveFunction:
    return WaveFunction.from_momentum(lattice, khat)


def gaussian_packet(lattice: Lattice, center, momentum, widths) -> WaveFunction:
    """Normalized modulated Gaussian exp(-(x-x0)^2/(4 sigma^2) + i k0 x).

    Position-density variance along axis i is widths[i]^2.  The packet must
    fit the box: |center_i| + 6 widths_i < L_i.
    """
    d = lattice.ndim
    center = np.broadcast_to(np.asarray(center, dtype=float), (d,))
    momentum = np.broadcast_to(np.asarray(momentum, dtype=float), (d,))
    widths = np.broadcast_to(np.asarray(widths, dtype=float), (d,))
    for i in range(d):
        if not widths[i] > 0:
            raise ValueError(f"axis {i}: width must be positive")
        if abs(center[i]) + 6.0 * widths[i] >= lattice.axes[i][1]:
            raise ValueError(
                f"axis {i}: packet support |{center[i]}| + 6*{widths[i]} exceeds "
                f"half-length {lattice.axes[i][1]}"
            )
    log_amp = 0.0
    phase = 0.0
    for i in range(d):
        x = lattice.axis_mesh(i, lattice.positions(i))
        log_amp = log_amp - (x - center[i]) ** 2 / (4.0 * widths[i] ** 2)
        phase = phase + momentum[i] * x
    psi = np.exp(log_amp + 1j * phase)
    wf = WaveFunction(lattice, psi)
    return wf.scaled(1.0 / wf.norm())


@dataclass(frozen=True)
class WeightSpec:
    eps: DecayIndex


def _as_weight(lattice: Lattice, w) -> DecayIndex:
    if isinstance(w, WeightSpec):
        w = w.eps
    if not isinstance(w, DecayIndex):
        w = decay_index(w)
    if len(w) != len(lattice.block_dims):
        raise ValueError(
            f"weight has {len(w)} exponents for {len(lattice.block_dims)} blocks"
        )
    return w


def weight_field(lattice: Lattice, w) -> np.ndarray:
    """rho^eps(x) = prod_j (1 + |x_j|^2)^(-eps_j / 2) on the grid."""
    eps = _as_weight(lattice, w)
    out = 1.0
    for j, e in enumerate(eps.eps):
        if e == 0:
            continue
        out = out * (1.0 + lattice.block_radius2(j)) ** (-float(e) / 2.0)
    return out if isinstance(out, np.ndarray) else np.ones(lattice.shape)


def weight_norm(wf: WaveFunction, w) -> float:
    field = weight_field(wf.lattice, w)
    return float(np.sqrt(np.sum(field**2 * np.abs(wf.psi) ** 2) * wf.lattice.dvol))


# binary record: little-endian u32 ndim; per axis u32 N, f64 L; u32 nblocks;
# per block u32 dim; then complex64 samples in C order.

def wavefunction_to_bytes(wf: WaveFunction) -> bytes:
    lat = wf.lattice
    head = [struct.pack("<I", lat.ndim)]
    for n, half in lat.axes:
        head.append(struct.pack("<Id", n, half))
    head.append(struct.pack("<I", len(lat.block_dims)))
    for b in lat.block_dims:
        head.append(struct.pack("<I", b))
    data = wf.psi.astype("<c8").tobytes(order="C")
    return b"".join(head) + data


def wavefunction_from_bytes(buf: bytes) -> WaveFunction:
    off = 0
    (ndim,) = struct.unpack_from("<I", buf, off)
    off += 4
    axes = []
    for _ in range(ndim):
        n, half = struct.unpack_from("<Id", buf, off)
        off += 12
        axes.append((n, half))
    (nblocks,) = struct.unpack_from("<I", buf, off)
    off += 4
    bdims = []
    for _ in range(nblocks):
        (b,) = struct.unpack_from("<I", buf, off)
        off += 4
        bdims.append(b)
    lat = Lattice(tuple(axes), tuple(bdims))
    count = int(np.prod(lat.shape))
    psi = np.frombuffer(buf, dtype="<c8", count=count, offset=off).reshape(lat.shape)
    return WaveFunction(lat, psi.astype(np.complex128))


def save_wavefunction(path, wf: WaveFunction) -> None:
    with open(path, "wb") as fh:
        fh.write(wavefunction_to_bytes(wf))


def load_wavefunction(path) -> WaveFunction:
    with open(path, "rb") as fh:
        return wavefunction_from_bytes(fh.read())


def slice_1d_csv(path, wf: WaveFunction, axis: int = 0) -> None:
    """Dump a 1D slice through the grid center along one axis as CSV."""
    lat = wf.lattice
    idx = [n // 2 for n in lat.shape]
    sel: list = list(idx)
    sel[axis] = slice(None)
    line = wf.psi[tuple(sel)]
    xs = lat.positions(axis)
    with open(path, "w") as fh:
        fh.write("x,re,im\n")
        for x, v in zip(xs, line):
            fh.write(f"{x:.12g},{v.real:.12g},{v.imag:.12g}\n")
