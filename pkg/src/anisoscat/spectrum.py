"""Discrete spectrum of H = P(-i grad) + V and eigenvalue-accumulation runs.

The operator is applied matrix-free (Fourier multiplier plus pointwise
potential); eigenpairs come from a shifted Lanczos solver with deterministic
seeding and are residual-certified.  A dense-matrix diagonalization of the
same discretization serves as the independent oracle on 1D grids.  The
accumulation dichotomy is probed operationally: eigenvalue counts in a
near-zero shell along a ladder of boxes with doubling half-length, with the
verdict "growing" when counts strictly increase and "stable" when they are
constant over the last two rungs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import ConvergenceError
from .field import Lattice
from .propagate import symbol_field
from .symbol import BlockSpec, DispersionSymbol, make_dispersion, symbol_range

RESIDUAL_SCALE = 1e-8


@dataclass
class SpectrumReport:
    window: tuple[float, float]
    eigenvalues: np.ndarray
    residuals: np.ndarray
    shell_counts: dict[int, int]
    lattice_points: tuple[int, ...]
    lattice_half_lengths: tuple[float, ...]
    operator_scale: float
    converged: bool

    def count_in(self, lo: float, hi: float) -> int:
        return int(np.count_nonzero((self.eigenvalues > lo) & (self.eigenvalues < hi)))


def _shell_counts(eigs: np.ndarray, m_max: int = 12) -> dict[int, int]:
    """Counts per dyadic shell (-2^-m-1, -2^-m]... indexed by m >= 0."""
    out = {}
    for m in range(m_max):
        lo, hi = -(2.0 ** (-m)), -(2.0 ** (-m - 1))
        out[m] = int(np.count_nonzero((eigs > lo) & (eigs <= hi)))
    return out


def apply_hamiltonian(sym: DispersionSymbol, lat: Lattice, vsamples: np.ndarray):
    """Matrix-free H = P(-i grad) + V as a flat-vector callable."""
    kin_raw = np.fft.ifftshift(symbol_field(sym, lat))
    shape = lat.shape

    def mv(x: np.ndarray) -> np.ndarray:
        psi = x.reshape(shape)
        out = np.fft.ifftn(kin_raw * np.fft.fftn(psi))
        if vsamples is not None:
            out = out + vsamples * psi
        return out.reshape(-1)

    return mv


def discrete_spectrum(sym: DispersionSymbol, lat: Lattice, vsamples: np.ndarray,
                      window: tuple[float, float], k_max: int = 32,
                      seed: int = 0) -> SpectrumReport:
    """Residual-certified eigenpairs of H inside a window below the essential
    spectrum threshold implied by the symbol range."""
    lo, hi = window
    if symbol_range(sym) == "[0,inf)":
        if hi > 0.0:
            raise ValueError("window must sit at or below the essential-spectrum threshold 0")
    else:
        raise ValueError("discrete-spectrum search needs an all-positive symbol (range [0,inf))")
    n = int(np.prod(lat.shape))
    mv = apply_hamiltonian(sym, lat, vsamples)
    op = LinearOperator((n, n), matvec=mv, dtype=np.complex128)
    rng = np.random.Generator(np.random.Philox(seed))
    v0 = rng.standard_normal(n)
    v0 /= np.linalg.norm(v0)
    k = min(k_max, n - 2)
    converged = True
    try:
        vals, vecs = eigsh(op, k=k, which="SA", v0=v0.astype(np.complex128), tol=1e-10)
    except ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        converged = False
    if vals.size == 0:
        raise ConvergenceError("eigensolver returned no converged pairs")

    scale = float(np.max(np.abs(symbol_field(sym, lat)))) + (
        float(np.max(np.abs(vsamples))) if vsamples is not None else 0.0
    )
    keep = (vals > lo) & (vals < hi)
    vals, vecs = vals[keep], vecs[:, keep]
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    residuals = np.empty(len(vals))
    for i in range(len(vals)):
        v = vecs[:, i]
        residuals[i] = np.linalg.norm(mv(v) - vals[i] * v) / np.linalg.norm(v)
    return SpectrumReport(
        window=(lo, hi),
        eigenvalues=np.real(vals),
        residuals=residuals,
        shell_counts=_shell_counts(np.real(vals)),
        lattice_points=lat.shape,
        lattice_half_lengths=tuple(h for _, h in lat.axes),
        operator_scale=scale,
        converged=converged,
    )


def dense_oracle(sym: DispersionSymbol, lat: Lattice, vsamples: np.ndarray) -> np.ndarray:
    """All eigenvalues of the same discretization by dense diagonalization (1D)."""
    if lat.ndim != 1:
        raise ValueError("the dense oracle is for 1D lattices")
    n = lat.shape[0]
    kin_raw = np.fft.ifftshift(symbol_field(sym, lat)).astype(complex)
    kinetic = np.fft.ifft(kin_raw[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
    h = kinetic
    if vsamples is not None:
        h = h + np.diag(vsamples.astype(complex))
    h = 0.5 * (h + h.conj().T)
    return np.linalg.eigvalsh(h)


def schroedinger_line(n: int, half_length: float) -> tuple[DispersionSymbol, Lattice]:
    sym = make_dispersion([BlockSpec(1, 2.0, "positive")], 1, 1)
    lat = Lattice(((n, half_length),), (1,))
    return sym, lat


def accumulation_study(eps: float, coupling: float, ladder=None, delta: float = 0.25,
                       k_max: int = 96, seed: int = 0):
    """Near-zero eigenvalue counts for V = -c (1+x^2)^(-eps/2) along a box ladder.

    Returns (rows, verdict): rows of (N, L, count), verdict in
    {"growing", "stable", "mixed"}.
    """
    if ladder is None:
        ladder = [(256, 20.0), (512, 40.0), (1024, 80.0), (2048, 160.0)]
    rows = []
    for n, half in ladder:
        sym, lat = schroedinger_line(n, half)
        x = lat.positions(0)
        v = -coupling * (1.0 + x * x) ** (-eps / 2.0)
        if n <= 512:
            eigs = dense_oracle(sym, lat, v)
            count = int(np.count_nonzero((eigs > -delta) & (eigs < 0.0)))
        else:
            rep = discrete_spectrum(sym, lat, v, window=(-delta, 0.0),
                                    k_max=k_max, seed=seed)
            count = rep.count_in(-delta, 0.0)
        rows.append((n, half, count))
    counts = [c for _, _, c in rows]
    if all(b > a for a, b in zip(counts, counts[1:])):
        verdict = "growing"
    elif counts[-1] == counts[-2]:
        verdict = "stable"
    else:
        verdict = "mixed"
    return rows, verdict
