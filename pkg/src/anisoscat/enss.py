"""Incoming/outgoing decomposition in the spectral representation of a block.

For a 1D block the map k -> lambda = p_j(k) is an exact change of variables
(one sheet for sign-valued symbols, two sheets mu = +/-1 otherwise).  The
outgoing/incoming operators are realized as

    T^+- = (I +- i K) / 2,

where K is the antisymmetric principal-value (Szego) kernel in the lambda
variable, K_mn = sqrt(w_m w_n) / (pi (lambda_m - lambda_n)) within a sheet.
This makes T^+ + T^- = I exact by construction and keeps 0 <= <psi, T psi>
up to the discrete Hilbert norm.  Radial blocks (d_j = 2) use a polar
resampling of the momentum grid and carry an "approximate" flag.

The module also measures the propagation decay estimates behind the method:
weighted norms of e^{-/+ i t h_j} T^+- on wavepacket ensembles, fitted
against the predicted rates, and the high-energy spectral partition
phi(P(k)) = sum_j zeta(p_j(k_j)/s) phi_j(k, s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .admissibility import DecayIndex, rho_components, to_fraction
from .errors import ConvergenceError
from .field import Lattice, WaveFunction, gaussian_packet
from .symbol import DispersionSymbol, NEGATIVE, POSITIVE, SIGNED, SmoothCutoff

MIN_OCCUPIED_SAMPLES = 64
_MASS_FLOOR = 1e-12


def _apply_along_axis(arr: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(arr, axis, -1)
    out = moved @ mat.T
    return np.moveaxis(out, -1, axis)


def _block_1d_lambda(block, k: np.ndarray) -> np.ndarray:
    p = np.abs(k) ** block.exponent
    if block.kind == SIGNED:
        return p * np.sign(k)
    if block.kind == NEGATIVE:
        return -p
    return p


@dataclass
class EnssBlockMap:
    """Spectral map and half-line cut operators for one symbol block."""

    sym: DispersionSymbol
    lattice: Lattice
    block_index: int  # 1-based
    approximate: bool
    tolerance: float

    # populated by the builders
    _axis: int | None = None
    _sheets: list | None = None
    _szego: np.ndarray | None = None
    _lam_axis_field: np.ndarray | None = None
    _polar: dict | None = None

    @property
    def block(self):
        return self.sym.blocks[self.block_index - 1]

    # ---- exact 1D machinery -------------------------------------------------

    def _occupancy_check(self, khat: np.ndarray) -> None:
        axes = tuple(i for i in range(khat.ndim) if i != self._axis) if self._axis is not None else ()
        marg = np.abs(khat) ** 2
        if axes:
            marg = marg.sum(axis=axes)
        else:
            marg = marg.reshape(-1)
        total = marg.sum()
        if total == 0.0:
            return
        count = int(np.count_nonzero(marg >= _MASS_FLOOR * total))
        if count < MIN_OCCUPIED_SAMPLES:
            raise ConvergenceError(
                f"spectral grid under-resolved: {count} lambda samples carry mass "
                f"(need >= {MIN_OCCUPIED_SAMPLES})"
            )

    def forward(self, wf: WaveFunction):
        """Momentum samples -> per-sheet spectral data (lambda, G)."""
        khat = wf.momentum
        if self.approximate:
            return self._forward_polar(khat)
        self._occupancy_check(khat)
        dk = self.lattice.dk(self._axis)
        out = []
        for idx, lam, w in self._sheets:
            g = np.take(khat, idx, axis=self._axis) * np.sqrt(dk / w)
            out.append((lam.copy(), g))
        return out

    def inverse(self, spectral) -> WaveFunction:
        if self.approximate:
            return self._inverse_polar(spectral)
        dk = self.lattice.dk(self._axis)
        khat = np.zeros(self.lattice.shape, dtype=np.complex128)
        mv = np.moveaxis(khat, self._axis, 0)
        for (idx, lam, w), (_, g) in zip(self._sheets, spectral):
            gv = np.moveaxis(g, self._axis, 0)
            mv[idx] = gv * np.sqrt(w / dk).reshape((-1,) + (1,) * (gv.ndim - 1))
        return WaveFunction.from_momentum(self.lattice, khat)

    def apply_T(self, wf: WaveFunction, sign: str) -> WaveFunction:
        """T^+ or T^- applied to the state ("+" outgoing, "-" incoming)."""
        if sign not in ("+", "-"):
            raise ValueError("sign must be '+' or '-'")
        if wf.lattice is not self.lattice and wf.lattice != self.lattice:
            raise ValueError("wavefunction lattice does not match the map")
        khat = wf.momentum
        if self.approximate:
            return self._apply_polar(khat, sign)
        self._occupancy_check(khat)
        mixed = _apply_along_axis(khat, self._szego, self._axis)
        # chi(sigma > 0) conjugated back to lambda is (I - i Hilbert)/2
        s = -1.0 if sign == "+" else 1.0
        return WaveFunction.from_momentum(self.lattice, 0.5 * (khat + s * 1j * mixed))

    def block_kinetic_field(self) -> np.ndarray:
        """p_j(k_j) broadcast over the momentum grid (h_j as a multiplier)."""
        return self._lam_axis_field

    def evolve_block(self, wf: WaveFunction, t: float) -> WaveFunction:
        khat = wf.momentum * np.exp(-1j * t * self._lam_axis_field)
        return WaveFunction.from_momentum(self.lattice, khat)

    def block_weight(self, eps_j: float) -> np.ndarray:
        j = self.block_index - 1
        return (1.0 + self.lattice.block_radius2(j)) ** (-float(eps_j) / 2.0)

    # ---- approximate radial machinery (d_j = 2) -----------------------------

    def _forward_polar(self, khat: np.ndarray):
        pol = self._polar
        interp = RegularGridInterpolator(
            pol["grids"], khat, method="linear", bounds_error=False, fill_value=0.0
        )
        vals = interp(pol["sample_points"]).reshape(pol["nr"], pol["ntheta"])
        g = vals * pol["jac"][:, None]
        return [(pol["lam"].copy(), g)]

    def _inverse_polar(self, spectral) -> WaveFunction:
        pol = self._polar
        (_, g) = spectral[0]
        vals = g / pol["jac"][:, None]
        # wrap angle for periodic interpolation
        theta_ext = np.concatenate([pol["theta"], [pol["theta"][0] + 2 * np.pi]])
        vals_ext = np.concatenate([vals, vals[:, :1]], axis=1)
        re = RegularGridInterpolator((pol["r"], theta_ext), vals_ext.real,
                                     method="linear", bounds_error=False, fill_value=0.0)
        im = RegularGridInterpolator((pol["r"], theta_ext), vals_ext.imag,
                                     method="linear", bounds_error=False, fill_value=0.0)
        pts = pol["grid_rt"]
        khat = (re(pts) + 1j * im(pts)).reshape(self.lattice.shape)
        return WaveFunction.from_momentum(self.lattice, khat)

    def _apply_polar(self, khat: np.ndarray, sign: str) -> WaveFunction:
        spectral = self._forward_polar(khat)
        lam, g = spectral[0]
        mixed = self._szego @ g
        s = -1.0 if sign == "+" else 1.0
        out = 0.5 * (g + s * 1j * mixed)
        return self._inverse_polar([(lam, out)])


def _szego_kernel(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Cell-integrated (Galerkin) Hilbert kernel on the cells [lo_m, hi_m].

    K_mn = (1/pi) (w_m w_n)^(-1/2) int_{cell_m} int_{cell_n} dl dl'/(l - l'),
    in closed form via the corner antiderivative G(u) = u (ln|u| - 1);
    exactly antisymmetric, zero on the diagonal.
    """
    w = hi - lo

    def corner(u: np.ndarray) -> np.ndarray:
        absu = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = u * (np.log(np.where(absu > 0.0, absu, 1.0)) - 1.0)
        return np.where(absu > 0.0, val, 0.0)

    integral = (
        corner(hi[:, None] - lo[None, :])
        + corner(lo[:, None] - hi[None, :])
        - corner(hi[:, None] - hi[None, :])
        - corner(lo[:, None] - lo[None, :])
    )
    kern = integral / (np.pi * np.sqrt(np.outer(w, w)))
    np.fill_diagonal(kern, 0.0)
    return 0.5 * (kern - kern.T)


def build_block_map(sym: DispersionSymbol, lat: Lattice, j: int) -> EnssBlockMap:
    """Spectral map for block j; exact for d_j = 1, radial (approximate) for d_j = 2."""
    if not 1 <= j <= sym.nu:
        raise IndexError(f"block index {j} out of range 1..{sym.nu}")
    if not lat.matches_symbol(sym):
        raise ValueError("lattice block map does not match the symbol")
    block = sym.blocks[j - 1]

    if block.dim == 1:
        (axis,) = lat.block_axes(j - 1)
        k = lat.momenta(axis)
        dk = lat.dk(axis)
        lam_all = _block_1d_lambda(block, k)
        upper = _block_1d_lambda(block, k + 0.5 * dk)
        lower = _block_1d_lambda(block, k - 0.5 * dk)
        if block.kind == SIGNED:
            sheet_indices = [np.arange(len(k))]
        else:
            sheet_indices = [np.nonzero(k < 0)[0], np.nonzero(k >= 0)[0]]
        sheets = []
        kern = np.zeros((len(k), len(k)))
        for idx in sheet_indices:
            lam = lam_all[idx]
            lo = np.minimum(lower[idx], upper[idx])
            hi = np.maximum(lower[idx], upper[idx])
            at_zero = k[idx] == 0.0
            if np.any(at_zero):
                # the k=0 cell folds onto itself; its image is [0, p(dk/2)]
                edge = np.abs(_block_1d_lambda(block, np.array([0.5 * dk]))[0])
                lo[at_zero], hi[at_zero] = 0.0, edge
            w = hi - lo
            kern[np.ix_(idx, idx)] = _szego_kernel(lo, hi)
            sheets.append((idx, lam, w))
        m = EnssBlockMap(sym, lat, j, approximate=False, tolerance=1e-8)
        m._axis = axis
        m._sheets = sheets
        m._szego = kern
        lam_mesh = lat.axis_mesh(axis, lam_all)
        m._lam_axis_field = np.broadcast_to(lam_mesh, lat.shape).copy()
        return m

    if block.dim != 2:
        raise NotImplementedError("radial spectral maps are implemented for d_j = 2")

    ax = lat.block_axes(j - 1)
    if len(ax) != 2 or lat.ndim != 2:
        raise NotImplementedError("radial maps expect the block to span a 2D lattice")
    k1, k2 = lat.momenta(ax[0]), lat.momenta(ax[1])
    r_max = math.hypot(max(abs(k1[0]), k1[-1]), max(abs(k2[0]), k2[-1]))
    nr = max(2 * len(k1), 256)
    ntheta = 64
    dr = r_max / nr
    r = dr * (np.arange(nr) + 0.5)
    theta = (2 * np.pi / ntheta) * np.arange(ntheta)
    a = block.exponent
    lam = r**a if block.kind == POSITIVE else -(r**a)
    cell_lo = np.abs(r - 0.5 * dr) ** a
    cell_hi = np.abs(r + 0.5 * dr) ** a
    if block.kind != POSITIVE:
        cell_lo, cell_hi = -cell_hi, -cell_lo
    jac = a ** (-0.5) * r ** ((2 - a) / 2.0)

    rr, tt = np.meshgrid(r, theta, indexing="ij")
    sample_points = np.column_stack([
        (rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()
    ])
    g1, g2 = np.meshgrid(k1, k2, indexing="ij")
    grid_r = np.hypot(g1, g2).ravel()
    grid_t = np.mod(np.arctan2(g2, g1), 2 * np.pi).ravel()
    m = EnssBlockMap(sym, lat, j, approximate=True, tolerance=1e-3)
    m._szego = _szego_kernel(cell_lo, cell_hi)
    m._polar = {
        "grids": (k1, k2),
        "r": r,
        "theta": theta,
        "lam": lam,
        "jac": jac,
        "nr": nr,
        "ntheta": ntheta,
        "sample_points": sample_points,
        "grid_rt": np.column_stack([grid_r, grid_t]),
    }
    r2 = lat.block_radius2(j - 1, momentum=True)
    p = r2 ** (a / 2.0)
    m._lam_axis_field = np.broadcast_to(p if block.kind == POSITIVE else -p, lat.shape).copy()
    return m


def apply_T(m: EnssBlockMap, wf: WaveFunction, sign: str) -> WaveFunction:
    return m.apply_T(wf, sign)


def choose_Q(sym: DispersionSymbol, eps: DecayIndex, j: int):
    """Selection rule for Q_j: the block's own cut if eps_j > 1/2, else a
    surrogate block m in J_+ with rho_m > 1/2, else None."""
    prof = rho_components(sym, eps)
    half = Fraction(1, 2)
    if eps.eps[j - 1] > half:
        return ("T", j)
    for m in sym.j_set_plus:
        if m != j and prof.rho_j[m - 1] > half:
            return ("T", m)
    return None


@dataclass
class DecayFit:
    times: np.ndarray
    values: np.ndarray
    slope: float
    target: float
    residual: float
    a: float
    d_j: int
    eps_j: float
    s: float | None = None

    def csv_row(self) -> str:
        s = "" if self.s is None else f"{self.s:.12g}"
        return (
            f"{self.a:.12g},{self.d_j},{self.eps_j:.12g},{s},"
            f"{self.slope:.12g},{self.target:.12g},{self.residual:.12g}"
        )


def scale_ensemble(m: EnssBlockMap, t_max: float, count: int = 8,
                   momentum_ratio: float = 4.0) -> list[WaveFunction]:
    """Dyadic-scale wavepackets on the map's block: momenta k_i geometric from
    the guard-limited maximum down to the resolution floor, widths ~ 1/k_i.

    The max over this ensemble of a weighted evolved norm tracks the operator
    decay rate rather than any single packet's faster rate.
    """
    lat = m.lattice
    axis = m._axis
    if axis is None:
        raise NotImplementedError("scale ensembles need an exact 1D block map")
    a = m.block.exponent
    L = lat.axes[axis][1]
    dk = lat.dk(axis)
    sigma_k_floor = 5.5 * dk  # keeps >= 64 lambda samples carrying mass
    budget = 0.45 * lat.min_half_length / t_max
    k_guard = (budget / a) ** (1.0 / (a - 1.0))
    k_hi = k_guard / (1.0 + 6.0 / momentum_ratio)
    k_lo = max(t_max ** (-1.0 / a) / 1.4, 2.0 * sigma_k_floor)
    k_lo = min(k_lo, k_hi / 2.0)
    scales = np.geomspace(k_hi, k_lo, count)
    packets = []
    for kbar in scales:
        sigma_k = max(kbar / momentum_ratio, sigma_k_floor)
        sigma = min(1.0 / (2.0 * sigma_k), L / 7.0)
        center = [0.0] * lat.ndim
        mom = [0.0] * lat.ndim
        widths = [L_i / 7.0 for _, L_i in lat.axes]
        mom[axis] = kbar
        widths[axis] = sigma
        packets.append(gaussian_packet(lat, center, mom, widths))
    return packets


def _fit_loglog(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    lt, lv = np.log(times), np.log(values)
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def decay_fit(m: EnssBlockMap, eps_j, sign: str, t_grid, ensemble=None,
              cutoff: tuple[SmoothCutoff, float] | None = None) -> DecayFit:
    """Fit the decay of max-over-ensemble || rho_j^eps e^{-/+ i t h_j} [zeta] T^+- psi ||.

    Without a cutoff the predicted slope is -rho_j = -(1/a) min(eps_j, d_j/2);
    with the high-energy cutoff zeta(h_j/s) it is -eps_j.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.count_nonzero(t_grid > 0) < 6:
        raise ValueError("need at least 6 positive times for the fit")
    eps_frac, _ = to_fraction(eps_j)
    eps_f = float(eps_frac)
    block = m.block
    a = block.exponent
    if ensemble is None:
        ensemble = scale_ensemble(m, float(np.max(t_grid)))

    sgn_t = +1.0 if sign == "+" else -1.0
    weight = m.block_weight(eps_f)
    if cutoff is not None:
        zeta, s = cutoff
        cut_field = zeta(m.block_kinetic_field() / s)
    values = np.zeros(len(t_grid))
    for psi in ensemble:
        proj = m.apply_T(psi, sign)
        khat0 = proj.momentum
        if cutoff is not None:
            khat0 = khat0 * cut_field
            if np.sqrt(np.sum(np.abs(khat0) ** 2)) < 1e-3 * np.sqrt(np.sum(np.abs(psi.momentum) ** 2)):
                raise ConvergenceError("insufficient spectral mass after the high-energy cutoff")
        for i, t in enumerate(t_grid):
            khat = khat0 * np.exp(-1j * sgn_t * t * m._lam_axis_field)
            st = WaveFunction.from_momentum(m.lattice, khat)
            v = float(np.sqrt(np.sum(weight**2 * np.abs(st.psi) ** 2) * m.lattice.dvol))
            values[i] = max(values[i], v)

    pos = t_grid > 0
    slope, resid = _fit_loglog(t_grid[pos], values[pos])
    if cutoff is None:
        target = -(1.0 / a) * min(eps_f, block.dim / 2.0)
        s_val = None
    else:
        target = -eps_f
        s_val = s
    return DecayFit(times=t_grid, values=values, slope=slope, target=target,
                    residual=resid, a=a, d_j=block.dim, eps_j=eps_f, s=s_val)


def decay_onset(m: EnssBlockMap, eps_j: float, s: float, zeta: SmoothCutoff,
                ensemble, t_grid) -> float:
    """Time at which the cutoff-filtered weighted norm first drops below
    1/sqrt(2) of its initial value (interpolated on the grid)."""
    t_grid = np.asarray(t_grid, dtype=float)
    weight = m.block_weight(eps_j)
    cut_field = zeta(m.block_kinetic_field() / s)
    env = np.zeros(len(t_grid))
    for psi in ensemble:
        khat0 = m.apply_T(psi, "+").momentum * cut_field
        for i, t in enumerate(t_grid):
            st = WaveFunction.from_momentum(m.lattice, khat0 * np.exp(-1j * t * m._lam_axis_field))
            v = float(np.sqrt(np.sum(weight**2 * np.abs(st.psi) ** 2) * m.lattice.dvol))
            env[i] = max(env[i], v)
    threshold = env[0] / math.sqrt(2.0)
    below = np.nonzero(env < threshold)[0]
    if len(below) == 0:
        raise ConvergenceError("decay onset not reached inside the time grid")
    i = below[0]
    if i == 0:
        return float(t_grid[0])
    t0, t1 = t_grid[i - 1], t_grid[i]
    v0, v1 = env[i - 1], env[i]
    frac = (v0 - threshold) / (v0 - v1)
    return float(t0 + frac * (t1 - t0))


def block_field(sym: DispersionSymbol, lat: Lattice, j: int) -> np.ndarray:
    """p_j(k_j) over the momentum grid for one block (1-based index)."""
    block = sym.blocks[j - 1]
    if block.dim == 1:
        (axis,) = lat.block_axes(j - 1)
        lam = _block_1d_lambda(block, lat.momenta(axis))
        return np.broadcast_to(lat.axis_mesh(axis, lam), lat.shape).copy()
    r2 = lat.block_radius2(j - 1, momentum=True)
    p = r2 ** (block.exponent / 2.0)
    if block.kind != POSITIVE:
        p = -p
    return np.broadcast_to(p, lat.shape).copy()


def spectral_partition(sym: DispersionSymbol, lat: Lattice, window, s: float,
                       zeta: SmoothCutoff | None = None):
    """Split phi(P(k)) = sum_{j in J_+} zeta(p_j/s) phi_j(k, s) on the grid.

    Returns (components, residual) where components maps block index ->
    phi_j field.  The window support must sit above s * nu * 3/4 so the
    covering {p_j >= s/2} holds on supp phi(P).
    """
    if zeta is None:
        zeta = SmoothCutoff()
    lo, hi = window.support
    nu = sym.nu
    if not lo >= s * nu * 0.75:
        raise ValueError(
            f"window support starts at {lo}, below the coverable threshold {s * nu * 0.75}"
        )
    from .propagate import symbol_field

    P = symbol_field(sym, lat)
    phi_P = window(P)
    j_plus = sym.j_set_plus
    weights = {j: zeta(block_field(sym, lat, j) / (s / nu)) for j in j_plus}
    gates = {j: zeta(block_field(sym, lat, j) / s) for j in j_plus}
    denom = sum(gates[j] * weights[j] for j in j_plus)
    live = phi_P > 0.0
    if np.any(live) and float(np.min(denom[live])) <= 0.0:
        raise ValueError("window not coverable at this scale: partition denominator vanishes")
    safe = np.where(denom > 0.0, denom, 1.0)
    components = {j: phi_P * weights[j] / safe for j in j_plus}
    recon = sum(gates[j] * components[j] for j in j_plus)
    residual = float(np.max(np.abs(phi_P - recon)))
    return components, residual
