"""Static anisotropic/isotropic potentials and time-dependent envelopes.

Static potentials are built from the lattice weight rho^eps (anisotropic),
a radial power (1+|x|^2)^(-q/2) (isotropic), or their sum, with an extra
decay margin so the weighted ratio genuinely vanishes at infinity.  Every
build returns a class-membership certificate: the sup of |rho^(-eps) V| and
its maximum over the outermost 10% radial shell of the box, which must stay
below half the sup for the potential to count as in-class at this box size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .admissibility import DecayIndex, decay_index
from .field import Lattice, weight_field
from .symbol import SmoothCutoff

ANISO = "aniso"
ISO = "iso"
SUM = "sum"

PLAIN = "plain"
LOGDAMPED = "logdamped"
COMPACT = "compact"


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    c: float
    eps: DecayIndex | None = None
    q: float | None = None
    profile: str = PLAIN
    margin: float = 0.05
    oscillation: tuple[float, ...] | None = None  # cos(w . x) factor, unit sup norm
    compact_radius: float | None = None

    def __post_init__(self):
        if self.kind not in (ANISO, ISO, SUM):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.profile not in (PLAIN, LOGDAMPED, COMPACT):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.kind in (ANISO, SUM) and self.eps is None:
            raise ValueError(f"{self.kind} potential needs a decay index")
        if self.kind in (ISO, SUM) and self.q is None:
            raise ValueError(f"{self.kind} potential needs q")
        if self.profile == PLAIN and not self.margin > 0:
            raise ValueError("plain profile needs a positive decay margin")


def potential_spec(kind, c, eps=None, q=None, **kw) -> PotentialSpec:
    if eps is not None and not isinstance(eps, DecayIndex):
        eps = decay_index(eps)
    return PotentialSpec(kind=kind, c=float(c), eps=eps, q=q, **kw)


@dataclass(frozen=True)
class ClassCertificate:
    sup_ratio: float
    shell_max: float
    in_class: bool
    note: str


@dataclass(frozen=True)
class StaticPotential:
    spec: PotentialSpec
    samples: np.ndarray
    certificate: ClassCertificate

    @property
    def is_zero(self) -> bool:
        return not np.any(self.samples)


def _iso_envelope(lat: Lattice, q: float) -> np.ndarray:
    return (1.0 + lat.radius2()) ** (-q / 2.0)


def _compact_bump(lat: Lattice, radius: float | None) -> np.ndarray:
    r1 = radius if radius is not None else 0.25 * lat.min_half_length
    r = np.sqrt(lat.radius2())
    step = SmoothCutoff(lower=0.5 * r1, upper=r1)
    return 1.0 - step(r)


def _shell_mask(lat: Lattice) -> np.ndarray:
    r = np.sqrt(lat.radius2())
    return r >= 0.9 * float(np.max(r))


def build_static(lat: Lattice, spec: PotentialSpec) -> StaticPotential:
    """Sample the potential and evaluate its class certificate on this box."""
    if spec.kind == ANISO:
        envelope = weight_field(lat, spec.eps)
    elif spec.kind == ISO:
        envelope = _iso_envelope(lat, spec.q)
    else:
        envelope = weight_field(lat, spec.eps) + _iso_envelope(lat, spec.q)

    if spec.profile == PLAIN:
        if spec.kind == ANISO:
            damp = weight_field(lat, [spec.margin] * len(lat.block_dims))
        else:
            damp = (1.0 + lat.radius2()) ** (-spec.margin / 2.0)
    elif spec.profile == LOGDAMPED:
        damp = 1.0 / (1.0 + np.log1p(lat.radius2()))
    else:
        damp = _compact_bump(lat, spec.compact_radius)

    shape = envelope * damp
    if spec.oscillation is not None:
        w = np.asarray(spec.oscillation, dtype=float)
        if w.size != lat.ndim:
            raise ValueError(f"oscillation wavevector needs {lat.ndim} components")
        phase = 0.0
        for i in range(lat.ndim):
            phase = phase + lat.axis_mesh(i, w[i] * lat.positions(i))
        shape = shape * np.cos(phase)

    samples = spec.c * shape

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(envelope > 0.0, np.abs(samples) / envelope, 0.0)
    sup_ratio = float(np.max(ratio))
    shell = _shell_mask(lat)
    shell_max = float(np.max(ratio[shell])) if np.any(shell) else 0.0
    if spec.c == 0.0:
        cert = ClassCertificate(0.0, 0.0, True, "zero potential, member of every class")
    elif shell_max < 0.5 * sup_ratio:
        cert = ClassCertificate(sup_ratio, shell_max, True, "shell ratio below half the sup")
    else:
        cert = ClassCertificate(
            sup_ratio, shell_max, False, "not in L_eps at this box size"
        )
    return StaticPotential(spec=spec, samples=samples, certificate=cert)


@dataclass(frozen=True)
class TimeEnvelope:
    """Scalar time factor: a decaying closed form or a 1-periodic Fourier sum.

    Decaying kinds: ("exp", alpha) -> exp(-alpha |t|); ("power", p) ->
    (1 + t^2)^(-p/2).  The declared gamma enters the square-integrability
    certificate for (1+t^2)^(gamma/2) g(t).  Periodic envelopes hold the
    coefficients (c0, ((m, a_m, b_m), ...)) of a finite Fourier series.
    """

    kind: str  # "decaying" | "periodic"
    form: str = "exp"
    param: float = 1.0
    gamma: float = 0.0
    fourier: tuple = field(default=())
    const: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "decaying":
            if self.form == "exp":
                val = np.exp(-self.param * np.abs(t))
            elif self.form == "power":
                val = (1.0 + t * t) ** (-self.param / 2.0)
            else:
                raise ValueError(f"unknown decaying form {self.form!r}")
        elif self.kind == "periodic":
            val = np.full_like(t, self.const, dtype=float)
            for m, am, bm in self.fourier:
                val = val + am * np.cos(2.0 * np.pi * m * t) + bm * np.sin(2.0 * np.pi * m * t)
        else:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        return val if val.ndim else float(val)

    def certificate(self) -> tuple[bool, float, str]:
        """(holds, integral value or nan, why) for the declared weighted L2 condition."""
        if self.kind == "periodic":
            return True, math.nan, "finite Fourier series: continuously differentiable"
        if self.form == "exp":
            if self.param <= 0:
                return False, math.inf, "exp envelope needs a positive rate"
            val, _ = quad(lambda t: (1 + t * t) ** self.gamma * self(t) ** 2, 0, np.inf)
            return True, 2.0 * val, "exponential decay beats any polynomial weight"
        # power form: (1+t^2)^(gamma - p) integrable iff p - gamma > 1/2
        if self.param - self.gamma > 0.5:
            val, _ = quad(lambda t: (1 + t * t) ** (self.gamma - self.param), 0, np.inf)
            return True, 2.0 * val, f"p - gamma = {self.param - self.gamma} > 1/2"
        return False, math.inf, f"p - gamma = {self.param - self.gamma} <= 1/2 diverges"

    def max_abs(self, samples: int = 4096) -> float:
        t = np.linspace(0.0, 1.0, samples, endpoint=False)
        if self.kind == "periodic":
            return float(np.max(np.abs(self(t))))
        return float(abs(self(0.0)))


def eval_timedep(static: StaticPotential, envelope: TimeEnvelope, t: float) -> np.ndarray:
    return static.samples * envelope(t)
