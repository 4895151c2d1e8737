"""Exact-rational calculus over decay multi-indices.

A decay index eps = (eps_1, ..., eps_nu) assigns one nonnegative decay
exponent to each block of a dispersion symbol.  From it we derive

    rho_j       = min(2 eps_j, d_j) / (2 a_j),      rho = sum_j rho_j,
    tilde_rho_j = min(eps_j, d_j) / 2,              tilde_rho = sum_j tilde_rho_j,

and decide membership in the admissible families that control scattering:

    E_j     : eps_j + rho - rho_j > 1, minus the removal set
              {eps_j <= 1/2 and rho_m <= 1/2 for some m != j},
    E_plus  : intersection of E_j over blocks 1..j_plus,
    E_minus : intersection over blocks {j_minus - 1 .. nu} clipped to {1..nu},
    E_o     : rho > 1 and rho_j > 1/2 for some j,
    K_plus  : Cook-integral family; for an all-positive symbol
              eps_j + sum_{m != j} min(eps_m, d_m) > 1 for every j, and for the
              two-block (+,-) symbol eps_1 + min(eps_2, d_2) > 1,
    L_q     : isotropic family, q > 1.

All comparisons run in fractions.Fraction, so verdicts are exact and
reproducible whenever the inputs are rational.  Float inputs are snapped
to nearby small-denominator rationals; inputs that do not snap make the
report inexact and any verdict whose margin is below 1e-12 is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .symbol import DispersionSymbol, NEGATIVE, POSITIVE

_SNAP_DENOM = 10**6
_INEXACT_MARGIN = Fraction(1, 10**12)


def to_fraction(x) -> tuple[Fraction, bool]:
    """Convert to Fraction; second value reports whether the input was exact.

    Ints, Fractions and strings like "9/10" are exact.  Floats snap to the
    nearest rational with denominator <= 1e6 when that rational reproduces
    the float; otherwise the exact binary value is kept and flagged inexact.
    """
    if isinstance(x, Fraction):
        return x, True
    if isinstance(x, int):
        return Fraction(x), True
    if isinstance(x, str):
        return Fraction(x), True
    if isinstance(x, float):
        exact_binary = Fraction(x)
        snapped = exact_binary.limit_denominator(_SNAP_DENOM)
        if float(snapped) == x:
            return snapped, True
        return exact_binary, False
    raise TypeError(f"cannot interpret {x!r} as a rational")


@dataclass(frozen=True)
class DecayIndex:
    """Nonnegative rational decay exponents, one per symbol block."""

    eps: tuple[Fraction, ...]
    exact: bool = True

    def __post_init__(self):
        for e in self.eps:
            if e < 0:
                raise ValueError(f"decay exponents must be >= 0, got {e}")

    def __len__(self) -> int:
        return len(self.eps)

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(e) for e in self.eps)


def decay_index(values) -> DecayIndex:
    fracs, exact = [], True
    for v in values:
        f, ok = to_fraction(v)
        fracs.append(f)
        exact = exact and ok
    return DecayIndex(tuple(fracs), exact)


@dataclass(frozen=True)
class RhoProfile:
    rho_j: tuple[Fraction, ...]
    rho: Fraction
    tilde_rho_j: tuple[Fraction, ...]
    tilde_rho: Fraction
    exact: bool


def _block_exponents(sym: DispersionSymbol) -> tuple[list[Fraction], bool]:
    out, exact = [], True
    for b in sym.blocks:
        a, ok = to_fraction(b.exponent)
        out.append(a)
        exact = exact and ok
    return out, exact


def rho_components(sym: DispersionSymbol, eps: DecayIndex) -> RhoProfile:
    """Derived decay rates rho_j = min(2 eps_j, d_j)/(2 a_j), tilde_rho_j = min(eps_j, d_j)/2."""
    if len(eps) != sym.nu:
        raise ValueError(f"decay index has {len(eps)} entries for {sym.nu} blocks")
    a_list, a_exact = _block_exponents(sym)
    rho_j, trho_j = [], []
    for b, a, e in zip(sym.blocks, a_list, eps.eps):
        d = Fraction(b.dim)
        rho_j.append(min(2 * e, d) / (2 * a))
        trho_j.append(min(e, d) / 2)
    return RhoProfile(
        rho_j=tuple(rho_j),
        rho=sum(rho_j, Fraction(0)),
        tilde_rho_j=tuple(trho_j),
        tilde_rho=sum(trho_j, Fraction(0)),
        exact=eps.exact and a_exact,
    )


def _fmt(x: Fraction) -> str:
    return str(x)


def _flag(witness: str, margin: Fraction, exact: bool) -> str:
    if margin == 0:
        return witness + " (boundary)"
    if not exact and abs(margin) < _INEXACT_MARGIN:
        return witness + " (inexact: margin below 1e-12)"
    return witness


def in_E_j(sym: DispersionSymbol, eps: DecayIndex, j: int) -> tuple[bool, str]:
    """Membership of eps in E_j (1-based block index j), with a witness string."""
    if not 1 <= j <= sym.nu:
        raise IndexError(f"block index {j} out of range 1..{sym.nu}")
    prof = rho_components(sym, eps)
    e_j = eps.eps[j - 1]
    lhs = e_j + prof.rho - prof.rho_j[j - 1]
    margin = lhs - 1
    main = margin > 0
    main_txt = f"eps_{j} + rho - rho_{j} = {_fmt(lhs)} {'>' if main else '<='} 1"
    if not main:
        return False, _flag(main_txt, margin, prof.exact)

    half = Fraction(1, 2)
    if e_j <= half:
        for m in range(1, sym.nu + 1):
            if m == j:
                continue
            if prof.rho_j[m - 1] <= half:
                wit = (
                    f"removed: eps_{j} = {_fmt(e_j)} <= 1/2 and "
                    f"rho_{m} = {_fmt(prof.rho_j[m - 1])} <= 1/2"
                )
                bmargin = min(half - e_j, half - prof.rho_j[m - 1])
                return False, _flag(wit, bmargin, prof.exact)
    return True, _flag(main_txt, margin, prof.exact)


def _k_plus_all_positive(sym: DispersionSymbol, eps: DecayIndex) -> tuple[bool, str]:
    # Tail coefficients min(eps_m, d_m): twice tilde_rho_m.  This is the
    # normalization that reproduces the equal-eps closed form eps_1 > 1/d.
    terms = [min(e, Fraction(b.dim)) for e, b in zip(eps.eps, sym.blocks)]
    total = sum(terms, Fraction(0))
    worst, worst_j = None, None
    for j in range(1, sym.nu + 1):
        lhs = eps.eps[j - 1] + (total - terms[j - 1])
        if worst is None or lhs < worst:
            worst, worst_j = lhs, j
    ok = worst > 1
    wit = (
        f"min over j of [eps_j + sum_(m!=j) min(eps_m, d_m)] = {_fmt(worst)} "
        f"{'>' if ok else '<='} 1 (attained at j={worst_j})"
    )
    return ok, _flag(wit, worst - 1, eps.exact)


def _k_plus_hyperbolic(sym: DispersionSymbol, eps: DecayIndex) -> tuple[bool, str]:
    tail = min(eps.eps[1], Fraction(sym.blocks[1].dim))
    lhs = eps.eps[0] + tail
    ok = lhs > 1
    wit = f"eps_1 + min(eps_2, d_2) = {_fmt(lhs)} {'>' if ok else '<='} 1"
    return ok, _flag(wit, lhs - 1, eps.exact)


def _is_hyperbolic_pair(sym: DispersionSymbol) -> bool:
    return (
        sym.nu == 2
        and sym.blocks[0].kind == POSITIVE
        and sym.blocks[1].kind == NEGATIVE
    )


@dataclass(frozen=True)
class AdmissibilityReport:
    memberships: dict[str, tuple[bool | None, str]]
    profile: RhoProfile
    exact: bool

    def verdict(self, name: str) -> bool | None:
        return self.memberships[name][0]

    def witness(self, name: str) -> str:
        return self.memberships[name][1]

    def lines(self) -> list[str]:
        width = max(len(n) for n in self.memberships)
        out = []
        for name, (ok, wit) in self.memberships.items():
            tag = "n/a" if ok is None else ("yes" if ok else "no")
            out.append(f"{name:<{width}}  {tag:<3}  {wit}")
        return out


def classify(sym: DispersionSymbol, eps: DecayIndex, q=None) -> AdmissibilityReport:
    """Full membership report for one decay index (and optional isotropic q)."""
    prof = rho_components(sym, eps)
    half = Fraction(1, 2)
    memb: dict[str, tuple[bool | None, str]] = {}

    e_verdicts = {}
    for j in range(1, sym.nu + 1):
        ok, wit = in_E_j(sym, eps, j)
        e_verdicts[j] = ok
        memb[f"E_{j}"] = (ok, wit)

    for name, idx_set in (("E_plus", sym.j_set_plus), ("E_minus", sym.j_set_minus)):
        if not idx_set:
            memb[name] = (None, "empty block set")
            continue
        bad = [j for j in idx_set if not e_verdicts[j]]
        if bad:
            memb[name] = (False, f"fails E_{bad[0]} (blocks {list(idx_set)})")
        else:
            memb[name] = (True, f"member of E_j for every j in {list(idx_set)}")

    rho_ok = prof.rho > 1
    peak = max(prof.rho_j)
    peak_ok = peak > half
    eo = rho_ok and peak_ok
    if not rho_ok:
        wit = f"rho = {_fmt(prof.rho)} <= 1"
        margin = prof.rho - 1
    elif not peak_ok:
        wit = f"rho = {_fmt(prof.rho)} > 1 but max_j rho_j = {_fmt(peak)} <= 1/2"
        margin = peak - half
    else:
        wit = f"rho = {_fmt(prof.rho)} > 1 and max_j rho_j = {_fmt(peak)} > 1/2"
        margin = min(prof.rho - 1, peak - half)
    memb["E_o"] = (eo, _flag(wit, margin, prof.exact))

    if all(b.kind == POSITIVE for b in sym.blocks):
        memb["K_plus"] = _k_plus_all_positive(sym, eps)
    elif _is_hyperbolic_pair(sym):
        memb["K_plus"] = _k_plus_hyperbolic(sym, eps)
    else:
        memb["K_plus"] = (None, "defined only for all-positive or (+,-) two-block symbols")

    if q is not None:
        qf, q_exact = to_fraction(q)
        ok = qf > 1
        wit = f"q = {_fmt(qf)} {'>' if ok else '<='} 1"
        memb["L_q"] = (ok, _flag(wit, qf - 1, q_exact))

    return AdmissibilityReport(memberships=memb, profile=prof, exact=prof.exact)
