from fractions import Fraction

import pytest

from anisoscat.admissibility import (classify, decay_index, in_E_j,
                                     rho_components, to_fraction)
from anisoscat.symbol import BlockSpec, make_dispersion

F = Fraction


def two_blocks(d1=2, d2=2, a1=2.0, a2=2.0):
    return make_dispersion(
        [BlockSpec(d1, a1, "positive"), BlockSpec(d2, a2, "positive")], 2, 2)


def laplacian_line(nu, a=2.0):
    return make_dispersion([BlockSpec(1, a, "positive")] * nu, nu, nu)


def hyperbolic():
    return make_dispersion(
        [BlockSpec(1, 2.0, "positive"), BlockSpec(1, 2.0, "negative")], 1, 1)


def test_to_fraction_snaps_floats():
    f, exact = to_fraction(0.4)
    assert f == F(2, 5) and exact
    f, exact = to_fraction("9/10")
    assert f == F(9, 10) and exact
    f, exact = to_fraction(2 ** 0.5)
    assert not exact


def test_rho_components_examples():
    sym = two_blocks()
    prof = rho_components(sym, decay_index(["9/10", "9/10"]))
    assert prof.rho_j[0] == F(9, 20)
    prof = rho_components(sym, decay_index([3, 3]))
    assert prof.rho_j[0] == F(1, 2)  # capped at d_j
    prof = rho_components(sym, decay_index([0, 0]))
    assert prof.rho_j[0] == 0 and prof.rho == 0


def test_rho_components_tilde():
    sym = two_blocks()
    prof = rho_components(sym, decay_index(["1/2", 5]))
    assert prof.tilde_rho_j == (F(1, 4), F(1))
    assert prof.tilde_rho == F(5, 4)


def test_rho_components_length_mismatch():
    with pytest.raises(ValueError):
        rho_components(two_blocks(), decay_index(["1/2"]))


def test_negative_eps_rejected():
    with pytest.raises(ValueError):
        decay_index(["-1/2", "1/2"])


def test_in_E_j_positive_case():
    ok, witness = in_E_j(two_blocks(), decay_index(["9/10", "9/10"]), 1)
    assert ok
    assert "27/20" in witness


def test_in_E_j_zero_index():
    ok, _ = in_E_j(two_blocks(), decay_index([0, 0]), 1)
    assert not ok


def test_in_E_j_removal_clause():
    # main inequality fails and the removal clause is also active
    ok, _ = in_E_j(two_blocks(), decay_index(["2/5", "2/5"]), 1)
    assert not ok
    # removal alone: main holds but eps_j <= 1/2 with a small rho_m
    sym = laplacian_line(4)
    eps = decay_index(["1/2", 5, 5, 5])
    prof = rho_components(sym, eps)
    assert eps.eps[0] + prof.rho - prof.rho_j[0] > 1
    ok, witness = in_E_j(sym, eps, 1)
    assert not ok and "removed" in witness


def test_in_E_j_out_of_range():
    with pytest.raises(IndexError):
        in_E_j(two_blocks(), decay_index([1, 1]), 3)


def test_classify_laplacian_equal_eps():
    # three 1D quadratic blocks at eps = 2/5: K_+ holds (2/5 > 1/3), E_+ fails
    sym = laplacian_line(3)
    rep = classify(sym, decay_index(["2/5", "2/5", "2/5"]))
    assert rep.verdict("K_plus") is True
    assert rep.verdict("E_plus") is False


def test_classify_two_block_point():
    rep = classify(two_blocks(), decay_index(["9/10", "9/10"]))
    assert rep.verdict("E_plus") is True
    assert rep.verdict("E_o") is False  # rho = 9/10 <= 1


def test_classify_hyperbolic_point():
    rep = classify(hyperbolic(), decay_index(["4/5", "3/5"]))
    # E_+ = E_1 here; eps_1 + rho_2 = 4/5 + 1/4 > 1
    assert rep.verdict("E_1") is True
    assert rep.verdict("E_plus") is True


def test_classify_L_q():
    rep = classify(two_blocks(), decay_index([1, 1]), q="3/2")
    assert rep.verdict("L_q") is True
    rep = classify(two_blocks(), decay_index([1, 1]), q=1)
    assert rep.verdict("L_q") is False


def test_classify_K_plus_not_applicable():
    sym = make_dispersion([BlockSpec(1, 2.0, "signed")], 0, 1)
    rep = classify(sym, decay_index([1]))
    assert rep.verdict("K_plus") is None


def test_E_minus_clipped_index_set():
    # j_minus = 1 means the set {j_minus - 1, ...} clips away index 0
    sym = hyperbolic()
    assert sym.j_set_minus == (1, 2)
    assert sym.j_set_plus == (1,)


def test_boundary_flagged():
    # eps chosen so eps_1 + rho - rho_1 == 1 exactly
    sym = laplacian_line(2)
    ok, witness = in_E_j(sym, decay_index(["3/4", "1/2"]), 1)
    # 3/4 + min(1, 1)/4 = 1 exactly: not a member, flagged as boundary
    assert not ok and "boundary" in witness


def test_determinism_bit_for_bit():
    sym = two_blocks()
    eps = decay_index(["7/10", "4/5"])
    r1 = classify(sym, eps, q="5/4")
    r2 = classify(sym, eps, q="5/4")
    assert r1.memberships == r2.memberships


def test_monotonicity_in_eps():
    # growing eps keeps E_j membership as long as removal is not triggered
    import random

    rng = random.Random(7)
    sym = two_blocks(d1=1, d2=1)
    for _ in range(60):
        base = [F(rng.randint(0, 40), 20) for _ in range(2)]
        bump = [b + F(rng.randint(0, 10), 20) for b in base]
        e0, e1 = decay_index(base), decay_index(bump)
        ok0, _ = in_E_j(sym, e0, 1)
        ok1, w1 = in_E_j(sym, e1, 1)
        if ok0 and not ok1:
            assert "removed" in w1


def test_example_identity_two_block_closed_form():
    # on d=(2,2), a=(2,2), eps_j <= d_j/2 the admissible set E_+ reduces to
    # {eps_1 + eps_2/2 > 1 and eps_1/2 + eps_2 > 1}
    sym = two_blocks()
    pts = [(F(i, 10), F(j, 10)) for i in range(0, 11) for j in range(0, 11)]
    for e1, e2 in pts[:100]:
        rep = classify(sym, decay_index([e1, e2]))
        closed = (e1 + e2 / 2 > 1) and (e1 / 2 + e2 > 1)
        assert rep.verdict("E_plus") == closed, (e1, e2)


def test_K_plus_contains_E_plus_on_laplacian_family():
    import random

    rng = random.Random(19)
    sym = make_dispersion(
        [BlockSpec(2, 2.0, "positive"), BlockSpec(3, 2.0, "positive")], 2, 2)
    for _ in range(100):
        eps = decay_index([F(rng.randint(0, 60), 20), F(rng.randint(0, 60), 20)])
        rep = classify(sym, eps)
        if rep.verdict("E_plus"):
            assert rep.verdict("K_plus")


def test_irrational_exponent_flagged_inexact():
    sym = make_dispersion([BlockSpec(1, 2 ** 0.5 + 1, "positive")], 1, 1)
    rep = classify(sym, decay_index([1]))
    assert not rep.exact
