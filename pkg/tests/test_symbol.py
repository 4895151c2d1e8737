import numpy as np
import pytest

from anisoscat.symbol import (BlockSpec, SmoothCutoff, SpectralWindow,
                              cutoff_eval, eval_symbol, group_velocity,
                              make_dispersion, symbol_range)


def laplacian(dim=2, a=2.0):
    return make_dispersion([BlockSpec(dim, a, "positive")], 1, 1)


def test_make_dispersion_laplacian_valid():
    sym = laplacian()
    assert sym.nu == 1 and sym.dim == 2


def test_make_dispersion_hyperbolic_valid():
    sym = make_dispersion(
        [BlockSpec(1, 2.0, "positive"), BlockSpec(1, 2.0, "negative")], 1, 1)
    assert sym.dim == 2
    assert symbol_range(sym) == "R"


def test_make_dispersion_rejects_low_exponent():
    with pytest.raises(ValueError):
        make_dispersion([BlockSpec(2, 1.0, "positive")], 1, 1)


def test_make_dispersion_rejects_wide_signed_block():
    with pytest.raises(ValueError):
        BlockSpec(2, 2.0, "signed")


def test_make_dispersion_rejects_inconsistent_kind_order():
    with pytest.raises(ValueError):
        make_dispersion(
            [BlockSpec(1, 2.0, "negative"), BlockSpec(1, 2.0, "positive")], 1, 1)


def test_eval_symbol_examples():
    assert eval_symbol(laplacian(), [3.0, 4.0]) == pytest.approx(25.0)
    signed = make_dispersion([BlockSpec(1, 3.0, "signed")], 0, 1)
    assert eval_symbol(signed, [-2.0]) == pytest.approx(-8.0)
    pm = make_dispersion(
        [BlockSpec(1, 2.0, "positive"), BlockSpec(1, 2.0, "negative")], 1, 1)
    assert eval_symbol(pm, [1.0, 1.0]) == pytest.approx(0.0)


def test_eval_symbol_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_symbol(laplacian(), [1.0, 2.0, 3.0])


def test_blockwise_additivity():
    sym = make_dispersion(
        [BlockSpec(2, 2.0, "positive"), BlockSpec(1, 3.0, "negative")], 1, 1)
    k = np.array([0.7, -1.2, 2.0])
    only1 = eval_symbol(sym, [0.7, -1.2, 0.0])
    only2 = eval_symbol(sym, [0.0, 0.0, 2.0])
    assert eval_symbol(sym, k) == pytest.approx(only1 + only2, abs=1e-14)


def test_symmetry_even_and_odd():
    rng = np.random.default_rng(3)
    even = laplacian(dim=3, a=2.5)
    odd = make_dispersion([BlockSpec(1, 1.7, "signed")], 0, 1)
    for _ in range(20):
        k = rng.uniform(-5, 5, size=3)
        assert eval_symbol(even, -k) == pytest.approx(eval_symbol(even, k))
        ks = rng.uniform(-5, 5, size=1)
        assert eval_symbol(odd, -ks) == pytest.approx(-eval_symbol(odd, ks))


def test_group_velocity_examples():
    assert group_velocity(laplacian(), [1.0, 0.0]) == pytest.approx([2.0, 0.0])
    signed = make_dispersion([BlockSpec(1, 3.0, "signed")], 0, 1)
    assert group_velocity(signed, [-2.0]) == pytest.approx([12.0])
    sym = make_dispersion(
        [BlockSpec(2, 1.5, "positive"), BlockSpec(1, 2.0, "signed"),
         BlockSpec(1, 4.0, "negative")], 1, 2)
    assert group_velocity(sym, [0.0, 0.0, 0.0, 0.0]) == pytest.approx([0.0] * 4)


def test_group_velocity_matches_finite_differences():
    rng = np.random.default_rng(11)
    sym = make_dispersion(
        [BlockSpec(2, 2.0, "positive"), BlockSpec(1, 3.0, "signed"),
         BlockSpec(1, 1.5, "negative")], 1, 2)
    d = sym.dim
    for _ in range(25):
        k = rng.uniform(0.1, 10.0, size=d) * rng.choice([-1.0, 1.0], size=d)
        grad = group_velocity(sym, k)
        h = 1e-6
        for i in range(d):
            ep = k.copy(); ep[i] += h
            em = k.copy(); em[i] -= h
            fd = (eval_symbol(sym, ep) - eval_symbol(sym, em)) / (2 * h)
            assert abs(grad[i] - fd) <= 1e-6 * max(1.0, abs(fd))


def test_symbol_range():
    assert symbol_range(laplacian()) == "[0,inf)"
    assert symbol_range(make_dispersion([BlockSpec(1, 2.0, "signed")], 0, 1)) == "R"


def test_cutoff_plateaus_and_midpoint():
    c = SmoothCutoff()
    assert cutoff_eval(c, 2.0) == 1.0
    assert cutoff_eval(c, 0.25) == 0.0
    assert cutoff_eval(c, 0.75) == pytest.approx(0.5)


def test_cutoff_monotone_and_c3():
    c = SmoothCutoff()
    lam = np.linspace(0.0, 1.5, 2001)
    vals = c(lam)
    assert np.all(np.diff(vals) >= -1e-15)
    assert np.all(c.derivative(lam) >= 0.0)
    inside = (lam <= c.lower) | (lam >= c.upper)
    assert np.all(np.isin(vals[inside], [0.0, 1.0]))
    # third derivative stays bounded through the bridge ends
    h = 1e-4
    for edge in (0.5, 1.0):
        d3 = (c(edge + 2 * h) - 3 * c(edge + h) + 3 * c(edge) - c(edge - h)) / h**3
        assert abs(d3) < 10.0


def test_spectral_window_support():
    w = SpectralWindow(1.0, 4.0, 0.5)
    assert w(0.9) == 0.0 and w(4.1) == 0.0
    assert w(2.0) == 1.0 and w(3.4) == 1.0
    assert 0.0 < w(1.2) < 1.0
