import numpy as np
import pytest
from scipy.integrate import quad

from anisoscat.field import (Lattice, WaveFunction, gaussian_packet,
                             lattice_for, slice_1d_csv, wavefunction_from_bytes,
                             wavefunction_to_bytes, weight_field, weight_norm)
from anisoscat.symbol import BlockSpec, make_dispersion


@pytest.fixture
def line():
    sym = make_dispersion([BlockSpec(1, 2.0, "positive")], 1, 1)
    return lattice_for(sym, [(512, 40.0)])


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice(((100, 10.0),), (1,))  # not a power of two
    with pytest.raises(ValueError):
        Lattice(((8, 10.0),), (1,))  # too few points
    with pytest.raises(ValueError):
        Lattice(((32, 10.0), (32, 10.0)), (1,))  # block map mismatch


def test_grids(line):
    x = line.positions(0)
    k = line.momenta(0)
    assert x[0] == -40.0 and x[256] == 0.0
    assert k[256] == 0.0
    assert np.allclose(np.diff(k), np.pi / 40.0)


def test_gaussian_packet_normalized(line):
    wf = gaussian_packet(line, [0.0], [0.0], [1.0])
    assert abs(wf.norm() - 1.0) < 1e-12


def test_gaussian_packet_support_violation(line):
    with pytest.raises(ValueError, match="axis 0"):
        gaussian_packet(line, [38.0], [0.0], [1.0])


def test_momentum_expectation_matches_quadrature(line):
    # oracle: <k> of the closed-form transform of a modulated Gaussian is k0
    wf = gaussian_packet(line, [0.0], [2.0], [1.0])
    assert wf.momentum_mean()[0] == pytest.approx(2.0, abs=1e-6)
    sigma = 1.0
    dens = lambda k: np.sqrt(2 * sigma**2 / np.pi) * np.exp(-2 * sigma**2 * (k - 2.0) ** 2)
    mean, _ = quad(lambda k: k * dens(k), -10, 14)
    assert wf.momentum_mean()[0] == pytest.approx(mean, abs=1e-6)


def test_transform_roundtrip_and_parseval(line):
    wf = gaussian_packet(line, [3.0], [1.5], [2.0])
    back = WaveFunction.from_momentum(line, wf.momentum)
    assert (back - wf).norm() < 1e-12
    assert abs(wf.momentum_norm() - wf.norm()) < 1e-12


def test_gaussian_transform_pair(line):
    # closed-form oracle: the transform of a width-sigma Gaussian has width 1/(2 sigma)
    sigma = 1.5
    wf = gaussian_packet(line, [0.0], [0.0], [sigma])
    k = line.momenta(0)
    expected = (2 * sigma**2 / np.pi) ** 0.25 * np.exp(-(sigma * k) ** 2)
    assert np.max(np.abs(wf.momentum - expected)) < 1e-10


def test_delta_like_packet_flat_spectrum(line):
    psi = np.zeros(line.shape, dtype=complex)
    psi[256] = 1.0
    wf = WaveFunction(line, psi)
    mod = np.abs(wf.momentum)
    assert np.max(mod) - np.min(mod) < 1e-12 * np.max(mod)


def test_weight_norm_unit_weight(line):
    wf = gaussian_packet(line, [5.0], [1.0], [1.3])
    assert weight_norm(wf, [0]) == pytest.approx(wf.norm(), abs=1e-14)


def test_weight_norm_decays_with_center(line):
    wf_near = gaussian_packet(line, [0.0], [0.0], [1.0])
    vals = [weight_norm(gaussian_packet(line, [x0], [0.0], [1.0]), [1])
            for x0 in (0.0, 5.0, 15.0, 30.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert weight_norm(wf_near, [1]) <= wf_near.norm()


def test_weight_norm_against_quadrature(line):
    # eps = 1 weight on a unit Gaussian vs adaptive quadrature
    wf = gaussian_packet(line, [0.0], [0.0], [1.0])
    val = weight_norm(wf, [1])
    oracle2, _ = quad(lambda x: (1 + x * x) ** -1 * np.exp(-x * x / 2) / np.sqrt(2 * np.pi),
                      -np.inf, np.inf)
    assert val == pytest.approx(np.sqrt(oracle2), abs=1e-8)


def test_weight_norm_monotone_in_eps(line):
    wf = gaussian_packet(line, [2.0], [0.0], [1.0])
    vals = [weight_norm(wf, [e]) for e in (0.0, 0.3, 0.8, 1.5, 3.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_norm_invariant_under_unimodular_factor(line):
    wf = gaussian_packet(line, [0.0], [0.5], [1.0])
    x = line.positions(0)
    twisted = WaveFunction(line, wf.psi * np.exp(1j * np.sin(x)))
    assert twisted.norm() == pytest.approx(wf.norm(), abs=1e-14)


def test_weight_field_blocks():
    sym = make_dispersion(
        [BlockSpec(1, 2.0, "positive"), BlockSpec(1, 2.0, "positive")], 2, 2)
    lat = lattice_for(sym, [(16, 8.0), (16, 8.0)])
    w = weight_field(lat, ["1/2", 2])
    x0 = lat.positions(0)[:, None]
    x1 = lat.positions(1)[None, :]
    expect = (1 + x0**2) ** -0.25 * (1 + x1**2) ** -1.0
    assert np.allclose(w, expect)


def test_binary_roundtrip(line):
    wf = gaussian_packet(line, [1.0], [0.7], [1.1])
    blob = wavefunction_to_bytes(wf)
    back = wavefunction_from_bytes(blob)
    assert back.lattice == wf.lattice
    # complex64 storage: relative error at single precision
    assert (back - wf).norm() < 1e-6


def test_csv_slice(tmp_path, line):
    wf = gaussian_packet(line, [0.0], [0.0], [1.0])
    path = tmp_path / "slice.csv"
    slice_1d_csv(path, wf, axis=0)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,re,im"
    assert len(lines) == 1 + line.shape[0]
