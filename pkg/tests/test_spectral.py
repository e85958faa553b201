import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psgraph.errors import ConvergenceFailure
from psgraph.graph_core import named_graph, random_regular
from psgraph.spectral import (
    BAND_EDGE,
    EXCEPTIONAL,
    TEMPERED,
    UNTEMPERED,
    SpectralParameter,
    chi_of,
    classify,
    eigh_decompose,
    jacobi_eigh,
    laplace_matrix,
    spectral_parameter,
    spectrum_report,
)

from conftest import brute_adjacency


def oracle_spectrum(g, tol=1e-8):
    """Eigenvalues with multiplicities from numpy on the oracle adjacency."""
    w = np.sort(np.linalg.eigvalsh(brute_adjacency(g) / (g.q + 1)))[::-1]
    groups = []
    for x in w:
        if groups and abs(groups[-1][0] - x) <= tol:
            groups[-1][1] += 1
        else:
            groups.append([x, 1])
    return groups


@pytest.mark.parametrize("name, expected", [
    ("petersen", [(1, 1), (1 / 3, 5), (-2 / 3, 4)]),
    ("k4", [(1, 1), (-1 / 3, 3)]),
    ("cube", [(1, 1), (1 / 3, 3), (-1 / 3, 3), (-1, 1)]),
    ("k33", [(1, 1), (0, 4), (-1, 1)]),
])
def test_named_spectra(name, expected):
    g = named_graph(name)
    spaces = eigh_decompose(g)
    got = [(sp.lam, sp.multiplicity) for sp in spaces]
    oracle = oracle_spectrum(g)
    assert [m for _, m in got] == [m for _, m in expected] == [m for _, m in oracle]
    for (lam, _), (lo, _), (le, _) in zip(got, oracle, expected):
        assert abs(lam - lo) < 1e-12 and abs(lam - le) < 1e-12


@pytest.mark.parametrize("name", ["petersen", "heawood", "k5"])
def test_bases_orthonormal_eigenvectors(name):
    g = named_graph(name)
    lap = laplace_matrix(g)
    cols = []
    for sp in eigh_decompose(g):
        b = sp.basis
        assert np.allclose(b.T @ b, np.eye(sp.multiplicity), atol=1e-12)
        assert np.max(np.abs(lap @ b - sp.lam * b)) < 1e-12
        cols.append(b)
    full = np.hstack(cols)
    assert np.allclose(full.T @ full, np.eye(g.vertex_count), atol=1e-12)


def test_laplace_matrix(k4, petersen):
    a = laplace_matrix(k4)
    off = a[~np.eye(4, dtype=bool)]
    assert np.allclose(off, 1 / 3)
    assert np.allclose(laplace_matrix(petersen).sum(axis=1), 1)
    top = eigh_decompose(petersen)[0]
    assert top.lam == 1.0 and top.multiplicity == 1
    assert np.allclose(top.basis[:, 0], 1 / math.sqrt(10))


def test_jacobi_matches_numpy():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(12, 12))
    m = m + m.T
    w, v = jacobi_eigh(m)
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(m), atol=1e-12)
    assert np.allclose(m @ v, v * w, atol=1e-11)


def test_jacobi_convergence_failure():
    rng = np.random.default_rng(4)
    m = rng.normal(size=(8, 8))
    with pytest.raises(ConvergenceFailure):
        jacobi_eigh(m + m.T, max_sweeps=1)


def test_random_graph_decomposes():
    g = random_regular(50, 4, seed=7)
    spaces = eigh_decompose(g)
    assert sum(sp.multiplicity for sp in spaces) == 50
    lams = np.concatenate([[sp.lam] * sp.multiplicity for sp in spaces])
    assert np.allclose(np.sort(lams), np.linalg.eigvalsh(brute_adjacency(g) / 4), atol=1e-12)


def quadratic_z(lam, q):
    b = (q + 1) * lam / math.sqrt(q)
    return (b + cmath.sqrt(b * b - 4)) / 2, (b - cmath.sqrt(b * b - 4)) / 2


def test_parameter_petersen_tempered():
    sp = spectral_parameter(1 / 3, 2)
    z1, z2 = quadratic_z(1 / 3, 2)
    oracle = z1 if z1.imag > 0 else z2
    assert abs(sp.z - oracle) < 1e-14
    assert abs(sp.z - (0.353553 + 0.935414j)) < 1e-6
    assert abs(sp.mu - (0.5 + 1.322876j)) < 1e-6
    assert sp.classification == TEMPERED


def test_parameter_exceptional_and_band_edge():
    sp = spectral_parameter(1.0, 2)
    assert abs(sp.z - math.sqrt(2)) < 1e-12 and abs(sp.mu - 2) < 1e-12
    assert sp.classification == EXCEPTIONAL
    edge = spectral_parameter(2 * math.sqrt(2) / 3, 2)
    assert abs(edge.z - 1) < 1e-7 and edge.classification == BAND_EDGE
    assert spectral_parameter(-1.0, 2).classification == EXCEPTIONAL


def test_parameter_untempered_branch():
    lam = 0.97  # between the band edge 2*sqrt(2)/3 and 1
    sp = spectral_parameter(lam, 2)
    assert sp.classification == UNTEMPERED
    assert sp.z.imag == 0 and abs(sp.z) >= 1


def test_chi_examples():
    assert abs(chi_of(1, 2) - 2 * math.sqrt(2) / 3) < 1e-15
    assert abs(chi_of(math.sqrt(2), 2) - 1) < 1e-15
    assert abs(chi_of(0.353553 + 0.935414j, 2) - 1 / 3) < 1e-6
    assert abs(chi_of(spectral_parameter(1 / 3, 2).z, 2) - 1 / 3) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.999, 0.999), st.sampled_from([2, 3, 4]))
def test_parameter_invariants(lam, q):
    sp = spectral_parameter(lam, q)
    assert abs(sp.z + 1 / sp.z - (q + 1) * lam / math.sqrt(q)) < 1e-12
    assert sp.mu == math.sqrt(q) * sp.z
    assert sp.z.imag > 0 or (sp.z.imag == 0 and abs(sp.z) >= 1 - 1e-12)
    cls = classify(sp.z, q)
    if abs(abs(sp.z) - 1) <= 1e-9 and min(abs(sp.z - 1), abs(sp.z + 1)) > 1e-9:
        assert cls in (TEMPERED, EXCEPTIONAL)
    other = sp.conjugate_branch()
    assert abs(other.lam - sp.lam) < 1e-12


def test_from_z_round_trip():
    sp = SpectralParameter.from_z(3.0, 2)
    assert sp.classification == UNTEMPERED
    assert abs(sp.lam - chi_of(3.0, 2)) < 1e-15
    assert sp.backward_partner().z == 3.0


def test_spectrum_report_classes():
    rep = spectrum_report(named_graph("petersen"))
    assert [r["classification"] for r in rep] == [EXCEPTIONAL, TEMPERED, TEMPERED]
    cube = spectrum_report(named_graph("cube"))
    assert any(r["lambda"] == -1.0 and r["classification"] == EXCEPTIONAL for r in cube)
    k33 = spectrum_report(named_graph("k33"))
    assert any(r["lambda"] == -1.0 and r["classification"] == EXCEPTIONAL for r in k33)
