import numpy as np
import pytest

from psgraph.cover_oracle import (
    TreeSymbol,
    boundary_measure,
    build_cover,
    classical_ps,
    classical_ps_pairs,
    cylinder_mass_from,
    default_radius,
    harmonic_measure,
    horocycle_bracket,
    horocycle_sphere,
    intertwiner,
    leaf_measures,
    lift_symbol,
    measure_limit,
    off_diagonal_cover,
    op_cover,
    poisson_forward,
    poisson_forward_direct,
    radon_transform,
    tree_size,
)
from psgraph.distributions import (
    make_context,
    off_diagonal_sum,
    op_apply,
    pairing_closed_form,
    patterson_sullivan,
)
from psgraph.errors import (
    CylindersOverlap,
    CylinderTooShallow,
    DepthTooLarge,
    SupportTooWide,
    TemperedParameter,
)
from psgraph.graph_core import named_graph
from psgraph.spectral import SpectralParameter, chi_of
from psgraph.symbols import symbol_constant, symbol_random

from conftest import admissible_vectors, eigvec, rel


def test_cover_sizes(petersen):
    cov = build_cover(petersen, 0, 3)
    assert cov.size == 22 == tree_size(2, 3)
    depth1 = [t for t in range(cov.size) if cov.depth[t] == 1]
    nbrs = sorted(int(petersen.tau[e]) for e in petersen.out_edges[0])
    assert sorted(int(cov.proj[t]) for t in depth1) == nbrs
    assert len(cov.canonical_vertices()) == 10
    with pytest.raises(DepthTooLarge):
        build_cover(petersen, 0, 30)


def test_cover_structure(petersen):
    g = petersen
    cov = build_cover(g, 3, 5)
    adj = g.adjacency()
    for t in range(1, cov.size):
        assert adj[cov.proj[cov.parent[t]], cov.proj[t]] == 1
        assert g.tau[cov.edge_in[t]] == cov.proj[t]
    for t in range(cov.size):
        if cov.depth[t] < cov.radius:
            nb = cov.neighbors(t)
            assert len(nb) == g.q + 1
            assert sorted(int(cov.proj[s]) for s in nb) == sorted(np.flatnonzero(adj[cov.proj[t]]))
    # one flagged lift per fiber
    counts = np.bincount(cov.proj[cov.canonical], minlength=g.vertex_count)
    assert np.all(counts == 1)
    other = build_cover(g, 0, 5, lift_seed=4)
    assert np.all(np.bincount(other.proj[other.canonical], minlength=10) == 1)


def test_horocycle_bracket(petersen):
    cov = build_cover(petersen, 0, 4)
    leaf = int(cov.leaves[0])
    assert horocycle_bracket(cov, 0, leaf) == 0
    on_ray = int(cov.anc[leaf, 1])
    assert horocycle_bracket(cov, on_ray, leaf) == 1
    away = [t for t in cov.children[0] if t != on_ray][0]
    assert horocycle_bracket(cov, away, leaf) == -1
    with pytest.raises(CylinderTooShallow):
        horocycle_bracket(cov, on_ray, on_ray)


def test_boundary_measure_additivity(petersen):
    phi, sp = eigvec(petersen, -2 / 3, col=1)
    cov = build_cover(petersen, 0, 4)
    depth1 = [t for t in range(cov.size) if cov.depth[t] == 1]
    total = sum(boundary_measure(cov, phi, sp, t) for t in depth1)
    assert abs(total - phi[0]) < 1e-12
    for t in range(cov.size):
        if 1 <= cov.depth[t] < cov.radius:
            kids = sum(boundary_measure(cov, phi, sp, c) for c in cov.children[t])
            assert abs(kids - boundary_measure(cov, phi, sp, t)) < 1e-12
    assert abs(leaf_measures(cov, phi, sp).sum() - phi[0]) < 1e-12


def test_measure_invariance(petersen):
    """Two lifts of a graph vertex see the same cocycle-weighted cylinder masses."""
    g = petersen
    phi, sp = eigvec(g, 1 / 3, col=4)
    cov = build_cover(g, 0, 9)
    meas = leaf_measures(cov, phi, sp)
    x0 = 0
    # girth 5: the nearest other lifts of vertex 0 sit at depth 5
    x1 = int(np.flatnonzero((cov.proj == 0) & (cov.depth == 5))[0])
    checked = 0
    for p0 in _paths_from(cov, x0, 2):
        proj_path = [int(cov.proj[t]) for t in p0]
        for p1 in _paths_from(cov, x1, 2):
            if [int(cov.proj[t]) for t in p1] == proj_path:
                m0 = cylinder_mass_from(cov, x0, p0[-1], meas, sp.mu)
                m1 = cylinder_mass_from(cov, x1, p1[-1], meas, sp.mu)
                assert abs(m0 - m1) < 1e-10
                checked += 1
    assert checked == 6


def _paths_from(cov, x, k):
    from psgraph.cover_oracle import tree_paths
    return tree_paths(cov, x, k)


def test_poisson_round_trip(petersen):
    cov = build_cover(petersen, 0, 6)
    for phi, sp, _ in admissible_vectors(petersen):
        meas = leaf_measures(cov, phi, sp)
        for x in range(cov.size):
            if cov.depth[x] > cov.radius - 2:
                break
            assert abs(poisson_forward(cov, meas, sp, x) - phi[cov.proj[x]]) < 1e-10
        assert abs(poisson_forward(cov, meas, sp, 0) - meas.sum()) < 1e-15
        x = int(cov.leaves[0] // 7)
        assert abs(poisson_forward(cov, meas, sp, x) - poisson_forward_direct(cov, meas, sp, x)) < 1e-12


def test_poisson_radial_recursion(k4):
    """The transform of the harmonic measure at |z| > 1 is radial with
    (f(d-1) + q f(d+1)) / (q+1) = chi f(d)."""
    q = 2
    sp = SpectralParameter.from_z(3.0, q)
    cov = build_cover(k4, 0, 9)
    nu = harmonic_measure(cov)
    f = {}
    for x in range(cov.size):
        d = int(cov.depth[x])
        if d > 6:
            break
        val = poisson_forward(cov, nu, sp, x)
        f.setdefault(d, val)
        assert abs(val - f[d]) < 1e-12
    chi = chi_of(3.0, q)
    assert abs(f[1] - chi * f[0]) < 1e-12
    for d in range(1, 6):
        assert abs((f[d - 1] + q * f[d + 1]) / (q + 1) - chi * f[d]) < 1e-12 * abs(f[d + 1])
    with pytest.raises(CylinderTooShallow):
        poisson_forward(cov, nu, sp, int(cov.leaves[0]))


def test_radon_transform_basics(petersen):
    g = petersen
    cov = build_cover(g, 0, 6)
    phi, sp = eigvec(g, 1 / 3)
    psi, sp2 = eigvec(g, -2 / 3)
    sp_b = SpectralParameter.from_z(np.conj(sp2.z), 2)
    leaves = cov.leaves
    y1 = int(leaves[0])
    y2 = int([y for y in leaves if cov.anc[y, 1] != cov.anc[y1, 1]][0])
    path = list(cov.anc[y1, ::-1]) + list(cov.anc[y2, 1:])
    far = int([y for y in leaves if cov.anc[y, 2] != cov.anc[y1, 2] and cov.anc[y, 1] == cov.anc[y1, 1]][0])
    assert radon_transform(cov, TreeSymbol(cov, 1, {(far, int(cov.parent[far])): 1.0}), sp, sp_b, y1, y2) == 0
    i = 6  # the root
    one = TreeSymbol(cov, 1, {(int(path[i]), int(path[i - 1])): 1.0})
    r = radon_transform(cov, one, sp, sp_b, y1, y2)
    assert abs(r - 1.0) < 1e-15  # brackets vanish at the root
    i = 4
    f = TreeSymbol(cov, 1, {(int(path[i]), int(path[i - 1])): 1.0})
    b1 = horocycle_bracket(cov, int(path[i]), y1)
    b2 = horocycle_bracket(cov, int(path[i]), y2)
    r = radon_transform(cov, f, sp, sp_b, y1, y2)
    assert abs(r - sp.mu ** b1 * sp_b.mu ** b2) < 1e-14
    # shifting one step along the flow (toward y1) multiplies by mu / mu_b
    g2 = TreeSymbol(cov, 1, {(int(path[i - 1]), int(path[i - 2])): 1.0})
    r2 = radon_transform(cov, g2, sp, sp_b, y1, y2)
    assert abs(r2 / r - sp.mu / sp_b.mu) < 1e-13
    with pytest.raises(CylindersOverlap):
        radon_transform(cov, f, sp, sp_b, y1, int(cov.anc[y1, 3]))


@pytest.mark.parametrize("name", ["k4", "petersen"])
def test_classical_equals_dynamical(name):
    g = named_graph(name)
    cov = build_cover(g, 0, default_radius(g, 2))
    vecs = admissible_vectors(g)
    syms = [symbol_random(g, s % 3, 100 + s) for s in range(3)]
    for i, (phi, sp, _) in enumerate(vecs):
        for j, (psi, sp2, _) in enumerate(vecs):
            if i == j:
                ctx = make_context(g, phi, sp)
            else:
                ctx = make_context(g, phi, sp, psi, sp2.backward_partner())
            for a in syms:
                assert rel(classical_ps(cov, a, ctx), patterson_sullivan(a, ctx)) < 1e-8


def test_classical_constant_closed_form(petersen):
    cov = build_cover(petersen, 0, default_radius(petersen, 1))
    phi, sp = eigvec(petersen, 1 / 3, col=3)
    ctx = make_context(petersen, phi, sp)
    one = symbol_constant(petersen, 0, 1.0)
    assert rel(classical_ps(cov, one, ctx), pairing_closed_form(sp)) < 1e-10


def test_classical_pair_loop(k4):
    cov = build_cover(k4, 0, 4)
    phi, sp = eigvec(k4, -1 / 3, col=1)
    psi, _ = eigvec(k4, -1 / 3, col=2)
    ctx = make_context(k4, phi, sp, psi, sp.backward_partner())
    a = symbol_random(k4, 1, 3)
    assert rel(classical_ps_pairs(cov, a, ctx), classical_ps(cov, a, ctx)) < 1e-12


def test_lift_choice_independence(petersen):
    g = petersen
    phi, sp = eigvec(g, -2 / 3, col=2)
    psi, _ = eigvec(g, -2 / 3, col=0)
    ctx = make_context(g, phi, sp, psi, sp.backward_partner())
    a = symbol_random(g, 2, 21)
    base = classical_ps(build_cover(g, 0, 7), a, ctx)
    for root, seed in ((3, None), (7, None), (0, 5), (4, 9)):
        cov = build_cover(g, root, 7, lift_seed=seed)
        assert abs(classical_ps(cov, a, ctx) - base) < 1e-9


def test_intertwiner_n0_and_sphere_sizes(petersen):
    cov = build_cover(petersen, 0, 10)
    f = lift_symbol(cov, symbol_random(petersen, 1, 2))
    assert intertwiner(cov, f, 1.5, 0) is f
    leaf = int(cov.leaves[0])
    x = int(cov.anc[leaf, 2])
    for m in range(4):
        h = horocycle_sphere(cov, x, leaf, m)
        assert len(h) == (1 if m == 0 else 2 ** (m - 1))
        assert all(cov.distance(x, t) == 2 * m for t in h)
        if m:
            assert all(horocycle_bracket(cov, t, leaf) == horocycle_bracket(cov, x, leaf) for t in h)
    with pytest.raises(SupportTooWide):
        intertwiner(build_cover(petersen, 0, 5), lift_symbol(build_cover(petersen, 0, 5),
                                                              symbol_random(petersen, 1, 2)), 1.5, 2)


def test_off_diagonal_identity(petersen):
    g = petersen
    phi, sp = eigvec(g, 1 / 3, col=0)
    psi, sp2 = eigvec(g, -2 / 3, col=1)
    contexts = [make_context(g, phi, sp), make_context(g, phi, sp, psi, sp2.backward_partner())]
    a = symbol_random(g, 1, 8)
    for n in range(3):
        cov = build_cover(g, 0, 2 + 2 * n + max(1, n + 1) + 1)
        for ctx in contexts:
            assert rel(off_diagonal_cover(cov, a, ctx, n), off_diagonal_sum(a, ctx, n)) < 1e-8


def test_measure_limit(k4):
    sp = SpectralParameter.from_z(3.0, 2)
    cov = build_cover(k4, 0, 14)
    nu = harmonic_measure(cov)
    cyl = int(cov.children[0][0])
    errs = [abs(measure_limit(cov, nu, sp, cyl, n) - 1 / 3) for n in range(4, 13)]
    assert errs[-1] < 1e-3
    assert all(b < a for a, b in zip(errs, errs[1:]))
    printed = measure_limit(cov, nu, sp, cyl, 12, printed=True)
    assert abs(printed - (1 / 3) * (8.5 / 8) ** 2) < 1e-6
    with pytest.raises(TemperedParameter):
        measure_limit(cov, nu, SpectralParameter.from_z(1j, 2), cyl, 6)


def test_measure_limit_nonradial(petersen):
    phi, sp0 = eigvec(petersen, 1 / 3)
    sp = SpectralParameter.from_z(3.0, 2)
    cov = build_cover(petersen, 0, 13)
    rng = np.random.default_rng(2)
    meas = rng.uniform(0, 1, len(cov.leaves)) + 0j
    mass = np.zeros(cov.size, dtype=complex)
    mass[cov.leaves] = meas
    for t in range(cov.size - 1, 0, -1):
        mass[cov.parent[t]] += mass[t]
    for cyl in (int(cov.children[0][1]), int(cov.children[cov.children[0][0]][1])):
        assert rel(measure_limit(cov, meas, sp, cyl, 11), mass[cyl]) < 1e-3


@pytest.mark.parametrize("name", ["k4", "petersen"])
def test_op_base_point_independence(name):
    g = named_graph(name)
    cov = build_cover(g, 0, 6)
    syms = [symbol_random(g, k, 30 + k) for k in (0, 1, 2)]
    for phi, sp, _ in admissible_vectors(g)[:4]:
        for a in syms:
            dyn = op_apply(a, phi, sp)
            for x in range(0, cov.size, 5):
                if cov.depth[x] > 3:
                    break
                assert abs(op_cover(cov, a, phi, sp, x) - dyn[cov.proj[x]]) < 1e-9
