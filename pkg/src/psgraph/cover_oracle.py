"""Truncated universal cover: the classical side of every identity.

The tree is the unfolding of all non-backtracking paths of length <= R from a
root. Boundary cylinders are identified with their defining tree vertex y
(rays from the root through y); depth-R cylinders are the leaves. Boundary
values are measures based at the root, and all pairings are exact finite sums
over leaf cylinders.

Phase-space functions on the tree are stored as TreeSymbol: a value for each
(vertex x, endpoint t) where t is at distance L from x. In a tree that
endpoint determines the forward path from x of length L.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .distributions import DistributionContext
from .errors import (
    CylindersOverlap,
    CylinderTooShallow,
    DepthTooLarge,
    DepthTooSmall,
    ExceptionalParameter,
    SupportTooWide,
    TemperedParameter,
)
from .graph_core import RegularGraph, diameter
from .spectral import EXCEPTIONAL, SpectralParameter
from .symbols import CylinderSymbol, refine

VERTEX_BUDGET = 1_000_000


@dataclass(eq=False)
class TruncatedCover:
    graph: RegularGraph
    root: int
    radius: int
    parent: np.ndarray
    depth: np.ndarray
    proj: np.ndarray
    edge_in: np.ndarray  # graph edge parent -> vertex, -1 at the root
    children: list
    canonical: np.ndarray
    anc: np.ndarray  # anc[t, d] = ancestor of t at depth d, -1 below
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def leaves(self) -> np.ndarray:
        if "leaves" not in self._cache:
            self._cache["leaves"] = np.flatnonzero(self.depth == self.radius)
        return self._cache["leaves"]

    def neighbors(self, t: int) -> list[int]:
        nb = list(self.children[t])
        if self.parent[t] >= 0:
            nb.insert(0, int(self.parent[t]))
        return nb

    def step_edge(self, a: int, b: int) -> int:
        """Graph edge covered by the tree step a -> b."""
        if self.parent[b] == a:
            return int(self.edge_in[b])
        if self.parent[a] == b:
            return int(self.edge_in[a]) ^ 1
        raise ValueError(f"tree vertices {a} and {b} are not adjacent")

    def lca_depth(self, x: int, ys: np.ndarray) -> np.ndarray:
        dx = int(self.depth[x])
        # ancestors agree on a prefix of depths, so counting matches suffices
        same = self.anc[ys, : dx + 1] == self.anc[x, : dx + 1][None, :]
        return same.sum(axis=1) - 1

    def distance(self, a: int, b: int) -> int:
        ell = int(self.lca_depth(a, np.array([b]))[0])
        return int(self.depth[a] + self.depth[b] - 2 * ell)

    def canonical_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.canonical)


def tree_size(q: int, radius: int) -> int:
    return 1 + (q + 1) * (q ** radius - 1) // (q - 1)


def default_radius(g: RegularGraph, depth: int) -> int:
    return diameter(g) + depth + 3


def build_cover(g: RegularGraph, root: int = 0, radius: int | None = None,
                budget: int = VERTEX_BUDGET, lift_seed: int | None = None,
                lift_depth: int | None = None) -> TruncatedCover:
    """Unfold g from `root` to depth R and flag one lift per graph vertex.

    By default the first vertex of each fiber in breadth-first order is
    flagged. With lift_seed, a random member of each fiber at depth
    <= lift_depth is flagged instead (another fundamental domain).
    """
    if radius is None:
        radius = default_radius(g, 1)
    if radius < 1:
        raise ValueError("radius must be at least 1")
    n = tree_size(g.q, radius)
    if n > budget:
        raise DepthTooLarge(f"R = {radius} needs {n} tree vertices, budget {budget}")
    parent = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    proj = np.zeros(n, dtype=np.int64)
    edge_in = np.full(n, -1, dtype=np.int64)
    children = [[] for _ in range(n)]
    proj[0] = root
    count = 1
    frontier = [0]
    for d in range(1, radius + 1):
        nxt = []
        for t in frontier:
            edges = g.out_edges[proj[t]] if t == 0 else g.succ[edge_in[t]]
            for e in edges:
                parent[count] = t
                depth[count] = d
                proj[count] = g.tau[e]
                edge_in[count] = e
                children[t].append(count)
                nxt.append(count)
                count += 1
        frontier = nxt
    anc = np.full((n, radius + 1), -1, dtype=np.int64)
    anc[0, 0] = 0
    for t in range(1, n):
        anc[t] = anc[parent[t]]
        anc[t, depth[t]] = t
    canonical = np.zeros(n, dtype=bool)
    if lift_seed is None:
        seen = set()
        for t in range(n):
            if int(proj[t]) not in seen:
                seen.add(int(proj[t]))
                canonical[t] = True
    else:
        rng = np.random.default_rng(lift_seed)
        limit = diameter(g) if lift_depth is None else lift_depth
        for x in range(g.vertex_count):
            fiber = np.flatnonzero((proj == x) & (depth <= limit))
            if len(fiber):
                canonical[rng.choice(fiber)] = True
    return TruncatedCover(g, root, radius, parent, depth, proj, edge_in, children, canonical, anc)


def horocycle_bracket(cov: TruncatedCover, x: int, y: int) -> int:
    """<x, omega> for omega in the cylinder of y."""
    if cov.depth[y] <= cov.depth[x] + 1:
        raise CylinderTooShallow(f"cylinder depth {cov.depth[y]} vs d(o,x) = {cov.depth[x]}")
    return int(2 * cov.lca_depth(x, np.array([y]))[0] - cov.depth[x])


def _check_mu(sp: SpectralParameter):
    if sp.classification == EXCEPTIONAL:
        raise ExceptionalParameter(f"mu = {sp.mu}")


def _measures(cov: TruncatedCover, phi, mu: complex, ys: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    ys = np.asarray(ys)
    out = np.empty(len(ys), dtype=complex)
    top = ys == 0
    out[top] = phi[cov.root]
    y = ys[~top]
    d = cov.depth[y] - 1
    a = phi[cov.proj[y]]
    b = phi[cov.proj[cov.parent[y]]]
    out[~top] = mu ** (-d.astype(float)) * (a - b / mu) / (mu - 1 / mu)
    return out


def boundary_measure(cov: TruncatedCover, phi, sp: SpectralParameter, y: int) -> complex:
    """Mass of the cylinder of y under the boundary value of phi at sp."""
    _check_mu(sp)
    return complex(_measures(cov, phi, sp.mu, np.array([y]))[0])


def leaf_measures(cov: TruncatedCover, phi, sp: SpectralParameter) -> np.ndarray:
    _check_mu(sp)
    return _measures(cov, phi, sp.mu, cov.leaves)


def harmonic_measure(cov: TruncatedCover) -> np.ndarray:
    q = cov.graph.q
    return np.full(len(cov.leaves), 1.0 / ((q + 1) * q ** (cov.radius - 1)))


def _subtree_mass(cov: TruncatedCover, measure: np.ndarray) -> np.ndarray:
    mass = np.zeros(cov.size, dtype=complex)
    mass[cov.leaves] = measure
    for t in range(cov.size - 1, 0, -1):
        mass[cov.parent[t]] += mass[t]
    return mass


def poisson_forward(cov: TruncatedCover, measure: np.ndarray, sp: SpectralParameter,
                    x: int, _mass: np.ndarray | None = None) -> complex:
    """Sum over leaf cylinders of measure * q^{(1/2+is)<x, omega>}.

    Leaves are grouped by the depth j of their merge vertex with the path
    from the root to x; all leaves in a group share the bracket 2j - d(o,x).
    """
    dx = int(cov.depth[x])
    if dx >= cov.radius - 1:
        raise CylinderTooShallow(f"d(o,x) = {dx} needs R > {dx + 1}")
    mass = _subtree_mass(cov, measure) if _mass is None else _mass
    mu = sp.mu
    path = cov.anc[x, : dx + 1]
    total = mu ** dx * mass[x]
    for j in range(dx):
        total += mu ** (2 * j - dx) * (mass[path[j]] - mass[path[j + 1]])
    return complex(total)


def poisson_forward_direct(cov: TruncatedCover, measure: np.ndarray, sp: SpectralParameter,
                           x: int) -> complex:
    """Same sum, evaluated leaf by leaf."""
    br = 2 * cov.lca_depth(x, cov.leaves) - cov.depth[x]
    return complex(np.sum(measure * sp.mu ** br.astype(float)))


def recovery_prefactor(sp: SpectralParameter, printed: bool = False) -> complex:
    """Constant multiplying the limit in the measure-recovery formula.

    The summed Poisson transform behaves like mu(U) (M^2 - 1)/(M^2 - q) times
    M^n with M = q^{1/2+is}, so the recovering factor is
    (q^{2is} - 1)/(q^{2is} - q^{-1}). The printed form is its reciprocal and
    is kept only so reports can show the discrepancy.
    """
    z2 = sp.z ** 2
    corrected = (z2 - 1) / (z2 - 1 / sp.q)
    return complex(1 / corrected if printed else corrected)


def measure_limit(cov: TruncatedCover, measure: np.ndarray, sp: SpectralParameter,
                  cylinder: int, n: int, printed: bool = False) -> complex:
    """n-th approximant of the mass of a cylinder recovered from its Poisson transform."""
    if abs(sp.z) <= 1 + 1e-12:
        raise TemperedParameter(f"|z| = {abs(sp.z)} must exceed 1")
    if n < cov.depth[cylinder] or n >= cov.radius - 1:
        raise CylinderTooShallow(f"n = {n} outside [{cov.depth[cylinder]}, {cov.radius - 2}]")
    mass = _subtree_mass(cov, measure)
    xs = np.flatnonzero((cov.depth == n) & (cov.anc[:, cov.depth[cylinder]] == cylinder))
    total = sum(poisson_forward(cov, measure, sp, int(x), mass) for x in xs)
    return complex(recovery_prefactor(sp, printed) * sp.mu ** (-n) * total)


# phase-space functions on the tree

@dataclass(eq=False)
class TreeSymbol:
    cover: TruncatedCover
    length: int
    values: dict  # (x, endpoint) -> complex

    @property
    def support(self) -> list[int]:
        return sorted({x for x, _ in self.values})


def tree_paths(cov: TruncatedCover, x: int, length: int, avoid: int = -1) -> list[list[int]]:
    """NB vertex paths of the given length from x inside the truncation."""
    paths = [[x]]
    for _ in range(length):
        nxt = []
        for p in paths:
            back = p[-2] if len(p) > 1 else avoid
            for t in cov.neighbors(p[-1]):
                if t != back:
                    nxt.append(p + [t])
        paths = nxt
    return paths


def lift_symbol(cov: TruncatedCover, a: CylinderSymbol) -> TreeSymbol:
    """Xi * (a o projection) with Xi the canonical-lift indicator."""
    if a.depth == 0:
        a = refine(a)
    k = a.depth
    vals = {}
    for x in cov.canonical_vertices():
        if cov.depth[x] + k > cov.radius:
            raise DepthTooSmall(f"lift at depth {cov.depth[x]} plus symbol depth {k} exceeds R")
        for p in tree_paths(cov, int(x), k):
            edges = [cov.step_edge(p[i], p[i + 1]) for i in range(k)]
            vals[(int(x), p[-1])] = a.at(edges)
    return TreeSymbol(cov, k, vals)


def _endpoint_toward(cov: TruncatedCover, x: int, ys: np.ndarray, length: int,
                     lcad: np.ndarray) -> np.ndarray:
    dx = int(cov.depth[x])
    up = dx - lcad
    out = np.empty(len(ys), dtype=np.int64)
    climb = up >= length
    out[climb] = cov.anc[x, dx - length]
    down = ~climb
    out[down] = cov.anc[ys[down], lcad[down] + (length - up[down])]
    return out


def cover_pairing(cov: TruncatedCover, f: TreeSymbol, meas1: np.ndarray, mu1: complex,
                  meas2: np.ndarray, mu2: complex) -> complex:
    """Sum over ordered pairs of disjoint leaf cylinders (y1, y2) of
    meas1(y1) meas2(y2) times the weighted Radon transform of f.

    For each x in the support, the pairs whose geodesic passes through x are
    those with y1 and y2 in different components of the tree minus x, so the
    double sum is grouped by component at x.
    """
    leaves = cov.leaves
    total = 0j
    by_x = defaultdict(dict)
    for (x, t), val in f.values.items():
        by_x[x][t] = val
    for x in sorted(by_x):
        dx = int(cov.depth[x])
        if dx + f.length > cov.radius or dx >= cov.radius:
            raise DepthTooSmall(f"support vertex at depth {dx} with length {f.length} exceeds R")
        lcad = cov.lca_depth(x, leaves)
        ends = _endpoint_toward(cov, x, leaves, f.length, lcad)
        table = np.zeros(cov.size, dtype=complex)
        for t, val in by_x[x].items():
            table[t] = val
        br = (2 * lcad - dx).astype(float)
        a_part = table[ends] * mu1 ** br * meas1
        b_part = mu2 ** br * meas2
        comp = np.where(lcad == dx, cov.anc[leaves, min(dx + 1, cov.radius)], -1) + 1
        n_c = cov.size + 1
        a_c = np.bincount(comp, a_part.real, n_c) + 1j * np.bincount(comp, a_part.imag, n_c)
        b_c = np.bincount(comp, b_part.real, n_c) + 1j * np.bincount(comp, b_part.imag, n_c)
        total += np.sum(a_c * (b_c.sum() - b_c))
    return complex(total)


def radon_transform(cov: TruncatedCover, f: TreeSymbol, sp: SpectralParameter,
                    sp_b: SpectralParameter, y1: int, y2: int) -> complex:
    """Weighted Radon transform of f on the geodesic between two cylinders.

    sp_b carries the backward eigenvalue q^{1/2 - i conj(s')}.
    """
    a1 = cov.anc[y1, : cov.depth[y1] + 1]
    a2 = cov.anc[y2, : cov.depth[y2] + 1]
    if y1 in a2 or y2 in a1:
        raise CylindersOverlap(f"cylinders of {y1} and {y2} are nested")
    ell = int(cov.lca_depth(y1, np.array([y2]))[0])
    path = list(a1[ell:][::-1]) + list(a2[ell + 1:])  # y1 ... lca ... y2
    total = 0j
    for i, x in enumerate(path):
        x = int(x)
        if not any((x, t) in f.values for t in _candidates(f, x)):
            continue
        if i < f.length:
            raise DepthTooSmall("support too close to the first cylinder")
        t = int(path[i - f.length])
        val = f.values.get((x, t), 0j)
        b1 = 2 * int(cov.lca_depth(x, np.array([y1]))[0]) - int(cov.depth[x])
        b2 = 2 * int(cov.lca_depth(x, np.array([y2]))[0]) - int(cov.depth[x])
        if cov.depth[x] >= min(cov.depth[y1], cov.depth[y2]):
            raise CylinderTooShallow("support vertex as deep as a cylinder")
        total += val * sp.mu ** b1 * sp_b.mu ** b2
    return complex(total)


def _candidates(f: TreeSymbol, x: int):
    key = "_by_x"
    cache = f.__dict__.setdefault(key, None)
    if cache is None:
        cache = defaultdict(list)
        for (a, t) in f.values:
            cache[a].append(t)
        f.__dict__[key] = cache
    return cache.get(x, [])


def _check_radius(cov: TruncatedCover, need: int):
    if cov.radius < need:
        raise DepthTooSmall(f"radius {cov.radius} < required {need}")


def context_measures(cov: TruncatedCover, ctx: DistributionContext):
    """Leaf masses of the boundary values of phi at s and of conj(phi') at -conj(s')."""
    m1 = _measures(cov, ctx.phi, ctx.mu, cov.leaves)
    m2 = _measures(cov, np.conj(ctx.phi2), ctx.mu_b, cov.leaves)
    return m1, m2


def classical_ps(cov: TruncatedCover, a: CylinderSymbol, ctx: DistributionContext) -> complex:
    """Patterson-Sullivan distribution from boundary values and the Radon transform."""
    k = max(a.depth, 1)
    lift_max = int(cov.depth[cov.canonical].max())
    _check_radius(cov, lift_max + k + 1)
    f = lift_symbol(cov, a)
    m1, m2 = context_measures(cov, ctx)
    return cover_pairing(cov, f, m1, ctx.mu, m2, ctx.mu_b)


def classical_ps_pairs(cov: TruncatedCover, a: CylinderSymbol, ctx: DistributionContext) -> complex:
    """Same as classical_ps by an explicit loop over cylinder pairs (slow)."""
    k = max(a.depth, 1)
    _check_radius(cov, int(cov.depth[cov.canonical].max()) + k + 1)
    f = lift_symbol(cov, a)
    m1, m2 = context_measures(cov, ctx)
    sp = SpectralParameter.from_z(ctx.sp.z, ctx.graph.q)
    sp_b = SpectralParameter.from_z(ctx.mu_b / math.sqrt(ctx.graph.q), ctx.graph.q)
    leaves = cov.leaves
    total = 0j
    for i, y1 in enumerate(leaves):
        for j, y2 in enumerate(leaves):
            if i != j:
                total += m1[i] * m2[j] * radon_transform(cov, f, sp, sp_b, int(y1), int(y2))
    return complex(total)


def intertwiner(cov: TruncatedCover, f: TreeSymbol, mu_b: complex, n: int) -> TreeSymbol:
    """Horocycle average of f over spheres of radius 2m <= 2n, weight mu_b^{-2m}.

    A horocycle point h at distance 2m from x (for the direction omega) is
    reached by going m steps from x toward omega and m steps back down a
    different branch. Inverting that: from h, walk m steps toward omega to
    x_m, continue toward omega, and descend m steps from x_m on a branch
    that avoids both h's branch and the continuation.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return f
    length = max(f.length, n + 1)
    reach = max((int(cov.depth[x]) for x in f.support), default=0) + 2 * n + length
    if reach > cov.radius:
        raise SupportTooWide(f"support needs radius {reach}, have {cov.radius}")
    out = defaultdict(complex)
    by_h = defaultdict(dict)
    for (h, t), val in f.values.items():
        by_h[h][t] = val
    for h, table in by_h.items():
        for m in range(n + 1):
            weight = mu_b ** (-2 * m)
            for up in tree_paths(cov, h, m):
                xm = up[-1]
                prev = up[-2] if m >= 1 else -1
                for cont in tree_paths(cov, xm, length - m, avoid=prev):
                    hpath = up + cont[1:]
                    val = table.get(hpath[f.length], 0j)
                    if val == 0:
                        continue
                    first = cont[1]
                    if m == 0:
                        out[(h, cont[-1])] += weight * val
                        continue
                    for u1 in cov.neighbors(xm):
                        if u1 in (prev, first):
                            continue
                        for down in tree_paths(cov, u1, m - 1, avoid=xm):
                            out[(down[-1], cont[-1])] += weight * val
    return TreeSymbol(cov, length, dict(out))


def horocycle_sphere(cov: TruncatedCover, x: int, toward: int, m: int) -> list[int]:
    """Tree vertices h at distance 2m from x on the horocycle of x toward a leaf."""
    if m == 0:
        return [x]
    lcad = cov.lca_depth(x, np.array([toward]))
    path = [x]
    for i in range(m + 1):
        path.append(int(_endpoint_toward(cov, x, np.array([toward]), i + 1, lcad)[0]))
    xm, prev, nxt = path[m], path[m - 1], path[m + 1]
    out = []
    for u1 in cov.neighbors(xm):
        if u1 in (prev, nxt):
            continue
        for down in tree_paths(cov, u1, m - 1, avoid=xm):
            out.append(down[-1])
    return out


def off_diagonal_cover(cov: TruncatedCover, a: CylinderSymbol, ctx: DistributionContext,
                       n: int) -> complex:
    """Pairing of the boundary values with the intertwined lift of a."""
    f = intertwiner(cov, lift_symbol(cov, a), ctx.mu_b, n)
    m1, m2 = context_measures(cov, ctx)
    return cover_pairing(cov, f, m1, ctx.mu, m2, ctx.mu_b)


def op_cover(cov: TruncatedCover, a: CylinderSymbol, phi, sp: SpectralParameter, x: int) -> complex:
    """Op(a)phi at a tree vertex from the boundary value based at the root."""
    _check_mu(sp)
    if a.depth == 0:
        a = refine(a)
    k = a.depth
    dx = int(cov.depth[x])
    if dx + k > cov.radius or dx >= cov.radius:
        raise DepthTooSmall(f"vertex depth {dx} plus symbol depth {k} exceeds R")
    leaves = cov.leaves
    lcad = cov.lca_depth(x, leaves)
    meas = _measures(cov, phi, sp.mu, leaves)
    total = 0j
    for p in tree_paths(cov, x, k):
        edges = [cov.step_edge(p[i], p[i + 1]) for i in range(k)]
        total += a.at(edges) * cylinder_mass_from(cov, x, p[-1], meas, sp.mu, lcad)
    return complex(total)


def cylinder_mass_from(cov: TruncatedCover, x: int, t: int, meas: np.ndarray, mu: complex,
                       lcad: np.ndarray | None = None) -> complex:
    """Mass of the cylinder Omega(x, t) under q^{(1/2+is)<x, .>} times the root-based measure."""
    leaves = cov.leaves
    if lcad is None:
        lcad = cov.lca_depth(x, leaves)
    dist = cov.distance(x, t)
    ends = _endpoint_toward(cov, x, leaves, dist, lcad)
    sel = ends == t
    br = (2 * lcad[sel] - cov.depth[x]).astype(float)
    return complex(np.sum(meas[sel] * mu ** br))
