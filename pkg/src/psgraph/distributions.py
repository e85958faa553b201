"""Wigner, Patterson-Sullivan and invariant Ruelle distributions on symbols.

All evaluations are exact finite sums over non-backtracking paths. A context
pairs a forward state u (from phi at z) with a backward state w built from
conj(phi') at the parameter -conj(s'), whose own z is conj(z'). In the
diagonal case z' = conj(z), so both states share the eigenvalue mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandEdge, ExceptionalParameter, JordanBlock, SingularGram
from .graph_core import RegularGraph, nb_path_array
from .resonant import (
    ResonantState,
    coresonant_state,
    jordan_probe,
    resonance_kernel,
    resonant_state,
)
from .spectral import BAND_EDGE, EXCEPTIONAL, SpectralParameter, spectral_parameter
from .symbols import (
    CylinderSymbol,
    branch_sum,
    refine,
    symbol_constant,
    transfer_pow,
)


@dataclass(frozen=True, eq=False)
class DistributionContext:
    graph: RegularGraph
    phi: np.ndarray
    sp: SpectralParameter
    phi2: np.ndarray
    sp2: SpectralParameter
    u: ResonantState
    w: ResonantState

    @property
    def mu(self) -> complex:
        return self.u.mu

    @property
    def mu_b(self) -> complex:
        """Backward eigenvalue q^{1/2 - i conj(s')}."""
        return self.w.mu

    @property
    def diagonal(self) -> bool:
        return self.phi2 is self.phi and self.sp2 == self.sp.backward_partner()


def make_context(g: RegularGraph, phi, sp: SpectralParameter, phi2=None,
                 sp2: SpectralParameter | None = None) -> DistributionContext:
    """Context for (phi, s) and (phi', s'); defaults to the diagonal case."""
    phi = np.asarray(phi)
    if phi2 is None:
        phi2 = phi
        sp2 = sp.backward_partner() if sp2 is None else sp2
    elif sp2 is None:
        raise ValueError("sp2 is required when phi2 is given")
    phi2 = np.asarray(phi2)
    u = resonant_state(g, phi, sp)
    w = coresonant_state(g, np.conj(phi2), SpectralParameter.from_z(np.conj(sp2.z), g.q))
    return DistributionContext(g, phi, sp, phi2, sp2, u, w)


def _cylinder_weights(a: CylinderSymbol, u_v: np.ndarray, mu: complex):
    g = a.graph
    paths = nb_path_array(g, a.depth)
    return paths, a.values * mu ** (-(a.depth - 1)) * u_v[paths[:, -1]]


def op_apply_state(a: CylinderSymbol, u: ResonantState) -> np.ndarray:
    """Op(a)phi for the eigenfunction phi underlying the forward state u."""
    g = a.graph
    if a.depth == 0:
        return a.values * u.pushforward()
    paths, wts = _cylinder_weights(a, u.v, u.mu)
    base = g.iota[paths[:, 0]]
    out = np.bincount(base, wts.real, g.vertex_count) + 1j * np.bincount(base, wts.imag, g.vertex_count)
    return out


def op_apply(a: CylinderSymbol, phi, sp: SpectralParameter) -> np.ndarray:
    return op_apply_state(a, resonant_state(a.graph, phi, sp))


def wigner(a: CylinderSymbol, ctx: DistributionContext) -> complex:
    return complex(np.sum(op_apply_state(a, ctx.u) * np.conj(ctx.phi2)))


def tensor_eval(a: CylinderSymbol, u_v: np.ndarray, mu: complex, w_v: np.ndarray) -> complex:
    """(u tensor w)(a) for a symbol depending on the forward chain only.

    The backward factor at the first edge e sums w over all edges feeding e.
    """
    if a.depth == 0:
        a = refine(a)
    g = a.graph
    paths, wts = _cylinder_weights(a, u_v, mu)
    back = w_v[g.pred].sum(axis=1)
    return complex(np.sum(wts * back[paths[:, 0]]))


def patterson_sullivan(a: CylinderSymbol, ctx: DistributionContext) -> complex:
    return tensor_eval(a, ctx.u.v, ctx.mu, ctx.w.v)


def tensor_eval_transferred(f: CylinderSymbol, u_v: np.ndarray, mu: complex,
                            w_v: np.ndarray) -> complex:
    """(u tensor w) applied to the transfer of f restricted to two-sided chains.

    The test function lives on pairs (forward chain p, backward chain ending
    in edge b) with no matching condition. It equals f evaluated on the chain
    (e0, p) where e0 runs from tau(b) to iota(p_1), whenever b, e0, p_1 are
    consecutive non-backtracking edges, and vanishes otherwise.
    """
    g = f.graph
    k = f.depth
    plen = max(k - 1, 1)
    fwd = nb_path_array(g, plen)
    n_e = g.edge_count
    lookup = -np.ones((g.vertex_count, g.vertex_count), dtype=np.int64)
    lookup[g.iota, g.tau] = np.arange(n_e)
    b = np.arange(n_e)
    e0 = lookup[g.tau[b][None, :], g.iota[fwd[:, 0]][:, None]]  # (paths, edges)
    ok = (e0 >= 0) & (e0 != (b[None, :] ^ 1)) & (fwd[:, :1] != (e0 ^ 1))
    pi, bi = np.nonzero(ok)
    e0v = e0[pi, bi]
    if k == 0:
        fvals = f.values[g.iota[e0v]]
    else:
        from .symbols import evaluate_on_paths
        chains = np.concatenate([e0v[:, None], fwd[pi, : k - 1]], axis=1)
        fvals = evaluate_on_paths(f, chains)
    cyl = mu ** (-(plen - 1)) * u_v[fwd[pi, -1]]
    return complex(np.sum(fvals * cyl * w_v[bi]))


def c_function(sp: SpectralParameter, q: int | None = None) -> complex:
    q = sp.q if q is None else q
    z = sp.z
    if abs(z - 1) < 1e-12 or abs(z + 1) < 1e-12:
        raise BandEdge(f"z = {z}")
    mu = math.sqrt(q) * z
    return complex(math.sqrt(q) / (q + 1) * (mu - 1 / mu) / (z - 1 / z))


def pairing_closed_form(sp: SpectralParameter) -> complex:
    """(q^{1+2is} - q) / (q^{1+2is} - 1), the diagonal value of PS(1)."""
    m2 = sp.mu ** 2
    return complex((m2 - sp.q) / (m2 - 1))


# Ruelle distribution

@dataclass(frozen=True, eq=False)
class RuelleProjector:
    graph: RegularGraph
    sp: SpectralParameter
    forward: np.ndarray  # rows: right kernel of B - mu
    backward: np.ndarray  # rows: biorthogonal co-resonant tables

    @property
    def rank(self) -> int:
        return len(self.forward)

    def __call__(self, f: CylinderSymbol) -> complex:
        mu = self.sp.mu
        return complex(sum(tensor_eval(f, u, mu, w) for u, w in zip(self.forward, self.backward)))

    def transferred(self, f: CylinderSymbol) -> complex:
        mu = self.sp.mu
        return complex(sum(tensor_eval_transferred(f, u, mu, w)
                           for u, w in zip(self.forward, self.backward)))


def ruelle_projector(g: RegularGraph, lam: float, rank_tol: float = 1e-8,
                     gram_tol: float = 1e-8, sp: SpectralParameter | None = None) -> RuelleProjector:
    """Biorthogonal spectral projector of the transfer operator at lam.

    Built from kernels of B - mu and B^T - conj(mu) only; no Laplace
    eigenfunctions enter. The backward kernel is conjugated so that its
    vectors are co-resonant states with eigenvalue mu. Pass sp to select
    the other root z of the same lam.
    """
    if sp is None:
        sp = spectral_parameter(lam, g.q)
    if sp.classification == EXCEPTIONAL:
        raise ExceptionalParameter(f"lambda = {lam}")
    if sp.classification == BAND_EDGE:
        raise BandEdge(f"lambda = {lam}")
    d1, d2 = jordan_probe(g, sp.mu, rank_tol)
    if d1 != d2:
        raise JordanBlock(f"dim ker(B-mu) = {d1}, dim ker((B-mu)^2) = {d2}")
    fwd = resonance_kernel(g, sp.mu, rank_tol=rank_tol)
    bwd = np.conj(resonance_kernel(g, np.conj(sp.mu), transpose=True, rank_tol=rank_tol))
    if len(fwd) != len(bwd) or len(fwd) == 0:
        raise SingularGram(f"kernel dimensions {len(fwd)} and {len(bwd)}")
    one = symbol_constant(g, 0, 1.0)
    gram = np.array([[tensor_eval(one, u, sp.mu, w) for w in bwd] for u in fwd])
    sv = np.linalg.svd(gram, compute_uv=False)
    if sv[-1] <= gram_tol * sv[0]:
        raise SingularGram(f"Gram condition {sv[0] / sv[-1]:.3e}")
    # rows of bwd_bi satisfy pairing(fwd_i, bwd_bi_k) = delta_ik
    x = np.linalg.solve(gram, np.eye(len(fwd)))
    bwd_bi = x.T @ bwd
    return RuelleProjector(g, sp, fwd, bwd_bi)


def ruelle_distribution(f: CylinderSymbol, g: RegularGraph, lam: float) -> complex:
    return ruelle_projector(g, lam)(f)


def ruelle_via_ps(f: CylinderSymbol, g: RegularGraph, eigvecs: np.ndarray,
                  sp: SpectralParameter) -> complex:
    """((q^{1+2is}-1)/(q^{1+2is}-q)) times the sum of diagonal PS values."""
    total = 0j
    for j in range(eigvecs.shape[1]):
        total += patterson_sullivan(f, make_context(g, eigvecs[:, j], sp))
    return total / pairing_closed_form(sp)


# Wigner and Patterson-Sullivan relation

def near_diagonal_weight(ctx: DistributionContext, n: int) -> complex:
    """q^{-n(1 + is - i conj(s'))} = (mu mu_b)^{-n}."""
    return complex((ctx.mu * ctx.mu_b) ** (-n))


def branch_weight(ctx: DistributionContext, m: int) -> complex:
    """q^{-2m(1/2 - i conj(s'))} = mu_b^{-2m}."""
    return complex(ctx.mu_b ** (-2 * m))


def off_diagonal_sum(a: CylinderSymbol, ctx: DistributionContext, n: int) -> complex:
    return complex(sum(branch_weight(ctx, m) * patterson_sullivan(branch_sum(a, m), ctx)
                       for m in range(n + 1)))


def wigner_ps_sides(a: CylinderSymbol, ctx: DistributionContext, n: int) -> tuple[complex, complex]:
    """Both sides of W(a - c_n L^n a) = PS(sum_m w_m H_m a - c_n L^n a)."""
    cn = near_diagonal_weight(ctx, n)
    an = transfer_pow(a, n).scale(cn)
    lhs = wigner(a - an, ctx)
    acc = a
    for m in range(1, n + 1):
        acc = acc + branch_sum(a, m).scale(branch_weight(ctx, m))
    rhs = patterson_sullivan(acc - an, ctx)
    return lhs, rhs
