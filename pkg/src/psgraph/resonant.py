"""Resonant and co-resonant states of the non-backtracking transfer operator.

A forward state is a right eigenvector of the Hashimoto matrix B, where
B[e, e'] = 1 when e feeds e' (tau(e) = iota(e') and e' != reverse(e)).
A backward state is a right eigenvector of B^T. Both are stored as their
depth-1 cylinder values; longer cylinders follow from the mu-recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ExceptionalParameter, NotAnEigenfunction
from .graph_core import RegularGraph
from .spectral import EXCEPTIONAL, SpectralParameter, chi_of, laplace_matrix

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True, eq=False)
class ResonantState:
    graph: RegularGraph
    orientation: str
    mu: complex
    v: np.ndarray

    def eigen_residual(self) -> float:
        g = self.graph
        if self.orientation == FORWARD:
            lhs = self.v[g.succ].sum(axis=1)
        else:
            lhs = self.v[g.pred].sum(axis=1)
        return float(np.max(np.abs(lhs - self.mu * self.v)))

    def pushforward(self) -> np.ndarray:
        g = self.graph
        if self.orientation == FORWARD:
            return self.v[g.out_edges].sum(axis=1)
        return self.v[g.in_edges].sum(axis=1)


def _check_inputs(g: RegularGraph, phi, sp: SpectralParameter, tol: float) -> np.ndarray:
    if sp.classification == EXCEPTIONAL:
        raise ExceptionalParameter(f"mu = {sp.mu} lies in {{+-1, +-q}}")
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (g.vertex_count,):
        raise ValueError(f"phi has shape {phi.shape}, expected ({g.vertex_count},)")
    chi = chi_of(sp.z, g.q)
    res = np.max(np.abs(laplace_matrix(g) @ phi - chi * phi))
    if res > tol * max(1.0, float(np.max(np.abs(phi)))):
        raise NotAnEigenfunction(f"Laplace residual {res:.3e} for chi = {chi}")
    return phi


def resonant_state(g: RegularGraph, phi, sp: SpectralParameter, tol: float = 1e-8) -> ResonantState:
    """Forward state whose cylinder masses at each vertex sum to phi."""
    phi = _check_inputs(g, phi, sp, tol)
    mu = sp.mu
    v = (phi[g.tau] - phi[g.iota] / mu) / (mu - 1 / mu)
    return ResonantState(g, FORWARD, mu, v)


def coresonant_state(g: RegularGraph, phi_bar, sp: SpectralParameter, tol: float = 1e-8) -> ResonantState:
    """Backward state built from phi_bar; sp carries the backward eigenvalue."""
    phi_bar = _check_inputs(g, phi_bar, sp, tol)
    mu = sp.mu
    v = (phi_bar[g.iota] - phi_bar[g.tau] / mu) / (mu - 1 / mu)
    return ResonantState(g, BACKWARD, mu, v)


def cylinder_value(state: ResonantState, edges: Sequence[int]) -> complex:
    """Value on the cylinder of chains through the path `edges`.

    Forward paths start at the base vertex. Backward paths are given in
    chain order, ending at the base vertex, so the far end is edges[0].
    """
    k = len(edges)
    if k == 0:
        raise ValueError("cylinder paths need at least one edge")
    far = edges[-1] if state.orientation == FORWARD else edges[0]
    return complex(state.mu ** (-(k - 1)) * state.v[far])


def hashimoto_matrix(g: RegularGraph) -> np.ndarray:
    n = g.edge_count
    b = np.zeros((n, n))
    b[np.repeat(np.arange(n), g.q), g.succ.ravel()] = 1.0
    return b


def _nullspace(a: np.ndarray, rank_tol: float) -> np.ndarray:
    """Kernel basis by Gaussian elimination with partial pivoting (rows of result)."""
    a = np.array(a, dtype=complex)
    nrows, ncols = a.shape
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    pivots = []
    row = 0
    for col in range(ncols):
        if row == nrows:
            break
        i = row + int(np.argmax(np.abs(a[row:, col])))
        piv = abs(a[i, col])
        if piv <= rank_tol * scale:
            a[row:, col] = 0.0
            continue
        scale = max(scale, piv)
        if i != row:
            a[[row, i]] = a[[i, row]]
        a[row] /= a[row, col]
        others = np.arange(nrows) != row
        a[others] -= np.outer(a[others, col], a[row])
        pivots.append(col)
        row += 1
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=complex)
    for j, f in enumerate(free):
        basis[j, f] = 1.0
        for r, pc in enumerate(pivots):
            basis[j, pc] = -a[r, f]
    return basis


def resonance_kernel(g: RegularGraph, mu: complex, transpose: bool = False,
                     rank_tol: float = 1e-8) -> np.ndarray:
    """Basis (rows) of ker(B - mu I), or of ker(B^T - mu I) when transposed."""
    b = hashimoto_matrix(g)
    if transpose:
        b = b.T
    return _nullspace(b - mu * np.eye(g.edge_count), rank_tol)


def jordan_probe(g: RegularGraph, mu: complex, rank_tol: float = 1e-8) -> tuple[int, int]:
    """Dimensions of ker(B - mu) and ker((B - mu)^2)."""
    a = hashimoto_matrix(g) - mu * np.eye(g.edge_count)
    return len(_nullspace(a, rank_tol)), len(_nullspace(a @ a, rank_tol))


def geodesic_pairing(u: ResonantState, w: ResonantState) -> complex:
    """Tensor of a forward and a backward state evaluated on the constant 1."""
    g = u.graph
    out = g.out_edges
    uu = u.v[out]
    ww = w.v[out ^ 1]
    return complex(np.sum(uu.sum(axis=1) * ww.sum(axis=1) - (uu * ww).sum(axis=1)))


def pairing_scale(u: ResonantState, w: ResonantState) -> float:
    """Sum of the magnitudes of the terms entering geodesic_pairing."""
    g = u.graph
    out = g.out_edges
    uu = np.abs(u.v[out])
    ww = np.abs(w.v[out ^ 1])
    return float(np.sum(uu.sum(axis=1) * ww.sum(axis=1) - (uu * ww).sum(axis=1)))
