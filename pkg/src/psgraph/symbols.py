"""Cylinder symbols: functions of a vertex and its first k forward edges.

Values are stored in the enumeration order of graph_core.nb_path_array, so
refining a depth-k (k >= 1) symbol is a plain repeat by q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import RegularGraph, nb_path_array, path_count, path_index


@dataclass(frozen=True, eq=False)
class CylinderSymbol:
    graph: RegularGraph
    depth: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (path_count(self.graph, self.depth),):
            raise ValueError(
                f"depth {self.depth} needs {path_count(self.graph, self.depth)} values, "
                f"got {self.values.shape}")

    def __add__(self, other: "CylinderSymbol") -> "CylinderSymbol":
        a, b = align(self, other)
        return CylinderSymbol(a.graph, a.depth, a.values + b.values)

    def __sub__(self, other: "CylinderSymbol") -> "CylinderSymbol":
        a, b = align(self, other)
        return CylinderSymbol(a.graph, a.depth, a.values - b.values)

    def scale(self, c: complex) -> "CylinderSymbol":
        return CylinderSymbol(self.graph, self.depth, c * self.values)

    def at(self, edges) -> complex:
        """Value on a path; depth-0 symbols take the base vertex as an int."""
        if self.depth == 0:
            return complex(self.values[int(edges)])
        return complex(self.values[path_index(self.graph, np.asarray(edges)[: self.depth])[0]])


def symbol_constant(g: RegularGraph, k: int, c: complex) -> CylinderSymbol:
    return CylinderSymbol(g, k, np.full(path_count(g, k), complex(c)))


def symbol_random(g: RegularGraph, k: int, seed: int) -> CylinderSymbol:
    rng = np.random.default_rng(seed)
    n = path_count(g, k)
    vals = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    return CylinderSymbol(g, k, vals)


def symbol_from_function(g: RegularGraph, k: int, fn) -> CylinderSymbol:
    """Tabulate fn(base, edges_tuple) over all paths of length k."""
    if k == 0:
        vals = [fn(x, ()) for x in range(g.vertex_count)]
    else:
        vals = [fn(int(g.iota[row[0]]), tuple(int(e) for e in row)) for row in nb_path_array(g, k)]
    return CylinderSymbol(g, k, np.asarray(vals, dtype=complex))


def refine(a: CylinderSymbol, to_depth: int | None = None) -> CylinderSymbol:
    target = a.depth + 1 if to_depth is None else to_depth
    if target < a.depth:
        raise ValueError("cannot coarsen a symbol")
    g = a.graph
    vals, k = a.values, a.depth
    while k < target:
        if k == 0:
            vals = vals[g.iota[nb_path_array(g, 1)[:, 0]]]
        else:
            vals = np.repeat(vals, g.q)
        k += 1
    return CylinderSymbol(g, k, vals)


def align(a: CylinderSymbol, b: CylinderSymbol) -> tuple[CylinderSymbol, CylinderSymbol]:
    if a.graph is not b.graph:
        raise ValueError("symbols live on different graphs")
    k = max(a.depth, b.depth)
    return refine(a, k), refine(b, k)


def evaluate_on_paths(a: CylinderSymbol, paths: np.ndarray) -> np.ndarray:
    """Values of a on rows of edge indices (each row at least depth long)."""
    g = a.graph
    if a.depth == 0:
        return a.values[g.iota[paths[:, 0]]]
    return a.values[path_index(g, paths[:, : a.depth])]


def _transfer_once(a: CylinderSymbol) -> CylinderSymbol:
    g = a.graph
    out_depth = max(a.depth - 1, 1)
    paths = nb_path_array(g, out_depth)
    total = np.zeros(len(paths), dtype=complex)
    for j in range(g.q):
        e0 = g.pred[paths[:, 0], j]
        ext = np.concatenate([e0[:, None], paths], axis=1)
        total += evaluate_on_paths(a, ext)
    return CylinderSymbol(g, out_depth, total)


def transfer_pow(a: CylinderSymbol, n: int) -> CylinderSymbol:
    """n-th power of the transfer operator acting on symbols."""
    if n < 0:
        raise ValueError("n must be non-negative")
    for _ in range(n):
        a = _transfer_once(a)
    return a


def branch_sum(a: CylinderSymbol, m: int) -> CylinderSymbol:
    """H_m(a): sum over the NB branches that rejoin the path after m steps.

    For a path with vertices x_1, x_2, ..., sums a over the sequences
    (y_1, ..., y_m, x_{m+1}, x_{m+2}, ...) that are non-backtracking with
    y_m != x_m. There are q^{m-1}(q-1) of them for m >= 1.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return a
    g = a.graph
    out_depth = max(m + 1, a.depth)
    paths = nb_path_array(g, out_depth)
    p_m = paths[:, m - 1]
    p_next = paths[:, m]
    # last branch edge g_m: into tau(p_m), not p_m itself, not reverse(p_{m+1})
    cand = g.in_edges[g.tau[p_m]]
    keep = (cand != p_m[:, None]) & (cand != (p_next ^ 1)[:, None])
    last = cand[keep].reshape(len(paths), g.q - 1)
    total = np.zeros(len(paths), dtype=complex)
    tail = paths[:, m:]
    for j in range(g.q - 1):
        branches = last[:, j][:, None]
        for _ in range(m - 1):
            branches = np.concatenate(
                [g.pred[branches[:, 0]].reshape(-1, 1), np.repeat(branches, g.q, axis=0)], axis=1)
        reps = len(branches) // len(paths)
        full = np.concatenate([branches, np.repeat(tail, reps, axis=0)], axis=1)
        vals = evaluate_on_paths(a, full)
        total += vals.reshape(len(paths), reps).sum(axis=1)
    return CylinderSymbol(g, out_depth, total)


def to_json(a: CylinderSymbol) -> dict:
    g = a.graph
    entries = []
    if a.depth == 0:
        keys = [[int(x)] for x in range(g.vertex_count)]
    else:
        keys = nb_path_array(g, a.depth).tolist()
    for key, val in zip(keys, a.values):
        entries.append({"path": key, "re": float(val.real), "im": float(val.imag)})
    return {"depth": a.depth, "entries": entries}


def from_json(g: RegularGraph, data: dict) -> CylinderSymbol:
    k = int(data["depth"])
    vals = np.zeros(path_count(g, k), dtype=complex)
    for ent in data["entries"]:
        if k == 0:
            i = int(ent["path"][0])
        else:
            i = int(path_index(g, np.asarray(ent["path"]))[0])
        vals[i] = ent["re"] + 1j * ent["im"]
    return CylinderSymbol(g, k, vals)
