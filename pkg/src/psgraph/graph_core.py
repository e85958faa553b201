"""Finite (q+1)-regular graphs with an indexed directed-edge structure.

Directed edges come in opposite pairs: edge 2i runs u -> v with u < v and
edge 2i+1 is its reverse, with the undirected edges sorted lexicographically.
Non-backtracking paths of length k are enumerated in lexicographic order of
their edge-index tuples, which makes the position of a path computable in
mixed radix (first edge, then the rank among the q successors at each step).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    NotConnected,
    NotRegular,
    MalformedInput,
    NotSimple,
    ParityError,
    QTooSmall,
    RetryExhausted,
    UnknownName,
)


@dataclass(frozen=True)
class NBPath:
    base: int
    edges: tuple[int, ...] = ()

    @property
    def length(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class RegularGraph:
    vertex_count: int
    q: int
    iota: np.ndarray
    tau: np.ndarray
    out_edges: np.ndarray
    in_edges: np.ndarray
    succ: np.ndarray
    pred: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def edge_count(self) -> int:
        """Number of directed edges (2E)."""
        return len(self.iota)

    @property
    def degree(self) -> int:
        return self.q + 1

    @property
    def reverse(self) -> np.ndarray:
        return np.arange(self.edge_count) ^ 1

    def undirected_edges(self) -> list[tuple[int, int]]:
        return [(int(self.iota[e]), int(self.tau[e])) for e in range(0, self.edge_count, 2)]

    def edge_between(self, u: int, v: int) -> int:
        """Index of the directed edge u -> v, or -1."""
        return int(self._lookup().get((u, v), -1))

    def _lookup(self) -> dict:
        if "lookup" not in self._cache:
            self._cache["lookup"] = {
                (int(a), int(b)): e for e, (a, b) in enumerate(zip(self.iota, self.tau))
            }
        return self._cache["lookup"]

    def succ_rank(self) -> np.ndarray:
        """rank[e, e'] = position of e' among the successors of e, else -1."""
        if "succ_rank" not in self._cache:
            n = self.edge_count
            rank = -np.ones((n, n), dtype=np.int64)
            for j in range(self.q):
                rank[np.arange(n), self.succ[:, j]] = j
            self._cache["succ_rank"] = rank
        return self._cache["succ_rank"]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count))
        a[self.iota, self.tau] = 1.0
        return a


def build_graph(edge_list: Iterable[Sequence[int]], expected_q: int | None = None,
                vertex_count: int | None = None) -> RegularGraph:
    """Validate an undirected edge list and materialize the directed structure."""
    pairs = [(int(u), int(v)) for u, v in edge_list]
    if vertex_count is None:
        vertex_count = 1 + max((max(p) for p in pairs), default=-1)
    if vertex_count <= 0:
        raise NotRegular("empty graph")
    seen = set()
    for u, v in pairs:
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise NotSimple(f"vertex out of range in edge ({u}, {v})")
        if u == v:
            raise NotSimple(f"loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise NotSimple(f"repeated edge {key}")
        seen.add(key)
    deg = np.zeros(vertex_count, dtype=np.int64)
    for u, v in seen:
        deg[u] += 1
        deg[v] += 1
    d = int(deg[0])
    if np.any(deg != d):
        raise NotRegular(f"degrees range over {sorted(set(deg.tolist()))}")
    q = d - 1
    if q < 2:
        raise QTooSmall(f"degree {d} gives q = {q}")
    if expected_q is not None and q != expected_q:
        raise NotRegular(f"expected q = {expected_q}, found q = {q}")

    und = sorted(seen)
    iota = np.empty(2 * len(und), dtype=np.int64)
    tau = np.empty_like(iota)
    for i, (u, v) in enumerate(und):
        iota[2 * i], tau[2 * i] = u, v
        iota[2 * i + 1], tau[2 * i + 1] = v, u

    # connectivity
    nbrs = [[] for _ in range(vertex_count)]
    for u, v in und:
        nbrs[u].append(v)
        nbrs[v].append(u)
    reached = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in nbrs[x]:
            if y not in reached:
                reached.add(y)
                queue.append(y)
    if len(reached) != vertex_count:
        raise NotConnected(f"{vertex_count - len(reached)} vertices unreachable from 0")

    n = len(iota)
    out_edges = np.empty((vertex_count, d), dtype=np.int64)
    in_edges = np.empty((vertex_count, d), dtype=np.int64)
    for x in range(vertex_count):
        out_edges[x] = np.flatnonzero(iota == x)
        in_edges[x] = np.flatnonzero(tau == x)
    rev = np.arange(n) ^ 1
    succ = np.empty((n, q), dtype=np.int64)
    pred = np.empty((n, q), dtype=np.int64)
    for e in range(n):
        succ[e] = [f for f in out_edges[tau[e]] if f != rev[e]]
        pred[e] = [f for f in in_edges[iota[e]] if f != rev[e]]
    return RegularGraph(vertex_count, q, iota, tau, out_edges, in_edges, succ, pred)


def _petersen_edges():
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((i, i + 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
    return edges


def _complete(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _cube_edges():
    return [(i, i ^ (1 << b)) for i in range(8) for b in range(3) if i < i ^ (1 << b)]


def _heawood_edges():
    edges = [(i, (i + 1) % 14) for i in range(14)]
    edges += [(i, (i + 5) % 14) for i in range(0, 14, 2)]
    return edges


_NAMED = {
    "k4": lambda: _complete(4),
    "k5": lambda: _complete(5),
    "petersen": _petersen_edges,
    "cube": _cube_edges,
    "k33": lambda: [(i, j) for i in range(3) for j in range(3, 6)],
    "heawood": _heawood_edges,
}
_ALIASES = {"complete_bipartite_k33": "k33", "k_3_3": "k33", "q3": "cube"}


def graph_names() -> list[str]:
    return sorted(_NAMED)


def named_graph(name: str) -> RegularGraph:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in _NAMED:
        raise UnknownName(f"unknown graph {name!r}; known: {', '.join(graph_names())}")
    return build_graph(_NAMED[key]())


def random_regular(v: int, degree: int, seed: int, max_tries: int = 10000) -> RegularGraph:
    """Pairing-model sample, resampled until simple and connected."""
    if (v * degree) % 2:
        raise ParityError(f"v*degree = {v * degree} is odd")
    if degree < 3:
        raise QTooSmall(f"degree {degree} < 3")
    if v <= degree:
        raise NotSimple(f"no simple {degree}-regular graph on {v} vertices")
    rng = np.random.default_rng(seed)
    points = np.repeat(np.arange(v), degree)
    for _ in range(max_tries):
        perm = rng.permutation(points)
        pairs = perm.reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        keys = np.sort(pairs, axis=1)
        if len(np.unique(keys, axis=0)) != len(keys):
            continue
        try:
            return build_graph([tuple(p) for p in keys.tolist()], vertex_count=v)
        except NotConnected:
            continue
    raise RetryExhausted(f"no simple connected sample after {max_tries} tries")


def nb_path_array(g: RegularGraph, k: int) -> np.ndarray:
    """All non-backtracking paths of length k as an (N, k) edge-index array."""
    key = ("paths", k)
    if key not in g._cache:
        if k == 0:
            arr = np.zeros((g.vertex_count, 0), dtype=np.int64)
        else:
            arr = np.arange(g.edge_count, dtype=np.int64)[:, None]
            for _ in range(k - 1):
                nxt = g.succ[arr[:, -1]]
                arr = np.concatenate(
                    [np.repeat(arr, g.q, axis=0), nxt.reshape(-1, 1)], axis=1)
        arr.setflags(write=False)
        g._cache[key] = arr
    return g._cache[key]


def path_bases(g: RegularGraph, k: int) -> np.ndarray:
    if k == 0:
        return np.arange(g.vertex_count)
    return g.iota[nb_path_array(g, k)[:, 0]]


def path_index(g: RegularGraph, edges: np.ndarray) -> np.ndarray:
    """Positions of NB paths (rows of edge indices) in the enumeration order."""
    edges = np.asarray(edges, dtype=np.int64)
    if edges.ndim == 1:
        edges = edges[None, :]
    k = edges.shape[1]
    if k == 0:
        raise ValueError("depth-0 paths are indexed by their base vertex")
    idx = edges[:, 0].copy()
    rank = g.succ_rank()
    for j in range(1, k):
        r = rank[edges[:, j - 1], edges[:, j]]
        if np.any(r < 0):
            raise ValueError("not a non-backtracking path")
        idx = idx * g.q + r
    return idx


def path_count(g: RegularGraph, k: int) -> int:
    return g.vertex_count if k == 0 else g.edge_count * g.q ** (k - 1)


def nb_paths(g: RegularGraph, base: int | None, k: int) -> list[NBPath]:
    """Enumerate NB paths of length k from `base` (all bases when None)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        bases = range(g.vertex_count) if base is None else [base]
        return [NBPath(int(x)) for x in bases]
    arr = nb_path_array(g, k)
    if base is not None:
        arr = arr[g.iota[arr[:, 0]] == base]
    return [NBPath(int(g.iota[row[0]]), tuple(int(e) for e in row)) for row in arr]


def is_nb_path(g: RegularGraph, edges: Sequence[int]) -> bool:
    for a, b in zip(edges, edges[1:]):
        if g.tau[a] != g.iota[b] or b == (a ^ 1):
            return False
    return True


def diameter(g: RegularGraph) -> int:
    if "diameter" not in g._cache:
        best = 0
        for s in range(g.vertex_count):
            dist = {s: 0}
            queue = deque([s])
            while queue:
                x = queue.popleft()
                for e in g.out_edges[x]:
                    y = int(g.tau[e])
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        queue.append(y)
            best = max(best, max(dist.values()))
        g._cache["diameter"] = best
    return g._cache["diameter"]


# serialization

def to_json(g: RegularGraph) -> dict:
    return {"v": g.vertex_count, "q": g.q, "edges": [list(p) for p in g.undirected_edges()]}


def from_json(data: dict) -> RegularGraph:
    try:
        edges = [(int(u), int(v)) for u, v in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"graph JSON needs an 'edges' list of pairs: {exc}") from exc
    return build_graph(edges, expected_q=data.get("q"), vertex_count=data.get("v"))


def format_edge_list(g: RegularGraph) -> str:
    lines = [f"# v={g.vertex_count} q={g.q}"]
    lines += [f"{u} {v}" for u, v in g.undirected_edges()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> RegularGraph:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            u, v = (int(t) for t in parts)
        except ValueError as exc:
            raise MalformedInput(f"line {lineno}: expected 'u v', got {raw!r}") from exc
        pairs.append((u, v))
    return build_graph(pairs)


def load_graph_file(path: str | Path) -> RegularGraph:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return from_json(json.loads(text))
    return parse_edge_list(text)
