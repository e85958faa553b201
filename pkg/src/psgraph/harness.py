"""Verification suites, run configuration and reports."""

from __future__ import annotations

import csv
import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cover_oracle import (
    build_cover,
    classical_ps,
    default_radius,
    harmonic_measure,
    leaf_measures,
    measure_limit,
    off_diagonal_cover,
    op_cover,
    poisson_forward,
    tree_size,
    VERTEX_BUDGET,
)
from .distributions import (
    c_function,
    make_context,
    off_diagonal_sum,
    op_apply,
    pairing_closed_form,
    patterson_sullivan,
    ruelle_projector,
    ruelle_via_ps,
    wigner,
    wigner_ps_sides,
)
from .errors import JordanBlock, SingularGram
from .graph_core import RegularGraph, diameter, load_graph_file, named_graph, random_regular
from .resonant import ResonantState, geodesic_pairing, pairing_scale
from .spectral import EigenSpace, SpectralParameter, eigh_decompose, spectrum_report
from .symbols import symbol_constant, symbol_random

SUITES = ("pairing", "ps_modern", "ruelle", "wigner_ps", "intertwiner", "cfun",
          "poisson_roundtrip", "measure_limit", "basepoint")


# largest cover used by the intertwiner suite
INTERTWINER_BUDGET = 20000


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


@dataclass
class RunConfig:
    graph: str = "petersen"
    suites: list = field(default_factory=lambda: list(SUITES))
    depth: int = 2
    n: int = 3
    symbols: int = 3
    tol: float = 1e-8
    eigen_tol: float = 1e-10
    zero_tol: float = 1e-12
    group_tol: float = 1e-8
    branch: str = "principal"
    pairs: str = "all"
    radius: int | None = None
    seed: int = 0
    jobs: int = 1
    out: str | None = None
    exclude: list = field(default_factory=list)
    inject_fault: bool = False

    def validate(self) -> "RunConfig":
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suites {unknown}; choose from {', '.join(SUITES)}")
        for name in ("tol", "eigen_tol", "zero_tol", "group_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.depth <= 3:
            raise ConfigError("depth must be in 0..3")
        if not 0 <= self.n <= 3:
            raise ConfigError("n must be in 0..3")
        if self.symbols < 0:
            raise ConfigError("symbols must be non-negative")
        if self.branch not in ("principal", "both"):
            raise ConfigError("branch must be 'principal' or 'both'")
        if self.pairs not in ("all", "diagonal"):
            raise ConfigError("pairs must be 'all' or 'diagonal'")
        if self.radius is not None and self.radius < 1:
            raise ConfigError("radius must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        bad = sorted(set(data) - names)
        if bad:
            raise ConfigError(f"unknown config keys {bad}")
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise ConfigError(f"bad config value: {exc}") from exc


def load_graph(source: str) -> RegularGraph:
    """Named graph, edge-list/JSON path, or random:v,d,seed."""
    if source.startswith("random:"):
        try:
            v, d, seed = (int(t) for t in source[len("random:"):].split(","))
        except ValueError as exc:
            raise ConfigError(f"bad random graph source {source!r}; expected random:v,d,seed") from exc
        return random_regular(v, d, seed)
    path = Path(source)
    if path.exists():
        return load_graph_file(path)
    return named_graph(source)


# records

def _cjson(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def make_record(identity: str, graph: str, lam, branch: str, n_or_m, lhs, rhs, tol: float,
                kind: str = "relative", scale: float = 1.0, **detail) -> dict:
    """kind: relative (|l-r| / max(|l|,|r|)), zero (|l-r| / scale) or abs."""
    err = abs(complex(lhs) - complex(rhs))
    if kind == "relative":
        denom = max(abs(lhs), abs(rhs))
        rel = err / denom if denom > 0 else 0.0
    elif kind == "zero":
        rel = err / scale if scale > 0 else err
    else:
        rel = err
    rec = {
        "identity": identity,
        "graph": graph,
        "lambda": lam,
        "branch": branch,
        "n_or_m": n_or_m,
        "lhs": _cjson(lhs),
        "rhs": _cjson(rhs),
        "abs_residual": err,
        "rel_residual": rel,
        "tolerance": tol,
        "kind": kind,
        "pass": bool(rel <= tol),
    }
    if detail:
        rec["detail"] = detail
    return rec


@dataclass
class VerificationReport:
    command: str
    graph: str
    config: dict
    records: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    vacuous: bool = False

    def summary(self) -> dict:
        by_id = {}
        for r in self.records:
            s = by_id.setdefault(r["identity"], {"total": 0, "passed": 0, "worst_rel": 0.0})
            s["total"] += 1
            s["passed"] += int(r["pass"])
            s["worst_rel"] = max(s["worst_rel"], r["rel_residual"])
        passed = sum(int(r["pass"]) for r in self.records)
        return {"total": len(self.records), "passed": passed,
                "failed": len(self.records) - passed, "by_identity": by_id}

    @property
    def all_pass(self) -> bool:
        return all(r["pass"] for r in self.records)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "graph": self.graph,
            "config": self.config,
            "records": self.records,
            "summary": self.summary(),
            "warnings": self.warnings,
            "notes": self.notes,
            "vacuous": self.vacuous,
            "environment": environment_stamp(self.config.get("seed", 0)),
        }


def environment_stamp(seed: int) -> dict:
    return {"version": __version__, "seed": seed, "python": platform.python_version(),
            "numpy": np.__version__}


# eigen data and contexts

@dataclass(frozen=True, eq=False)
class EigenItem:
    space: EigenSpace
    col: int

    def __eq__(self, other) -> bool:
        return isinstance(other, EigenItem) and self.space is other.space and self.col == other.col

    def __hash__(self) -> int:
        return hash((id(self.space), self.col))

    @property
    def phi(self) -> np.ndarray:
        return self.space.basis[:, self.col]


def admissible_items(g: RegularGraph, group_tol: float, exclude=()) -> list[EigenItem]:
    """Basis vectors of admissible eigenspaces, minus excluded eigenvalues."""
    keep = [sp for sp in eigh_decompose(g, group_tol) if sp.parameter.admissible
            and not any(abs(sp.lam - x) <= group_tol for x in exclude)]
    return [EigenItem(sp, j) for sp in keep for j in range(sp.multiplicity)]


def branch_parameter(sp: SpectralParameter, branch: str) -> SpectralParameter:
    return sp if branch == "principal" else sp.conjugate_branch()


def build_context(g: RegularGraph, a: EigenItem, b: EigenItem, branch: str):
    sp = branch_parameter(a.space.parameter, branch)
    if a == b:
        return make_context(g, a.phi, sp)
    sp2 = branch_parameter(b.space.parameter, branch).backward_partner()
    return make_context(g, a.phi, sp, b.phi, sp2)


def item_pairs(items: list[EigenItem], policy: str) -> list[tuple[EigenItem, EigenItem]]:
    if policy == "diagonal":
        return [(a, a) for a in items]
    return [(a, b) for a in items for b in items]


def cover_pairs(items: list[EigenItem], policy: str) -> list[tuple[EigenItem, EigenItem]]:
    """Diagonal pairs plus one cyclic off-diagonal neighbour per item.

    Cover-side oracles cost O(support x leaves) per context, so they do not
    run over every ordered pair.
    """
    pairs = [(a, a) for a in items]
    if policy == "all" and len(items) > 1:
        pairs += [(a, items[(i + 1) % len(items)]) for i, a in enumerate(items)]
    return pairs


def suite_symbols(g: RegularGraph, cfg: RunConfig, max_depth: int | None = None):
    top = cfg.depth if max_depth is None else min(cfg.depth, max_depth)
    out = []
    for i in range(cfg.symbols):
        seed = cfg.seed * 1000 + i
        out.append((seed, symbol_random(g, i % (top + 1), seed)))
    return out


def _corrupt(ctx):
    v = ctx.u.v.copy()
    v[0] += 0.5 * np.max(np.abs(v))
    bad = ResonantState(ctx.graph, ctx.u.orientation, ctx.u.mu, v)
    object.__setattr__(ctx, "u", bad)
    return ctx


def _pair_detail(a: EigenItem, b: EigenItem) -> dict:
    return {"phi": [round(a.space.lam, 12), a.col], "phi2": [round(b.space.lam, 12), b.col]}


# suites: each returns a list of thunks producing lists of records

def _suite_pairing(g, name, cfg, items, branch):
    def work(a, b):
        ctx = build_context(g, a, b, branch)
        if cfg.inject_fault:
            ctx = _corrupt(ctx)
        ps1 = geodesic_pairing(ctx.u, ctx.w)
        lam = a.space.lam
        det = _pair_detail(a, b)
        recs = [make_record("ps_one_consistency", name, lam, branch, None,
                            patterson_sullivan(symbol_constant(g, 0, 1), ctx), ps1,
                            cfg.zero_tol, "zero", pairing_scale(ctx.u, ctx.w), **det)]
        if a == b:
            m2 = ctx.mu ** 2
            inner = complex(np.sum(ctx.phi * np.conj(ctx.phi2)))
            recs.append(make_record("pairing_formula", name, lam, branch, None,
                                    (m2 - 1) * ps1, (m2 - g.q) * inner, cfg.tol / 10, **det))
        else:
            recs.append(make_record("pairing_offdiagonal", name, lam, branch, None, ps1, 0j,
                                    cfg.zero_tol * 1e3, "zero", pairing_scale(ctx.u, ctx.w), **det))
        return recs
    return [lambda a=a, b=b: work(a, b) for a, b in item_pairs(items, cfg.pairs)]


def _suite_ps_modern(g, name, cfg, items, branch):
    radius = cfg.radius or default_radius(g, max(cfg.depth, 1))
    cov = build_cover(g, 0, radius)
    syms = suite_symbols(g, cfg)

    def work(a, b):
        ctx = build_context(g, a, b, branch)
        return [make_record("classical_ps", name, a.space.lam, branch, None,
                            classical_ps(cov, sym, ctx), patterson_sullivan(sym, ctx), cfg.tol,
                            symbol_seed=seed, depth=sym.depth, **_pair_detail(a, b))
                for seed, sym in syms]
    return [lambda a=a, b=b: work(a, b) for a, b in cover_pairs(items, cfg.pairs)]


def _suite_ruelle(g, name, cfg, items, branch, report):
    spaces = []
    for it in items:
        if not any(it.space is s for s in spaces):
            spaces.append(it.space)
    syms = suite_symbols(g, cfg)

    def work(space):
        lam = space.lam
        sp = branch_parameter(space.parameter, branch)
        try:
            proj = ruelle_projector(g, lam, sp=sp)
        except (JordanBlock, SingularGram) as exc:
            report.warnings.append(f"ruelle lambda={lam}: {type(exc).__name__}: {exc}")
            return []
        recs = [make_record("ruelle_trace_one", name, lam, branch, None,
                            proj(symbol_constant(g, 0, 1)), space.multiplicity, cfg.tol)]
        for seed, f in syms:
            t = proj(f)
            recs.append(make_record("ruelle_vs_ps", name, lam, branch, None, t,
                                    ruelle_via_ps(f, g, space.basis, sp), cfg.tol,
                                    symbol_seed=seed, depth=f.depth))
            recs.append(make_record("ruelle_invariance", name, lam, branch, None,
                                    proj.transferred(f), sp.mu * t, cfg.tol,
                                    symbol_seed=seed, depth=f.depth))
        return recs
    return [lambda s=s: work(s) for s in spaces]


def _suite_wigner_ps(g, name, cfg, items, branch):
    syms = suite_symbols(g, cfg)

    def work(a, b):
        ctx = build_context(g, a, b, branch)
        recs = []
        for seed, sym in syms:
            for n in range(cfg.n + 1):
                lhs, rhs = wigner_ps_sides(sym, ctx, n)
                if n == 0:
                    recs.append(make_record("wigner_ps_n0", name, a.space.lam, branch, 0, lhs, 0j,
                                            cfg.zero_tol, "abs", symbol_seed=seed,
                                            **_pair_detail(a, b)))
                    recs.append(make_record("wigner_ps_n0", name, a.space.lam, branch, 0, rhs, 0j,
                                            cfg.zero_tol, "abs", symbol_seed=seed,
                                            **_pair_detail(a, b)))
                else:
                    recs.append(make_record("wigner_ps", name, a.space.lam, branch, n, lhs, rhs,
                                            cfg.tol, symbol_seed=seed, depth=sym.depth,
                                            **_pair_detail(a, b)))
        return recs
    return [lambda a=a, b=b: work(a, b) for a, b in item_pairs(items, cfg.pairs)]


def _suite_intertwiner(g, name, cfg, items, branch, report):
    lift = diameter(g)

    def need(n):
        return cfg.radius or lift + 2 * n + (n + 1) + 1

    n_max = min(cfg.n, 2)
    while n_max > 0 and tree_size(g.q, need(n_max)) > INTERTWINER_BUDGET:
        n_max -= 1
    if n_max < min(cfg.n, 2):
        report.notes.append(f"intertwiner: n capped at {n_max} by the cover budget")
    radius = need(n_max)
    cov = build_cover(g, 0, radius)
    syms = suite_symbols(g, cfg, max_depth=1)
    pairs = cover_pairs(items, cfg.pairs)

    def work(a, b):
        ctx = build_context(g, a, b, branch)
        recs = []
        for seed, sym in syms:
            for n in range(n_max + 1):
                recs.append(make_record("offdiag_intertwiner", name, a.space.lam, branch, n,
                                        off_diagonal_cover(cov, sym, ctx, n),
                                        off_diagonal_sum(sym, ctx, n), cfg.tol,
                                        symbol_seed=seed, **_pair_detail(a, b)))
        return recs
    return [lambda a=a, b=b: work(a, b) for a, b in pairs]


def _suite_cfun(g, name, cfg, items, branch):
    one = symbol_constant(g, 0, 1.0)

    def work(a):
        ctx = build_context(g, a, a, branch)
        sp = ctx.sp
        c = c_function(sp)
        w1 = wigner(one, ctx)
        z2 = sp.z ** 2
        return [
            make_record("basic_example", name, a.space.lam, branch, None, w1,
                        patterson_sullivan(one.scale(c * (1 + 1 / g.q)), ctx), cfg.eigen_tol),
            make_record("wigner_norm", name, a.space.lam, branch, None, w1,
                        np.sum(np.abs(a.phi) ** 2), cfg.eigen_tol),
            make_record("cfun_closed_form", name, a.space.lam, branch, None, c * (1 + 1 / g.q),
                        (g.q * z2 - 1) / (g.q * (z2 - 1)), cfg.eigen_tol),
            make_record("ps_one_closed_form", name, a.space.lam, branch, None,
                        patterson_sullivan(one, ctx), pairing_closed_form(sp), cfg.eigen_tol),
        ]
    return [lambda a=a: work(a) for a in items]


def _suite_poisson(g, name, cfg, items, branch):
    radius = cfg.radius or diameter(g) + 3
    cov = build_cover(g, 0, radius)

    def work(a):
        sp = branch_parameter(a.space.parameter, branch)
        meas = leaf_measures(cov, a.phi, sp)
        worst, at = -1.0, 0
        for x in range(cov.size):
            if cov.depth[x] > radius - 2:
                break
            err = abs(poisson_forward(cov, meas, sp, x) - a.phi[cov.proj[x]])
            if err > worst:
                worst, at = err, x
        return [make_record("poisson_roundtrip", name, a.space.lam, branch, None,
                            poisson_forward(cov, meas, sp, at), a.phi[cov.proj[at]],
                            cfg.eigen_tol, "abs", vertex=int(at), **_pair_detail(a, a))]
    return [lambda a=a: work(a) for a in items]


def _suite_measure_limit(g, name, cfg, report):
    q = g.q
    radius = 14
    while tree_size(q, radius) > VERTEX_BUDGET // 4:
        radius -= 1
    n_top = radius - 2
    sp = SpectralParameter.from_z(3.0, q)
    cov = build_cover(g, 0, radius)
    nu = harmonic_measure(cov)
    target = 1 / (q + 1)

    def work():
        errs = []
        recs = []
        for n in range(4, n_top + 1):
            val = measure_limit(cov, nu, sp, 1, n)
            errs.append(abs(val - target))
            printed = measure_limit(cov, nu, sp, 1, n, printed=True)
            report.notes.append(f"measure_limit n={n}: corrected {val.real:.12f}, "
                                f"printed-constant {printed.real:.12f}, target {target:.12f}")
        recs.append(make_record("measure_limit", name, None, "z=3", n_top, val, target, 1e-3, "abs"))
        monotone = all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
        recs.append(make_record("measure_limit_monotone", name, None, "z=3", n_top,
                                float(monotone), 1.0, 0.0, "abs", errors=errs))
        return recs
    return [work]


def _suite_basepoint(g, name, cfg, items, branch):
    radius = cfg.radius or diameter(g) + 4
    cov = build_cover(g, 0, radius)
    syms = suite_symbols(g, cfg, max_depth=1)
    xs = [x for x in range(cov.size) if cov.depth[x] <= radius - 2][:40]

    def work(a):
        sp = branch_parameter(a.space.parameter, branch)
        recs = []
        for seed, sym in syms:
            dyn = op_apply(sym, a.phi, sp)
            worst, at = -1.0, 0
            for x in xs:
                err = abs(op_cover(cov, sym, a.phi, sp, x) - dyn[cov.proj[x]])
                if err > worst:
                    worst, at = err, x
            recs.append(make_record("basepoint", name, a.space.lam, branch, None,
                                    op_cover(cov, sym, a.phi, sp, at), dyn[cov.proj[at]],
                                    cfg.tol / 10, "abs", symbol_seed=seed, vertex=int(at)))
        return recs
    return [lambda a=a: work(a) for a in items]


def _collect(thunks, jobs: int) -> list:
    if jobs > 1 and len(thunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda t: t(), thunks))
    else:
        parts = [t() for t in thunks]
    return [r for part in parts for r in part]


def run_verify(cfg: RunConfig) -> VerificationReport:
    cfg.validate()
    g = load_graph(cfg.graph)
    report = VerificationReport("verify", cfg.graph, asdict(cfg))
    items = admissible_items(g, cfg.group_tol, cfg.exclude)
    branches = ["principal", "conjugate"] if cfg.branch == "both" else ["principal"]
    needs_items = [s for s in cfg.suites if s != "measure_limit"]
    if needs_items and not items:
        report.vacuous = True
        report.warnings.append("no admissible parameters")
    for branch in branches:
        for suite in cfg.suites:
            if suite == "measure_limit":
                if branch == "principal":
                    report.records += _collect(_suite_measure_limit(g, cfg.graph, cfg, report), 1)
                continue
            if not items:
                continue
            if suite == "ruelle":
                thunks = _suite_ruelle(g, cfg.graph, cfg, items, branch, report)
            elif suite == "intertwiner":
                thunks = _suite_intertwiner(g, cfg.graph, cfg, items, branch, report)
            else:
                maker = {
                    "pairing": _suite_pairing,
                    "ps_modern": _suite_ps_modern,
                    "wigner_ps": _suite_wigner_ps,
                    "cfun": _suite_cfun,
                    "poisson_roundtrip": _suite_poisson,
                    "basepoint": _suite_basepoint,
                }[suite]
                thunks = maker(g, cfg.graph, cfg, items, branch)
            report.records += _collect(thunks, cfg.jobs)
    if cfg.branch == "both":
        _branch_warnings(report)
    return report


def _branch_warnings(report: VerificationReport):
    worst = {}
    for r in report.records:
        key = (r["identity"], r["branch"])
        worst[key] = max(worst.get(key, 0.0), r["rel_residual"])
    for (ident, br), val in sorted(worst.items()):
        if br != "principal":
            continue
        other = worst.get((ident, "conjugate"))
        if other is None:
            continue
        lo, hi = sorted((max(val, 1e-15), max(other, 1e-15)))
        if hi > 10 * lo:
            report.warnings.append(
                f"{ident}: branch-dependent residuals (principal {val:.2e}, conjugate {other:.2e})")


def run_spectrum(cfg: RunConfig) -> dict:
    g = load_graph(cfg.graph)
    return {"command": "spectrum", "graph": cfg.graph, "v": g.vertex_count, "q": g.q,
            "eigenspaces": spectrum_report(g, cfg.group_tol),
            "environment": environment_stamp(cfg.seed)}


def c_function_table(q: int, samples: int = 64) -> list[dict]:
    rows = []
    top = math.pi / math.log(q)
    for j in range(samples):
        s = (j + 0.5) / samples * top
        sp = SpectralParameter.from_z(complex(math.cos(s * math.log(q)), math.sin(s * math.log(q))), q)
        c = c_function(sp)
        rows.append({"source": "grid", "s": s, "lambda": float(np.real(sp.lam)),
                     "z_re": sp.z.real, "z_im": sp.z.imag, "c_re": c.real, "c_im": c.imag})
    return rows


def run_analyze(cfg: RunConfig) -> dict:
    """Write plot-ready CSV tables; returns the paths written."""
    cfg.validate()
    g = load_graph(cfg.graph)
    out = Path(cfg.out or "analysis")
    out.mkdir(parents=True, exist_ok=True)
    spaces = [s for s in eigh_decompose(g, cfg.group_tol) if s.parameter.classification == "tempered"]
    syms = suite_symbols(g, cfg)
    dist_path = out / "distributions.csv"
    with dist_path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["graph", "lambda", "multiplicity", "symbol_seed", "depth",
                     "ps_re", "ps_im", "wigner_re", "wigner_im"])
        for space in spaces:
            ctx = make_context(g, space.basis[:, 0], space.parameter)
            for seed, sym in syms:
                ps = patterson_sullivan(sym, ctx)
                w = wigner(sym, ctx)
                wr.writerow([cfg.graph, repr(space.lam), space.multiplicity, seed, sym.depth,
                             repr(ps.real), repr(ps.imag), repr(w.real), repr(w.imag)])
    cfun_path = out / "cfunction.csv"
    rows = c_function_table(g.q)
    for space in spaces:
        c = c_function(space.parameter)
        z = space.parameter.z
        rows.append({"source": "graph", "s": "", "lambda": space.lam, "z_re": z.real,
                     "z_im": z.imag, "c_re": c.real, "c_im": c.imag})
    with cfun_path.open("w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return {"distributions": str(dist_path), "cfunction": str(cfun_path)}


def write_json(obj, path: str | None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")
    return text
