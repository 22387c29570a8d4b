"""Command-line interface: ``tropoclust <distances|median|cluster|analyze|gen>``.

Every command writes into ``--out``.  JSON reports carry a ``schema`` field
and sorted keys; CSV files use ``.`` decimals and LF line endings, so equal
inputs and seeds give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .clustering import ClusterOptions, kmeanspp
from .fermat_weber import SQRT_EPS, as_sites, corrected_tropical_median, tropical_median
from .numeric_lp import EXACT, FLOAT, ValidationError, get_field
from .phylo import (
    PairIndexMap,
    clade_support,
    coarse_type,
    cophenetic,
    depth_stats,
    emit_newick,
    min_eps,
    mrca_depth,
    parse_coarse_type,
    random_equidistant_tree,
    read_newick_file,
    resolution_gap,
    tree_from_ultrametric,
)
from .phylo.tree import format_scalar
from .trop_core import asym_dist

log = logging.getLogger("tropoclust")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    out: str = "."
    k: int = 2
    runs: int = 1
    seed: int = 0
    arithmetic: str = FLOAT
    vectors: bool = False
    clades: List[str] = field(default_factory=list)
    pairs: List[str] = field(default_factory=list)
    N: int = 4
    count: int = 0
    omega: float = 0.15
    Omega: float = 1.0
    coarse_types: List[str] = field(default_factory=list)
    tol: Optional[float] = None
    workers: int = 1


@dataclass
class SiteSet:
    """Loaded input: one row per tree (or raw point)."""

    ids: List[str]
    S: np.ndarray
    pairs: Optional[PairIndexMap]  # None for raw points

    @property
    def tree_mode(self) -> bool:
        return self.pairs is not None


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------


def _require_input(cfg: RunConfig) -> str:
    if not cfg.input:
        raise ValidationError(f"{cfg.command} needs --input")
    return cfg.input


def load_newick_sites(path: str, arithmetic: str) -> SiteSet:
    trees = read_newick_file(path, arithmetic)
    if not trees:
        raise ValidationError(f"{path}: no trees")
    vecs, pairs = [], None
    for lineno, tree in enumerate(trees, 1):
        try:
            u = cophenetic(tree)
        except ValidationError as exc:
            raise ValidationError(f"{path}: tree {lineno}: {exc}") from None
        if pairs is None:
            pairs = u.pairs
        elif u.pairs != pairs:
            raise ValidationError(f"{path}: tree {lineno}: taxa differ from the first tree")
        vecs.append(u.values)
    ids = [f"t{i + 1}" for i in range(len(trees))]
    return SiteSet(ids, as_sites(vecs, get_field(arithmetic)), pairs)


def load_vector_sites(path: str, arithmetic: str) -> SiteSet:
    """CSV with an ``id`` column; columns named ``a:b`` make the rows tree vectors."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "id":
        raise ValidationError(f"{path}:1: first column must be 'id'")
    cols = header[1:]
    if not cols:
        raise ValidationError(f"{path}:1: no coordinate columns")
    fld = get_field(arithmetic)
    ids, data = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        ids.append(row[0].strip())
        try:
            data.append([fld.scalar(c.strip()) for c in row[1:]])
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
    if not data:
        raise ValidationError(f"{path}: no data rows")
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate ids")
    S = as_sites(data, fld)
    pairs = None
    if all(":" in c for c in cols):
        split = [tuple(t.strip() for t in c.split(":")) for c in cols]
        taxa = sorted({t for p in split for t in p})
        pairs = PairIndexMap(taxa)
        if len(cols) != pairs.n or len(set(map(frozenset, split))) != pairs.n:
            raise ValidationError(f"{path}:1: pair columns must cover every taxon pair once")
        order = [split.index(p) if p in split else split.index(p[::-1]) for p in pairs.pairs]
        S = S[:, order]
        for s in range(S.shape[0]):
            if min_eps(S[s], pairs) > (0 if fld.exact else SQRT_EPS):
                raise ValidationError(f"{path}:{s + 2}: row is not an ultrametric")
    return SiteSet(ids, S, pairs)


def load_sites(cfg: RunConfig) -> SiteSet:
    path = _require_input(cfg)
    if cfg.vectors:
        return load_vector_sites(path, cfg.arithmetic)
    return load_newick_sites(path, cfg.arithmetic)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _scalar(v):
    """JSON/CSV form of a scalar: text for rationals, a float otherwise."""
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return format_scalar(v)


def _text(v) -> str:
    v = _scalar(v)
    return repr(v) if isinstance(v, float) else str(v)


def _vector(x) -> list:
    return [_scalar(v) for v in x]


def _path(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out, name)


def write_json(path: str, kind: str, payload: dict) -> None:
    doc = {"schema": f"tropoclust.{kind}/{SCHEMA_VERSION}", **payload}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _consensus_newick(vec, pairs: PairIndexMap) -> str:
    return emit_newick(tree_from_ultrametric(vec, pairs))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_distances(cfg: RunConfig) -> int:
    sites = load_sites(cfg)
    if len(sites.ids) < 2:
        raise ValidationError("distances need at least two inputs")
    S = sites.S
    rows = [[sites.ids[i]] + [_text(asym_dist(S[i], S[j])) for j in range(len(S))] for i in range(len(S))]
    write_csv(_path(cfg, "distances.csv"), ["id"] + sites.ids, rows)
    return EXIT_OK


def _median_result(sites: SiteSet, tol):
    if len(sites.ids) == 1:
        return None
    if sites.tree_mode:
        return corrected_tropical_median(sites.S, True, tol)
    return tropical_median(sites.S, tol)


def cmd_median(cfg: RunConfig) -> int:
    sites = load_sites(cfg)
    res = _median_result(sites, cfg.tol)
    if res is None:
        median, report = sites.S[0], {
            "fw_value": 0,
            "vertex_count": 1,
            "vertices": [_vector(sites.S[0])],
            "dimension": 0,
            "corrected": False,
            "degenerate_drop": None,
        }
    else:
        median = res.median
        report = {
            "fw_value": _scalar(res.fw_value),
            "vertex_count": len(res.vertices),
            "vertices": [_vector(v) for v in res.vertices],
            "dimension": res.dimension,
            "corrected": res.corrected,
            "degenerate_drop": None if res.degenerate_drop is None else sites.ids[res.degenerate_drop],
        }
    report.update(
        arithmetic=cfg.arithmetic,
        sites=len(sites.ids),
        median=_vector(median),
        tree_mode=sites.tree_mode,
    )
    if sites.tree_mode:
        nwk = _consensus_newick(median, sites.pairs)
        report["newick"] = nwk
        write_lines(_path(cfg, "median.nwk"), [nwk])
    write_json(_path(cfg, "median.json"), "median", report)
    return EXIT_OK


def cmd_cluster(cfg: RunConfig) -> int:
    sites = load_sites(cfg)
    m = len(sites.ids)
    if not 1 <= cfg.k <= m:
        raise ValidationError(f"need 1 <= k <= {m}, got k={cfg.k}")
    if cfg.runs < 1:
        raise ValidationError("--runs must be positive")
    opts = ClusterOptions(
        k=cfg.k,
        seed=cfg.seed,
        tree_mode=sites.tree_mode,
        restarts=cfg.runs,
        workers=cfg.workers,
        tol=cfg.tol,
    )
    summary = kmeanspp(sites.S, opts)
    best = summary.best
    clusters = best.clusters()
    lonely = [sites.ids[c[0]] for c in clusters if len(c) == 1]

    consensus = []
    if sites.tree_mode:
        consensus = [_consensus_newick(c, sites.pairs) for c in best.centroids]
        write_lines(_path(cfg, "consensus.nwk"), consensus)

    by_run = summary.in_run_order()
    write_csv(
        _path(cfg, "losses.csv"),
        ["run", "seed", "loss", "iterations", "converged"],
        [[i, r.seed, _text(r.loss), r.iterations, int(r.converged)] for i, r in enumerate(by_run)],
    )
    write_csv(
        _path(cfg, "cluster_sizes.csv"),
        ["cluster", "size"],
        [[j, len(c)] for j, c in enumerate(clusters)],
    )
    report = {
        "arithmetic": cfg.arithmetic,
        "k": cfg.k,
        "runs": cfg.runs,
        "seed": cfg.seed,
        "best_run": summary.run_ids[0],
        "loss": _scalar(best.loss),
        "iterations": best.iterations,
        "converged": best.converged,
        "assignment": {sites.ids[s]: int(best.assignment[s]) for s in range(m)},
        "cluster_sizes": best.sizes(),
        "centroids": [_vector(c) for c in best.centroids],
        "lonely_centroids": lonely,
        "consensus": consensus,
        "tree_mode": sites.tree_mode,
        "nonconverged_runs": sum(1 for r in summary.runs if not r.converged),
    }
    write_json(_path(cfg, "cluster.json"), "cluster", report)
    if not best.converged:
        log.error("best run did not converge")
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_analyze(cfg: RunConfig) -> int:
    sites = load_sites(cfg)
    if not sites.tree_mode:
        raise ValidationError("analyze needs trees or pair-labelled vectors")
    pairs = sites.pairs
    vecs = [sites.S[s] for s in range(len(sites.ids))]
    census = Counter("|".join(",".join(b) for b in coarse_type(v, pairs)) for v in vecs)
    report = {
        "trees": len(vecs),
        "taxa": pairs.taxa,
        "coarse_type_count": len(census),
        "coarse_types": dict(sorted(census.items())),
    }
    supports = {}
    for text in cfg.clades:
        clade = [t.strip() for t in text.split(",") if t.strip()]
        supports[",".join(sorted(clade))] = clade_support(vecs, clade, pairs)
    report["clade_support"] = supports

    depth_rows = []
    for text in cfg.pairs:
        parts = [t.strip() for t in text.split(":")]
        if len(parts) != 2:
            raise ValidationError(f"bad --pair {text!r}; expected a:b")
        a, b = parts
        pairs.index(a, b)
        for s, v in enumerate(vecs):
            depth_rows.append([sites.ids[s], f"{a}:{b}", _text(mrca_depth(v, a, b, pairs))])
    if cfg.pairs:
        write_csv(_path(cfg, "mrca_depths.csv"), ["id", "pair", "depth"], depth_rows)

    gap_rows, stats_rows = [], []
    for s, v in enumerate(vecs):
        if pairs.N >= 3:
            gap_rows.append([sites.ids[s], _text(resolution_gap(v, pairs))])
        try:
            st = depth_stats(v, pairs)
            stats_rows.append([sites.ids[s], _text(st.height), _text(st.nu), _text(st.eta)])
        except ValidationError:
            stats_rows.append([sites.ids[s], _text(max(v) / 2), "", ""])
    write_csv(_path(cfg, "resolution_gaps.csv"), ["id", "gap"], gap_rows)
    write_csv(_path(cfg, "depth_stats.csv"), ["id", "height", "nu", "eta"], stats_rows)
    write_json(_path(cfg, "analyze.json"), "analyze", report)
    return EXIT_OK


def cmd_gen(cfg: RunConfig) -> int:
    fld = get_field(cfg.arithmetic)
    omega, Omega = fld.scalar(cfg.omega), fld.scalar(cfg.Omega)
    if not 0 < omega < Omega:
        raise ValidationError("need 0 < omega < Omega")
    if cfg.count < 0:
        raise ValidationError("--count must be nonnegative")
    types = [parse_coarse_type(t) for t in cfg.coarse_types]
    rng = np.random.default_rng(cfg.seed)
    lines = []
    for i in range(cfg.count):
        ct = types[i % len(types)] if types else None
        tree = random_equidistant_tree(cfg.N, omega, Omega, rng, coarse_type=ct, field=fld.mode)
        st = depth_stats(cophenetic(tree))
        if not (st.nu > omega and st.eta <= Omega):
            raise RuntimeError("generated tree violates the depth bounds")
        lines.append(emit_newick(tree))
    write_lines(_path(cfg, "trees.nwk"), lines)
    return EXIT_OK


COMMANDS = {
    "distances": cmd_distances,
    "median": cmd_median,
    "cluster": cmd_cluster,
    "analyze": cmd_analyze,
    "gen": cmd_gen,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tropoclust", description="Tropical k-means++ for equidistant trees.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", help="Newick file (one tree per line) or vector CSV with --vectors")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--runs", type=int, default=1, help="k-means++ restarts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--arithmetic", choices=[EXACT, FLOAT], default=FLOAT)
    p.add_argument("--vectors", action="store_true", help="read --input as a CSV of vectors")
    p.add_argument("--clade", action="append", default=[], help="comma-separated taxa; repeatable")
    p.add_argument("--pair", action="append", default=[], help="a:b taxon pair; repeatable")
    p.add_argument("--N", type=int, default=4, help="taxa per generated tree")
    p.add_argument("--count", type=int, default=0, help="number of generated trees")
    p.add_argument("--omega", type=float, default=0.15)
    p.add_argument("--Omega", type=float, default=1.0)
    p.add_argument(
        "--coarse-type",
        action="append",
        default=[],
        help="root split such as 'a,b|c,d'; repeatable, used round-robin",
    )
    p.add_argument("--tol", type=float, default=None, help="float-mode LP tolerance")
    p.add_argument("--workers", type=int, default=1, help="processes for restarts")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command,
        input=ns.input,
        out=ns.out,
        k=ns.k,
        runs=ns.runs,
        seed=ns.seed,
        arithmetic=ns.arithmetic,
        vectors=ns.vectors,
        clades=ns.clade,
        pairs=ns.pair,
        N=ns.N,
        count=ns.count,
        omega=ns.omega,
        Omega=ns.Omega,
        coarse_types=ns.coarse_type,
        tol=ns.tol,
        workers=ns.workers,
    )


def run(cfg: RunConfig) -> int:
    try:
        os.makedirs(cfg.out, exist_ok=True)
        return COMMANDS[cfg.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
