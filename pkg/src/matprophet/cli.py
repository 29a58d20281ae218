"""Command-line entry points: simulate, check, partition, orient, exact."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import composition as comp
from .config import ConfigError, ExperimentConfig, load_json, parse_config, parse_matroid, parse_order, \
    parse_tree, seymour_tree
from .decomposition import DecompositionError
from .harness import CSV_COLUMNS, OrderStrategy, exact_evaluate, reports_to_csv, simulate
from .matroid import (CographicMatroid, ExplicitMatroid, GraphicMatroid, InputError, VectorMatroid,
                      basis_exchange_violations, partition_into_independent_sets, rank_axiom_violations)
from .mechanisms import (ClassPickMechanism, Cographic3ECMechanism, CographicMechanism, GammaSparseMechanism,
                         GraphicMechanism, KSparseMechanism, MechanismError, SingleItemMechanism, orient_graph,
                         orient_hypergraph, build_hypergraph)
from .relaxation import ex_ante, polytope_excess
from .rng import derive_seed

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

EXACT_CSV_COLUMNS = ("instance", "mechanism", "order", "gambler", "prophet", "ratio", "claimed_alpha", "verdict")
CSV_HELP = ("CSV columns, in order: " + ", ".join(CSV_COLUMNS) + ". The exact command uses: "
            + ", ".join(EXACT_CSV_COLUMNS) + ".")


def _vector_of(m):
    if isinstance(m, VectorMatroid):
        return m
    if isinstance(m, GraphicMatroid):
        return m.to_vector(2)
    raise ConfigError("mechanism.mechanism: this mechanism needs a vector or graphic matroid")


def _graph_for(m, want: str):
    if isinstance(m, (GraphicMatroid, CographicMatroid)):
        if want == "graphic" and isinstance(m, CographicMatroid):
            raise ConfigError("mechanism.mechanism: graphic mechanism on a cographic instance")
        if want == "cographic" and isinstance(m, GraphicMatroid):
            raise ConfigError("mechanism.mechanism: cographic mechanism on a graphic instance")
        return m.graph
    raise ConfigError(f"mechanism.mechanism: {want} mechanism needs a {want} matroid")


def build_mechanism(exp: ExperimentConfig):
    """Instantiate the configured mechanism; returns (mechanism, relaxation or None)."""
    opts = exp.mechanism
    kind = opts["mechanism"]
    m, dists = exp.matroid, exp.dists
    seed = derive_seed(exp.seed, "build")
    relax = None
    if kind in ("graphic", "ksparse"):
        relax = ex_ante(m, dists, exp.relax_trials, derive_seed(exp.seed, "relax"))
    if kind == "graphic":
        return GraphicMechanism(_graph_for(m, "graphic"), relax), relax
    if kind == "ksparse":
        k = opts.get("k")
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ConfigError("mechanism.k: expected a positive integer")
        return KSparseMechanism(_vector_of(m), k, relax), relax
    if kind == "cographic":
        return CographicMechanism(_graph_for(m, "cographic"), dists), None
    if kind == "cographic3ec":
        return Cographic3ECMechanism(_graph_for(m, "cographic")), None
    if kind == "gamma":
        gamma = opts.get("gamma")
        if isinstance(gamma, bool) or not isinstance(gamma, (int, float)) or gamma <= 0:
            raise ConfigError("mechanism.gamma: expected a positive number")
        return GammaSparseMechanism(m, gamma), None
    if kind == "single":
        mech = SingleItemMechanism(dists)
        if m.full_rank() > 1:
            mech.ratio = None
        return mech, None
    if kind == "class-pick":
        return ClassPickMechanism(m, dists), None
    # composed
    tree_desc = opts.get("tree")
    if not isinstance(tree_desc, dict):
        raise ConfigError("mechanism.tree: composed mechanism needs a decomposition tree")
    st = seymour_tree(tree_desc, m, "mechanism.tree")
    k = opts.get("k", 2)
    tags = {st.tree.tags.get(v) for v in st.tree.nodes}
    if k == 2 and tags <= set(comp.REGULAR_BAGS):
        return comp.regular_mechanism(st, dists, seed).mechanism, None
    bags = {"graphic": comp.graphic_guarantee(), "cographic": comp.cographic_guarantee(),
            "r10x": comp.r10x_guarantee(), "two-column-sparse": comp.ksparse_guarantee(2)}
    if "gamma-sparse" in tags:
        bags["gamma-sparse"] = comp.gamma_guarantee(int(opts.get("gamma", 3)))
    return comp.tree_compose(st.matroid, st.tree, bags, k, dists, seed, certificates=st.certificates).mechanism, None


def _load_experiments(args) -> list[ExperimentConfig]:
    raw = load_json(args.config)
    exps = parse_config(raw)
    for e in exps:
        if getattr(args, "trials", None) is not None:
            if args.trials < 1:
                raise ConfigError("--trials: must be at least 1")
            e.trials = args.trials
        if getattr(args, "seed", None) is not None:
            e.seed = args.seed
        if getattr(args, "order", None) is not None:
            e.order = parse_order(args.order, "--order")
            e.order.check(e.matroid.n)
    return exps


def _emit(payload: dict, csv_text: str | None, args, stem: str) -> None:
    doc = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(doc + "\n")
        if csv_text is not None:
            (out / f"{stem}.csv").write_text(csv_text)
    if args.format == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(doc + "\n")


def cmd_simulate(args) -> int:
    exps = _load_experiments(args)
    reports = []
    for e in exps:
        mech, relax = build_mechanism(e)
        reports.append(simulate(e.matroid, e.dists, mech, e.order, e.trials, e.seed, relax, instance=e.name))
    payload = {"created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
               "reports": [r.to_dict() for r in reports]}
    _emit(payload, reports_to_csv(reports), args, "report")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_exact(args) -> int:
    exps = _load_experiments(args)
    results, ok = [], True
    for e in exps:
        mech, relax = build_mechanism(e)
        order = e.order
        if args.order is None and "order" not in e.raw:
            order = OrderStrategy("exhaustive" if e.matroid.n <= 7 else "adversarial")
        p = None if relax is None else relax.p
        res = exact_evaluate(e.matroid, e.dists, mech, order, p, e.seed)
        alpha = mech.ratio
        passed = alpha is None or res.gambler >= res.prophet / alpha - 1e-12
        ok &= passed
        results.append({"instance": e.name, "mechanism": mech.name, "order_policy": res.order_policy,
                        "gambler": res.gambler, "prophet": res.prophet, "ratio": res.ratio, "claimed_alpha": alpha,
                        "worst_order": None if res.worst_order is None else list(res.worst_order),
                        "states": res.states, "verdict": "pass" if passed else "fail"})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXACT_CSV_COLUMNS)
    for r in results:
        w.writerow([r["instance"], r["mechanism"], r["order_policy"], repr(r["gambler"]), repr(r["prophet"]),
                    repr(r["ratio"]), "" if r["claimed_alpha"] is None else repr(r["claimed_alpha"]), r["verdict"]])
    _emit({"results": results}, buf.getvalue(), args, "exact")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check(args) -> int:
    raw = load_json(args.config)
    problems: list[str] = []
    if isinstance(raw, dict) and "experiments" not in raw and "mechanism" not in raw:
        # bare instance description, optionally with a tree
        m = parse_matroid(raw.get("matroid", raw), "matroid")
        exps = []
    else:
        exps = parse_config(raw)
        m = None
    targets = [(e.name, e.matroid, e) for e in exps] or [("instance", m, None)]
    for name, mat, e in targets:
        for v in rank_axiom_violations(mat):
            problems.append(f"{name}: rank axiom violated: {v}")
        if isinstance(mat, ExplicitMatroid):
            for v in basis_exchange_violations(mat):
                problems.append(f"{name}: basis axiom violated: {v}")
        src = raw if e is None else e.raw
        if "p" in src:
            p = np.asarray(src["p"], dtype=float)
            if len(p) != mat.n:
                raise ConfigError(f"p: expected {mat.n} entries, got {len(p)}")
            problems.extend(f"{name}: {x}" for x in _orientation_checks(mat, p))
        if e is not None and e.mechanism.get("mechanism") in ("graphic", "ksparse"):
            relax = ex_ante(mat, e.dists, e.relax_trials, derive_seed(e.seed, "relax"))
            excess, where = polytope_excess(mat, relax.p, relax.stderr)
            if excess > 1e-9:
                problems.append(f"{name}: polytope membership: set {list(where)} exceeds its rank by {excess:.3g}")
            problems.extend(f"{name}: {x}" for x in _orientation_checks(mat, relax.p))
        tree_src = src.get("decomposition") or (src.get("mechanism", {}) or {}).get("tree")
        if tree_src is not None:
            k = int(src.get("k", (src.get("mechanism") or {}).get("k", 2)))
            tree, certs, glob = parse_tree(tree_src, "decomposition")
            target = glob if glob is not None else mat
            try:
                tree.validate(target.n)
                for edge, lam in tree.edge_thickness(target).items():
                    if lam > k:
                        problems.append(f"{name}: thickness: tree edge {edge[0]}-{edge[1]} has connectivity {lam} > k = {k}")
            except DecompositionError as exc:
                problems.append(f"{name}: decomposition: {exc}")
            if certs and not problems:
                st = seymour_tree(tree_src, mat, "decomposition")
                problems.extend(f"{name}: seymour tree: {x}" for x in st.validate(k) if "connectivity" not in x)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return EXIT_FAIL if problems else EXIT_OK


def _orientation_checks(m, p) -> list[str]:
    out = []
    excess, where = polytope_excess(m, p)
    if excess > 1e-9:
        out.append(f"polytope membership: set {list(where)} exceeds its rank by {excess:.3g}")
        return out
    try:
        if isinstance(m, GraphicMatroid) and all(u != v for u, v in m.graph.edges):
            o = orient_graph(m.graph, p)
        elif isinstance(m, VectorMatroid):
            hyper = build_hypergraph(m)
            items = [t for t, e in enumerate(hyper) if e]
            k = max((len(hyper[t]) for t in items), default=1)
            o = orient_hypergraph([hyper[t] for t in items], [p[t] for t in items], k, m.dim)
        else:
            return out
    except MechanismError as exc:
        return [f"orientation load: {exc}"]
    if o.max_load > o.bound + 1e-9:
        out.append(f"orientation load: {o.max_load:.6g} exceeds {o.bound:g}")
    return out


def cmd_partition(args) -> int:
    raw = load_json(args.instance)
    m = parse_matroid(raw.get("matroid", raw) if isinstance(raw, dict) else raw, "matroid")
    if args.k < 1:
        raise ConfigError("k: must be a positive integer")
    res = partition_into_independent_sets(m, args.k)
    if not res.feasible:
        s = list(res.violating_set)
        out = {"feasible": False, "k": args.k, "witness": s, "witness_size": len(s), "witness_rank": m.rank(s),
               "certificate_holds": res.certificate_holds(m)}
        print(json.dumps(out, indent=2))
        return EXIT_FAIL
    covered = sorted(e for part in res.parts for e in part)
    checks = {
        "disjoint": len(covered) == len(set(covered)),
        "independent": all(m.is_independent(part) for part in res.parts),
        "covers_nonloops": covered == sorted(set(range(m.n)) - m.loops),
    }
    out = {"feasible": True, "k": args.k, "parts": [list(p) for p in res.parts], "loops": list(res.loops),
           "checks": checks}
    print(json.dumps(out, indent=2))
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def cmd_orient(args) -> int:
    raw = load_json(args.instance)
    m = parse_matroid(raw.get("matroid", raw) if isinstance(raw, dict) else raw, "matroid")
    if args.p.lstrip().startswith("["):
        try:
            p = json.loads(args.p)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"p: invalid JSON list: {exc.msg}") from None
    else:
        p = load_json(args.p)
    if isinstance(p, dict):
        p = p.get("p")
    if not isinstance(p, list) or len(p) != m.n:
        raise ConfigError(f"p: expected a list of {m.n} numbers")
    p = [float(x) for x in p]
    try:
        if isinstance(m, GraphicMatroid):
            o = orient_graph(m.graph, p)
            kind = "graph"
        elif isinstance(m, VectorMatroid):
            hyper = build_hypergraph(m)
            items = [t for t, e in enumerate(hyper) if e]
            k = args.k or max((len(hyper[t]) for t in items), default=1)
            sub = orient_hypergraph([hyper[t] for t in items], [p[t] for t in items], k, m.dim)
            heads = [None] * m.n
            for j, t in enumerate(items):
                heads[t] = sub.heads[j]
            o = type(sub)(tuple(heads), sub.loads, sub.bound)
            kind = "hypergraph"
        else:
            raise ConfigError("matroid.type: orientation needs a graphic or vector instance")
    except MechanismError as exc:
        print(json.dumps({"feasible": False, "error": str(exc)}, indent=2))
        return EXIT_FAIL
    ok = o.max_load <= o.bound + 1e-9
    print(json.dumps({"feasible": True, "kind": kind, "heads": list(o.heads), "loads": list(o.loads),
                      "bound": o.bound, "max_load": o.max_load, "load_bound_holds": ok}, indent=2))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matprophet", description="Static-threshold prophet mechanisms on matroids.",
                                     epilog=CSV_HELP)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_run=True):
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        if with_run:
            p.add_argument("--trials", type=int, help="override the trial count")
            p.add_argument("--seed", type=int, help="override the 64-bit seed")
            p.add_argument("--order", help="adversarial | uniform | exhaustive | fixed:i,j,...")
            p.add_argument("--out", help="directory for report files")
            p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")

    p = sub.add_parser("simulate", help="Monte Carlo verification of the claimed ratios", epilog=CSV_HELP)
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("exact", help="exact evaluation over finite outcome spaces")
    common(p)
    p.set_defaults(func=cmd_exact)
    p = sub.add_parser("check", help="structural validations without simulation")
    common(p, with_run=False)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("partition", help="cover a matroid by k independent sets")
    p.add_argument("instance", help="matroid description (JSON)")
    p.add_argument("k", type=int)
    p.set_defaults(func=cmd_partition)
    p = sub.add_parser("orient", help="orient a graph or hypergraph with bounded fractional in-load")
    p.add_argument("instance", help="graphic or vector matroid description (JSON)")
    p.add_argument("p", help="per-element weights: an inline JSON list or a JSON file")
    p.add_argument("--k", type=int, help="load bound for vector instances (default: max column support)")
    p.set_defaults(func=cmd_orient)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
