"""JSON descriptions of matroids, laws, mechanisms, trees and experiments."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .decomposition import BAG_TAGS, DecompositionTree, SeymourTree
from .distributions import DistributionError, ValueDistribution, from_dict as dist_from_dict
from .graph import Graph
from .harness import OrderStrategy
from .matroid import (CographicMatroid, ExplicitMatroid, GraphicMatroid, InputError, Matroid, UniformMatroid,
                      VectorMatroid)

MECHANISMS = ("graphic", "ksparse", "cographic", "cographic3ec", "gamma", "single", "class-pick", "composed")


class ConfigError(InputError):
    """Schema problem; the message starts with the offending field path."""


def load_json(path: str | Path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _get(d: dict, key: str, where: str, kind=None, default=...):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    if key not in d:
        if default is not ...:
            return default
        raise ConfigError(f"{where}.{key}: missing required field")
    v = d[key]
    if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if kind is float and (isinstance(v, bool) or not isinstance(v, (int, float))):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if kind is list and not isinstance(v, list):
        raise ConfigError(f"{where}.{key}: expected a list")
    if kind is str and not isinstance(v, str):
        raise ConfigError(f"{where}.{key}: expected a string")
    return v


def parse_graph(d: dict, where: str) -> Graph:
    vertices = _get(d, "vertices", where, int)
    edges = _get(d, "edges", where, list)
    for i, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
            raise ConfigError(f"{where}.edges[{i}]: expected a pair of vertex ids")
    try:
        return Graph(vertices, tuple(tuple(e) for e in edges))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_matroid(d: dict, where: str = "matroid") -> Matroid:
    kind = _get(d, "type", where, str)
    labels = d.get("labels")
    try:
        if kind == "graphic":
            return GraphicMatroid(parse_graph(d, where), labels)
        if kind == "cographic":
            return CographicMatroid(parse_graph(d, where), labels)
        if kind == "uniform":
            return UniformMatroid(_get(d, "n", where, int), _get(d, "k", where, int), labels)
        if kind == "vector":
            p = _get(d, "p", where, int)
            cols = _get(d, "columns", where, list)
            for j, c in enumerate(cols):
                if not isinstance(c, list):
                    raise ConfigError(f"{where}.columns[{j}]: expected a list of entries")
            dim = d.get("dim")
            return VectorMatroid(p, cols, labels, dim=dim)
        if kind == "explicit":
            return ExplicitMatroid(_get(d, "n", where, int), _get(d, "bases", where, list), labels)
    except ConfigError:
        raise
    except (InputError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.type: unknown matroid type {kind!r}")


def parse_distributions(items, n: int, where: str = "distributions") -> list[ValueDistribution]:
    if not isinstance(items, list):
        raise ConfigError(f"{where}: expected a list")
    if len(items) != n:
        raise ConfigError(f"{where}: matroid has {n} elements but {len(items)} distributions were given")
    out = []
    for i, d in enumerate(items):
        try:
            out.append(dist_from_dict(d, f"{where}[{i}]"))
        except DistributionError as exc:
            raise ConfigError(str(exc)) from None
    return out


def parse_tree(d: dict, where: str = "tree") -> tuple[DecompositionTree, dict, VectorMatroid | None]:
    """Nodes/edges description; returns the tree, per-node certificates and the optional global matroid."""
    nodes = _get(d, "nodes", where, list)
    bags, tags, certs = {}, {}, {}
    for j, node in enumerate(nodes):
        w = f"{where}.nodes[{j}]"
        v = _get(node, "id", w, int)
        bag = _get(node, "bag", w, list)
        tag = node.get("class")
        if tag is not None and tag not in BAG_TAGS:
            raise ConfigError(f"{w}.class: unknown class {tag!r}")
        if v in bags:
            raise ConfigError(f"{w}.id: duplicate node id {v}")
        bags[v] = bag
        if tag is not None:
            tags[v] = tag
        if "graph" in node:
            certs[v] = parse_graph(node["graph"], f"{w}.graph")
        elif "rep" in node:
            rep = node["rep"]
            cols = rep.get("columns") if isinstance(rep, dict) else rep
            if not isinstance(cols, list):
                raise ConfigError(f"{w}.rep: expected F_2 columns")
            try:
                certs[v] = VectorMatroid(2, cols)
            except (InputError, ValueError) as exc:
                raise ConfigError(f"{w}.rep: {exc}") from None
    edges, sums = [], {}
    for j, e in enumerate(_get(d, "edges", where, list, [])):
        w = f"{where}.edges[{j}]"
        u, v = _get(e, "u", w, int), _get(e, "v", w, int)
        edges.append((u, v))
        if "sum" in e:
            sums[(u, v)] = _get(e, "sum", w, int)
    try:
        tree = DecompositionTree(bags, edges, tags, sums)
    except InputError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    glob = None
    if "matroid" in d:
        m = parse_matroid(d["matroid"], f"{where}.matroid")
        if not isinstance(m, VectorMatroid):
            m = m.to_vector(2) if isinstance(m, GraphicMatroid) else None
        glob = m
    return tree, certs, glob


def seymour_tree(d: dict, matroid: Matroid | None, where: str = "tree") -> SeymourTree:
    tree, certs, glob = parse_tree(d, where)
    m = glob if glob is not None else matroid
    if isinstance(m, GraphicMatroid):
        m = m.to_vector(2)
    if not isinstance(m, VectorMatroid) or m.p != 2:
        raise ConfigError(f"{where}: a Seymour tree needs a binary vector matroid")
    return SeymourTree(m, tree, certs)


@dataclass
class ExperimentConfig:
    name: str
    matroid: Matroid
    dists: list[ValueDistribution]
    mechanism: dict
    order: OrderStrategy
    trials: int
    seed: int
    relax_trials: int = 20000
    raw: dict = field(default_factory=dict)


def parse_order(text, where: str) -> OrderStrategy:
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected a string such as 'adversarial' or 'fixed:0,1,2'")
    try:
        return OrderStrategy.parse(text)
    except (InputError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_experiment(d: dict, where: str, defaults: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    merged = {**defaults, **d}
    m = parse_matroid(_get(merged, "matroid", where), f"{where}.matroid")
    dists = parse_distributions(_get(merged, "distributions", where), m.n, f"{where}.distributions")
    mech = _get(merged, "mechanism", where)
    if not isinstance(mech, dict) or mech.get("mechanism") not in MECHANISMS:
        raise ConfigError(f"{where}.mechanism.mechanism: expected one of {', '.join(MECHANISMS)}")
    order = parse_order(merged.get("order", "adversarial"), f"{where}.order")
    try:
        order.check(m.n)
    except InputError as exc:
        raise ConfigError(f"{where}.order: {exc}") from None
    trials = _get(merged, "trials", where, int, 10000)
    seed = _get(merged, "seed", where, int, 0)
    if trials < 1:
        raise ConfigError(f"{where}.trials: must be at least 1")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"{where}.seed: must fit in 64 unsigned bits")
    relax_trials = _get(merged, "relaxation_trials", where, int, 20000)
    name = merged.get("name", where)
    return ExperimentConfig(str(name), m, dists, mech, order, trials, seed, relax_trials, merged)


def parse_config(d) -> list[ExperimentConfig]:
    if not isinstance(d, dict):
        raise ConfigError("config: expected a JSON object")
    if "experiments" in d:
        exps = _get(d, "experiments", "config", list)
        defaults = {k: v for k, v in d.items() if k != "experiments"}
        return [parse_experiment(e, f"experiments[{i}]", defaults) for i, e in enumerate(exps)]
    return [parse_experiment(d, "config", {})]
