"""Discrete Bayesian networks in BIF 0.3 form, imported as programs.

Tabular mode emits one clause per CPT row.  Tree mode compresses each
CPT into an exact decision tree first: identical-distribution blocks
become single leaves, so context-specific independence present in the
table surfaces as shorter clause bodies.  `table` entries follow the
JavaBayes convention: the child value varies slowest, the last parent
varies fastest.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .syntax import (DiscreteExpr, DistributionalClause, Program, ValueAtom)
from .terms import Constant


class BifError(Exception):
    pass


@dataclass
class BifVariable:
    name: str
    values: Tuple[str, ...]


@dataclass
class BifNetwork:
    name: str
    variables: List[BifVariable] = field(default_factory=list)
    parents: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    # per child: ordered (parent config, child-value probabilities)
    cpt: Dict[str, List[Tuple[tuple, tuple]]] = field(default_factory=dict)

    def variable(self, name: str) -> BifVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise BifError("unknown variable %r" % (name,))


# ---------------------------------------------------------------------------
# parsing

_BIF_TOKEN = re.compile(r"//[^\n]*|/\*.*?\*/|[A-Za-z0-9_.+-]+|[{}()|,;\[\]]", re.DOTALL)


def parse_bif(text: str) -> BifNetwork:
    toks = [t for t in _BIF_TOKEN.findall(text)
            if not t.startswith("//") and not t.startswith("/*")]
    pos = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else None

    def take(expected=None):
        t = peek()
        if t is None:
            raise BifError("unexpected end of BIF input")
        if expected is not None and t != expected:
            raise BifError("expected %r near token %d, found %r"
                           % (expected, pos[0], t))
        pos[0] += 1
        return t

    def skip_block():
        take("{")
        depth = 1
        while depth:
            t = take()
            if t == "{":
                depth += 1
            elif t == "}":
                depth -= 1

    net = BifNetwork(name="unnamed")
    while peek() is not None:
        kw = take()
        if kw == "network":
            net.name = take()
            skip_block()
        elif kw == "variable":
            name = take()
            take("{")
            take("type")
            kind = take()
            if kind != "discrete":
                raise BifError("variable %s: only discrete variables are supported"
                               % name)
            take("[")
            n = int(take())
            take("]")
            take("{")
            values = []
            while peek() != "}":
                v = take()
                if v != ",":
                    values.append(v)
            take("}")
            take(";")
            take("}")
            if len(values) != n:
                raise BifError("variable %s declares %d values but lists %d"
                               % (name, n, len(values)))
            net.variables.append(BifVariable(name, tuple(values)))
        elif kw == "probability":
            _parse_probability(net, take, peek)
        else:
            raise BifError("unexpected token %r at top level" % (kw,))
    _check_network(net)
    return net


def _parse_probability(net: BifNetwork, take, peek):
    take("(")
    child = take()
    parents: List[str] = []
    if peek() == "|":
        take("|")
        while peek() != ")":
            t = take()
            if t != ",":
                parents.append(t)
    take(")")
    child_var = net.variable(child)
    parent_vars = [net.variable(p) for p in parents]
    configs = list(itertools.product(*[pv.values for pv in parent_vars]))
    rows: Dict[tuple, tuple] = {}
    take("{")
    while peek() != "}":
        t = take()
        if t == "table":
            probs = _numbers_until(";", take, peek)
            expected = len(configs) * len(child_var.values)
            if len(probs) != expected:
                raise BifError("table for %s has %d entries, expected %d"
                               % (child, len(probs), expected))
            for ci, config in enumerate(configs):
                rows[config] = tuple(probs[vi * len(configs) + ci]
                                     for vi in range(len(child_var.values)))
        elif t == "(":
            config = []
            while peek() != ")":
                v = take()
                if v != ",":
                    config.append(v)
            take(")")
            probs = _numbers_until(";", take, peek)
            if len(probs) != len(child_var.values):
                raise BifError("row for %s lists %d probabilities, expected %d"
                               % (child, len(probs), len(child_var.values)))
            rows[tuple(config)] = tuple(probs)
        else:
            raise BifError("unexpected token %r in probability block" % (t,))
    take("}")
    missing = [c for c in configs if c not in rows]
    if missing:
        raise BifError("probability block for %s misses parent config %r"
                       % (child, missing[0]))
    net.parents[child] = tuple(parents)
    net.cpt[child] = [(c, rows[c]) for c in configs]


def _numbers_until(end, take, peek):
    out = []
    while peek() != end:
        t = take()
        if t != ",":
            out.append(float(t))
    take(end)
    return out


def _check_network(net: BifNetwork):
    for v in net.variables:
        if v.name not in net.cpt:
            raise BifError("variable %s has no probability block" % v.name)


# ---------------------------------------------------------------------------
# conversion to programs

def _atom(name: str) -> Constant:
    return Constant(_ident(name))


def _value(v: str):
    if re.fullmatch(r"-?\d+", v):
        return int(v)
    if re.fullmatch(r"-?\d+\.\d+", v):
        return float(v)
    return _ident(v)


def _ident(s: str) -> str:
    out = re.sub(r"[^A-Za-z0-9_]", "_", s)
    if not out or not out[0].islower():
        out = "v_" + out
    return out


def network_to_tabular(net: BifNetwork) -> Program:
    clauses = []
    for var in net.variables:
        parents = net.parents[var.name]
        for config, probs in net.cpt[var.name]:
            body = tuple(ValueAtom(_atom(p), Constant(_value(c)))
                         for p, c in zip(parents, config))
            clauses.append(DistributionalClause(
                _atom(var.name), _discrete_expr(var.values, probs), body))
    return Program(tuple(clauses))


def network_to_tree(net: BifNetwork) -> Program:
    clauses = []
    for var in net.variables:
        parents = list(net.parents[var.name])
        rows = net.cpt[var.name]
        for path, probs in _compress(parents, rows):
            body = tuple(ValueAtom(_atom(p), Constant(_value(c)))
                         for p, c in path)
            clauses.append(DistributionalClause(
                _atom(var.name), _discrete_expr(var.values, probs), body))
    return Program(tuple(clauses))


def _discrete_expr(values: Sequence[str], probs: Sequence[float]) -> DiscreteExpr:
    entries = tuple((Constant(float(p)), Constant(_value(v)))
                    for v, p in zip(values, probs) if p > 0.0)
    total = sum(p for p in probs)
    if abs(total - 1.0) > 1e-9:
        raise BifError("probabilities sum to %r" % (total,))
    return DiscreteExpr(entries)


def _compress(parents: List[str], rows: List[Tuple[tuple, tuple]]):
    """Exact decision-tree compression of a CPT.  Splits greedily on the
    parent producing the most immediately-constant branches; ties break
    on the variable name.  Yields (path conditions, probabilities)."""

    def recurse(remaining: List[int], subset, path):
        first = subset[0][1]
        if all(probs == first for _, probs in subset):
            yield (path, first)
            return
        best = None
        for i in remaining:
            parts = _partition(subset, i)
            merges = sum(1 for block in parts.values()
                         if all(p == block[0][1] for _, p in block))
            key = (-merges, parents[i])
            if best is None or key < best[0]:
                best = (key, i, parts)
        _, i, parts = best
        rest = [j for j in remaining if j != i]
        for val in sorted(parts):
            yield from recurse(rest, parts[val],
                               path + ((parents[i], val),))

    yield from recurse(list(range(len(parents))), rows, ())


def _partition(subset, i):
    parts: Dict[str, list] = {}
    for config, probs in subset:
        parts.setdefault(config[i], []).append((config, probs))
    return parts


def import_bif(text: str, mode: str = "tabular") -> Program:
    net = parse_bif(text)
    if mode == "tabular":
        return network_to_tabular(net)
    if mode == "tree":
        return network_to_tree(net)
    raise BifError("unknown import mode %r" % (mode,))


# ---------------------------------------------------------------------------
# emission (round-trips our own fixtures and generated networks)

def bif_text(net: BifNetwork) -> str:
    lines = ["network %s {" % net.name, "}"]
    for v in net.variables:
        lines.append("variable %s {" % v.name)
        lines.append("  type discrete [ %d ] { %s };" % (len(v.values),
                                                         ", ".join(v.values)))
        lines.append("}")
    for v in net.variables:
        parents = net.parents[v.name]
        head = v.name if not parents else "%s | %s" % (v.name, ", ".join(parents))
        lines.append("probability ( %s ) {" % head)
        if not parents:
            lines.append("  table %s;" % ", ".join(repr(p) for p in net.cpt[v.name][0][1]))
        else:
            for config, probs in net.cpt[v.name]:
                lines.append("  (%s) %s;" % (", ".join(config),
                                             ", ".join(repr(p) for p in probs)))
        lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# random generator: tree-CPD networks with genuine collapses

def random_tree_bn(n_nodes: int, max_parents: int, structure_density: float,
                   seed: int) -> Tuple[Program, Program, BifNetwork]:
    """A random binary DAG whose CPDs are decision trees, returned as
    (tree program, tabular program, network).  The two programs define
    the same distribution; density 0 means every CPD ignores its parents."""
    if n_nodes > 64:
        raise BifError("n_nodes capped at 64")
    rng = random.Random(seed)
    values = ("t", "f")
    net = BifNetwork(name="random_%d" % seed)
    for i in range(1, n_nodes + 1):
        name = "v%d" % i
        net.variables.append(BifVariable(name, values))
        pool = ["v%d" % j for j in range(1, i)]
        k = rng.randint(0, min(max_parents, len(pool)))
        parents = tuple(sorted(rng.sample(pool, k), key=lambda s: int(s[1:])))
        net.parents[name] = parents

        def tree(remaining: tuple):
            if not remaining or rng.random() >= structure_density:
                p = round(rng.uniform(0.05, 0.95), 6)
                return (p, 1.0 - p)
            return {"split": remaining[0],
                    "t": tree(remaining[1:]), "f": tree(remaining[1:])}

        cpd = tree(parents)
        rows = []
        for config in itertools.product(values, repeat=len(parents)):
            node = cpd
            lookup = dict(zip(parents, config))
            while isinstance(node, dict):
                node = node[lookup[node["split"]]]
            rows.append((config, node))
        net.cpt[name] = rows
    return network_to_tree(net), network_to_tabular(net), net
