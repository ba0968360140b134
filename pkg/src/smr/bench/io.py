"""Line-oriented text format for energy models.

::

    SMR v1 nodes N labels L
    unary
    <N rows of L numbers>
    edge i j potts C
    edge i j assoc C_0 ... C_{L-1}
    edge i j dense
    <L rows of L numbers>
    pattern K theta n_0:l_0 ... n_{K-1}:l_{K-1}
    pattern+ K theta n_0:l_0 ...
    robust K theta n_0:l_0:w_0 ...
    robust+ K theta n_0:l_0:w_0 ...
    eq c n:l:coef ...
    ineq d n:l:coef ...

``pattern`` opens a new potential and ``pattern+`` adds an entry to the
current one (likewise ``robust``/``robust+``).  ``#`` starts a comment.
Numbers are written with 17 significant digits so a round trip is exact.
"""
from __future__ import annotations

import numpy as np

from ..energy import (EnergyModel, LinearConstraint, PairwiseTerm, PatternPotential,
                      RobustEntry, RobustPatternPotential, validate)

MAGIC = "SMR"
VERSION = "v1"


class InstanceFormatError(ValueError):
    """Malformed instance file; the message names the line and field."""

    def __init__(self, path, lineno, message):
        self.path, self.lineno = path, lineno
        super().__init__(f"{path}:{lineno}: {message}")


def _f(x) -> str:
    return format(float(x), ".17g")


def _row(values) -> str:
    return " ".join(_f(v) for v in values)


def dumps(model: EnergyModel) -> str:
    lines = [f"{MAGIC} {VERSION} nodes {model.num_nodes} labels {model.num_labels}", "unary"]
    lines += [_row(r) for r in model.unary]
    for t in model.pairwise:
        if t.is_associative:
            vals = np.asarray(t.values)
            if np.all(vals == vals[0]):
                lines.append(f"edge {t.i} {t.j} potts {_f(vals[0])}")
            else:
                lines.append(f"edge {t.i} {t.j} assoc {_row(vals)}")
        else:
            lines.append(f"edge {t.i} {t.j} dense")
            lines += [_row(r) for r in t.values]
    for pot in model.patterns:
        for k, (d, v) in enumerate(pot.entries):
            key = "pattern" if k == 0 else "pattern+"
            pairs = " ".join(f"{n}:{l}" for n, l in zip(pot.nodes, d))
            lines.append(f"{key} {len(pot.nodes)} {_f(v)} {pairs}")
    for pot in model.robust_patterns:
        for k, e in enumerate(pot.entries):
            key = "robust" if k == 0 else "robust+"
            triples = " ".join(f"{n}:{l}:{_f(w)}" for n, l, w in zip(pot.nodes, e.labels, e.weights))
            lines.append(f"{key} {len(pot.nodes)} {_f(e.value)} {triples}")
    for key, group in (("eq", model.linear_eq), ("ineq", model.linear_ineq)):
        for c in group:
            terms = " ".join(f"{n}:{l}:{_f(a)}" for n, l, a in c.terms)
            lines.append(f"{key} {_f(c.rhs)} {terms}".rstrip())
    return "\n".join(lines) + "\n"


def write_instance(model: EnergyModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(model))


class _Reader:
    def __init__(self, text: str, path):
        self.path = path
        self.lines = []
        for k, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].split()
            if body:
                self.lines.append((k, body))
        self.pos = 0
        self.num_nodes = self.num_labels = None

    def error(self, lineno, msg):
        return InstanceFormatError(self.path, lineno, msg)

    def next(self, what):
        if self.pos >= len(self.lines):
            last = self.lines[-1][0] if self.lines else 0
            raise self.error(last, f"unexpected end of file, expected {what}")
        item = self.lines[self.pos]
        self.pos += 1
        return item

    def number(self, lineno, tok, what, kind=float):
        try:
            return kind(tok)
        except ValueError:
            raise self.error(lineno, f"{what}: cannot parse {tok!r} as {kind.__name__}") from None

    def numbers(self, lineno, toks, count, what):
        if len(toks) != count:
            raise self.error(lineno, f"{what}: expected {count} values, got {len(toks)}")
        return [self.number(lineno, t, f"{what} field {k}") for k, t in enumerate(toks)]

    def matrix(self, rows, cols, what):
        out = []
        for r in range(rows):
            lineno, toks = self.next(f"{what} row {r}")
            out.append(self.numbers(lineno, toks, cols, f"{what} row {r}"))
        return np.array(out, dtype=float).reshape(rows, cols)

    def node(self, lineno, tok, what):
        v = self.number(lineno, tok, what, int)
        if not 0 <= v < self.num_nodes:
            raise self.error(lineno, f"{what}: node {v} out of range [0, {self.num_nodes})")
        return v

    def label(self, lineno, tok, what):
        v = self.number(lineno, tok, what, int)
        if not 0 <= v < self.num_labels:
            raise self.error(lineno, f"{what}: label {v} out of range [0, {self.num_labels})")
        return v

    def split(self, lineno, tok, parts, what):
        fields = tok.split(":")
        if len(fields) != parts:
            raise self.error(lineno, f"{what}: expected {parts} ':'-separated fields in {tok!r}")
        out = [self.node(lineno, fields[0], what), self.label(lineno, fields[1], what)]
        if parts == 3:
            out.append(self.number(lineno, fields[2], what))
        return out


def loads(text: str, path="<string>") -> EnergyModel:
    rd = _Reader(text, path)
    lineno, head = rd.next("header")
    if len(head) != 6 or head[0] != MAGIC or head[2] != "nodes" or head[4] != "labels":
        raise rd.error(lineno, f"header must read '{MAGIC} {VERSION} nodes N labels L'")
    if head[1] != VERSION:
        raise rd.error(lineno, f"unsupported version {head[1]!r}")
    n = rd.number(lineno, head[3], "nodes", int)
    L = rd.number(lineno, head[5], "labels", int)
    rd.num_nodes, rd.num_labels = n, L
    lineno, toks = rd.next("unary block")
    if toks != ["unary"]:
        raise rd.error(lineno, "expected 'unary'")
    unary = rd.matrix(n, L, "unary")
    pairwise, patterns, robust, eq, ineq = [], [], [], [], []
    while rd.pos < len(rd.lines):
        lineno, toks = rd.next("record")
        key, args = toks[0], toks[1:]
        if key == "edge":
            if len(args) < 3:
                raise rd.error(lineno, "edge: expected 'edge i j kind ...'")
            i = rd.node(lineno, args[0], "edge field i")
            j = rd.node(lineno, args[1], "edge field j")
            kind, rest = args[2], args[3:]
            if kind == "potts":
                (c,) = rd.numbers(lineno, rest, 1, "edge potts weight")
                pairwise.append(PairwiseTerm.potts(i, j, c, L))
            elif kind == "assoc":
                pairwise.append(PairwiseTerm.associative(i, j, rd.numbers(lineno, rest, L, "edge assoc")))
            elif kind == "dense":
                if rest:
                    raise rd.error(lineno, "edge dense: table goes on the following lines")
                pairwise.append(PairwiseTerm.dense(i, j, rd.matrix(L, L, f"edge {i} {j} dense")))
            else:
                raise rd.error(lineno, f"edge: unknown kind {kind!r}")
        elif key in ("pattern", "pattern+", "robust", "robust+"):
            robust_key = key.startswith("robust")
            if len(args) < 2:
                raise rd.error(lineno, f"{key}: expected size and value")
            k = rd.number(lineno, args[0], f"{key} size", int)
            theta = rd.number(lineno, args[1], f"{key} value")
            items = args[2:]
            if len(items) != k:
                raise rd.error(lineno, f"{key}: expected {k} node entries, got {len(items)}")
            parsed = [rd.split(lineno, t, 3 if robust_key else 2, key) for t in items]
            nodes = tuple(p[0] for p in parsed)
            labels = tuple(p[1] for p in parsed)
            target = robust if robust_key else patterns
            if not key.endswith("+"):
                target.append([nodes, []])
            elif not target or target[-1][0] != nodes:
                raise rd.error(lineno, f"{key}: must follow an entry on the same nodes")
            if robust_key:
                target[-1][1].append(RobustEntry(labels, theta, tuple(p[2] for p in parsed)))
            else:
                target[-1][1].append((labels, theta))
        elif key in ("eq", "ineq"):
            if not args:
                raise rd.error(lineno, f"{key}: missing right-hand side")
            rhs = rd.number(lineno, args[0], f"{key} rhs")
            terms = [tuple(rd.split(lineno, t, 3, key)) for t in args[1:]]
            (eq if key == "eq" else ineq).append(LinearConstraint(terms, rhs))
        else:
            raise rd.error(lineno, f"unknown record {key!r}")
    model = EnergyModel(
        n, L, unary, tuple(pairwise),
        patterns=tuple(PatternPotential(nd, tuple(es)) for nd, es in patterns),
        robust_patterns=tuple(RobustPatternPotential(nd, tuple(es)) for nd, es in robust),
        linear_eq=tuple(eq), linear_ineq=tuple(ineq),
    )
    errors = validate(model)
    if errors:
        # whole-model checks (self loops, duplicate edges, ...) have no single line
        raise rd.error(rd.lines[-1][0], "invalid model: " + "; ".join(errors))
    return model


def read_instance(path) -> EnergyModel:
    with open(path) as fh:
        return loads(fh.read(), str(path))
