"""Parse and serialize Sullivan model files (.sul) and element expressions.

Grammar (whitespace-insensitive, '#' comments):

    model <name>
    generator <sym> deg <n>
    diff <sym> = <expr>
    weight <sym> = <n>
    shriek fundamental = <expr>          # tensor slots L(...) / R(...)

Expressions use * ^ + - with rational literals p/q; bar generators are
written with a prime suffix (x' for the bar of x).  Every parse failure
carries a line/column diagnostic.
"""

import json
import re
import os
import time
from dataclasses import dataclass, field
from importlib import resources

from .scalars import QQ, rational, rat_str
from .core import FreeCDGA, Generator, Element, AlgebraError, tensor_square

TOKEN = re.compile(r"""
    (?P<num>\d+(?:/\d+)?)
  | (?P<sym>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<op>[()*^+=,-])
  | (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
""", re.VERBOSE)


class ParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)
        self.line = line
        self.col = col


def tokenize(text):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        val = m.group()
        if kind == "nl":
            tokens.append(("nl", "\n", line, col))
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append((kind, val, line, col))
            col += len(val)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class ExprParser:
    """Recursive-descent expression parser over a symbol table.

    resolve(sym) -> Element; call(head, inner_element) handles L()/R()
    tensor wrappers when allowed.
    """

    def __init__(self, tokens, resolve, call=None, zero=None, call_resolve=None):
        self.toks = [t for t in tokens if t[0] != "nl"]
        self.i = 0
        self.resolve = resolve
        self.call = call
        self.zero = zero
        self.call_resolve = call_resolve

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op):
        kind, val, line, col = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val!r}", line, col)

    def parse(self):
        e = self.expr()
        kind, val, line, col = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected trailing token {val!r}", line, col)
        return e

    def expr(self):
        kind, val, _, _ = self.peek()
        negate = False
        if kind == "op" and val in "+-":
            self.next()
            negate = val == "-"
        e = self.term()
        if negate:
            e = -e
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                e = e - rhs if val == "-" else e + rhs
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val == "*":
                self.next()
                e = e * self.factor()
            else:
                return e

    def factor(self):
        e = self.atom()
        kind, val, _, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            kind, val, line, col = self.next()
            if kind != "num" or "/" in val:
                raise ParseError("exponent must be a nonnegative integer", line, col)
            e = e ** int(val)
        return e

    def atom(self):
        kind, val, line, col = self.next()
        if kind == "num":
            c = rational(val)
            return self.zero().alg.scalar(c) if self.zero else c
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "op" and val == "-":
            return -self.factor()
        if kind == "sym":
            if self.call and val in ("L", "R") and self.peek()[:2] == ("op", "("):
                self.next()
                outer, self.resolve = self.resolve, self.call_resolve
                try:
                    inner = self.expr()
                finally:
                    self.resolve = outer
                self.expect_op(")")
                return self.call(val, inner)
            got = self.resolve(val)
            if got is None:
                raise ParseError(f"unknown symbol {val!r}", line, col)
            return got
        raise ParseError(f"unexpected token {val!r}", line, col)


def parse_element(algebra: FreeCDGA, text: str) -> Element:
    """Element of an algebra from an expression string."""
    tokens = tokenize(text)

    def resolve(sym):
        if sym in algebra.index:
            return algebra.gen(sym)
        return None

    p = ExprParser(tokens, resolve, zero=lambda: algebra.zero())
    e = p.parse()
    if not isinstance(e, Element):
        e = algebra.scalar(e)
    return e


def parse_tensor_element(base: FreeCDGA, T: FreeCDGA, text: str) -> Element:
    """Element of a tensor square, with L()/R() wrapping base expressions."""
    tokens = tokenize(text)

    def resolve(sym):
        if sym in T.index:
            return T.gen(sym)
        return None

    def base_resolve(sym):
        if sym in base.index:
            return base.gen(sym)
        return None

    def call(head, inner):
        if not isinstance(inner, Element):
            inner = base.scalar(inner)
        data = {}
        for m, c in inner.data.items():
            mm = [0] * T.n
            for i, e in enumerate(m):
                name = f"{head}({base.generators[i].name})"
                mm[T.index[name]] = e
            data[tuple(mm)] = c
        return Element(T, data)

    p = ExprParser(tokens, resolve, call=call, zero=lambda: T.zero(),
                   call_resolve=base_resolve)
    e = p.parse()
    if not isinstance(e, Element):
        e = T.scalar(e)
    return e


@dataclass
class SulModel:
    name: str
    algebra: FreeCDGA
    weights: dict | None = None
    shriek: Element | None = None          # element of tensor_square(algebra)
    tensor: FreeCDGA | None = None

    def loop_model(self):
        from .loop_models import build_L
        return build_L(self.algebra)


def parse_model(text: str, default_name="model") -> SulModel:
    """Parse a .sul source into a validated Sullivan model."""
    lines = text.split("\n")
    name = default_name
    gens = []
    diffs = {}
    weights = {}
    shriek_src = None
    shriek_line = None
    seen = set()
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        toks = tokenize(stripped)
        kind, head, _, col = toks[0]
        if kind != "sym":
            raise ParseError(f"expected a directive, found {head!r}", lineno, col)
        if head == "model":
            if len(toks) != 3 or toks[1][0] != "sym":
                raise ParseError("usage: model <name>", lineno, 1)
            name = toks[1][1]
        elif head == "generator":
            if (len(toks) != 5 or toks[1][0] != "sym" or toks[2][1] != "deg"
                    or toks[3][0] != "num"):
                raise ParseError("usage: generator <sym> deg <n>", lineno, 1)
            sym, deg = toks[1][1], int(toks[3][1])
            if sym in seen:
                raise ParseError(f"generator {sym!r} declared twice", lineno, 1)
            if deg <= 0:
                raise ParseError(f"generator {sym!r} has degree {deg} <= 0", lineno, 1)
            seen.add(sym)
            gens.append(Generator(sym, deg))
        elif head == "diff":
            if len(toks) < 4 or toks[1][0] != "sym" or toks[2][1] != "=":
                raise ParseError("usage: diff <sym> = <expr>", lineno, 1)
            diffs[toks[1][1]] = (stripped.split("=", 1)[1], lineno)
        elif head == "weight":
            if len(toks) != 5 or toks[1][0] != "sym" or toks[2][1] != "=" \
                    or toks[3][0] != "num":
                raise ParseError("usage: weight <sym> = <n>", lineno, 1)
            w = int(toks[3][1])
            if w <= 0:
                raise ParseError("weights must be positive integers", lineno, 1)
            weights[toks[1][1]] = w
        elif head == "shriek":
            if len(toks) < 4 or toks[1][1] != "fundamental" or toks[2][1] != "=":
                raise ParseError("usage: shriek fundamental = <expr>", lineno, 1)
            shriek_src = stripped.split("=", 1)[1]
            shriek_line = lineno
        else:
            raise ParseError(f"unknown directive {head!r}", lineno, 1)

    alg = FreeCDGA(gens, name=name)
    d_vals = {}
    for sym, (src, lineno) in diffs.items():
        if sym not in alg.index:
            raise ParseError(f"diff for undeclared generator {sym!r}", lineno, 1)
        try:
            val = parse_element(alg, src)
        except ParseError as exc:
            raise ParseError(f"in diff {sym}: {exc}", lineno, 1) from None
        expected = alg.degrees[alg.index[sym]] + 1
        if not val.is_zero() and not val.is_homogeneous(expected):
            raise ParseError(
                f"diff {sym} is not homogeneous of degree {expected}", lineno, 1)
        d_vals[sym] = val
    for g in alg.generators:
        d_vals.setdefault(g.name, alg.zero())
    try:
        alg.set_differential(d_vals)
    except AlgebraError as exc:
        raise ParseError(str(exc)) from None

    for sym in weights:
        if sym not in alg.index:
            raise ParseError(f"weight for undeclared generator {sym!r}")

    model = SulModel(name, alg, weights=weights or None)
    if shriek_src is not None:
        T = tensor_square(alg)
        try:
            model.shriek = parse_tensor_element(alg, T, shriek_src)
        except ParseError as exc:
            raise ParseError(f"in shriek block: {exc}", shriek_line, 1) from None
        model.tensor = T
    return model


def load_model(path: str) -> SulModel:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    base = os.path.splitext(os.path.basename(path))[0]
    return parse_model(text, default_name=base)


def shipped_model_text(name: str) -> str:
    return resources.files("loopalg.models").joinpath(f"{name}.sul").read_text()


def load_shipped_model(name: str) -> SulModel:
    return parse_model(shipped_model_text(name), default_name=name)


def serialize_element(elt: Element) -> str:
    return str(elt)


def serialize_model(model: SulModel) -> str:
    out = [f"model {model.name}"]
    for g in model.algebra.generators:
        out.append(f"generator {g.name} deg {g.degree}")
    d = model.algebra.differential
    for g in model.algebra.generators:
        img = d(model.algebra.gen(g.name))
        if not img.is_zero():
            out.append(f"diff {g.name} = {serialize_element(img)}")
    if model.weights:
        for g in model.algebra.generators:
            if g.name in model.weights:
                out.append(f"weight {g.name} = {model.weights[g.name]}")
    if model.shriek is not None:
        out.append(f"shriek fundamental = {tensor_str(model)}")
    return "\n".join(out) + "\n"


def tensor_str(model: SulModel) -> str:
    return str(model.shriek)


@dataclass
class Report:
    """Machine-readable result of one command run."""
    command: str
    model_name: str
    max_degree: int | None = None
    tables: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    started: float = field(default_factory=time.monotonic)

    def add_table(self, degree, dimension, basis):
        self.tables.append({"degree": degree, "dimension": dimension,
                            "basis": list(basis)})

    def elapsed_ms(self) -> int:
        if os.environ.get("LOOPALG_STABLE_OUTPUT"):
            return 0
        return int((time.monotonic() - self.started) * 1000)


def emit_report(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        payload = {
            "command": report.command,
            "model_name": report.model_name,
            "max_degree": report.max_degree,
            "tables": report.tables,
            "verdicts": report.verdicts,
            "witnesses": report.witnesses,
            "elapsed_ms": report.elapsed_ms(),
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    out = [f"# {report.command} on {report.model_name}"]
    if report.max_degree is not None:
        out.append(f"window: degrees <= {report.max_degree}")
    if report.tables:
        out.append("deg  dim  basis")
        for row in report.tables:
            basis = ", ".join(row["basis"])
            out.append(f"{row['degree']:>3}  {row['dimension']:>3}  {basis}")
    for k, v in report.verdicts.items():
        out.append(f"{k}: {v}")
    for k, v in report.witnesses.items():
        out.append(f"witness {k}: {v}")
    out.append(f"elapsed_ms: {report.elapsed_ms()}")
    return "\n".join(out) + "\n"
