"""Reader for the line-oriented integer-program format.

    # comment
    START: f
    f(x, y) -{x + 1}-> g(x - 1, y), g(x, y - 1) :|: x > 0 && y >= 0
    g(x, y) -> NIL :|: x <= 0

Rules without `-{cost}->` cost 1.  Variables that do not occur among the
left-hand side arguments are temporaries.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import sympy as sp

from arith import ONE, Expr, canonical, fresh_var, normalize_guard, var
from config import RULE_PREFIX, SINK, TEMP_PREFIX
from errors import ItsSyntaxError, SemanticError
from models import Program, Provenance, Rule, Term
from program import well_formed

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#.*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.']*)
  | (?P<cost_open>-\{)
  | (?P<cost_close>\}->)
  | (?P<arrow>->)
  | (?P<guard_sep>:\|:)
  | (?P<and>&&)
  | (?P<rel><=|>=|==|=|<|>)
  | (?P<op>[-+*/^(),:])
    """,
    re.VERBOSE,
)

KEYWORDS = {"START", "NIL", "TRUE"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(line: str, lineno: int) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise ItsSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), lineno, pos + 1))
        pos = m.end()
    return tokens


@dataclass
class _RawRule:
    root: str
    params: List[str]
    cost: Expr
    rhs: List[Tuple[str, List[Expr]]]
    guard: List[Tuple[Expr, str, Expr]]
    line: int


class _LineParser:
    """Recursive-descent parser over the tokens of one line."""

    def __init__(self, tokens: Sequence[Token], lineno: int, width: int):
        self.tokens = list(tokens)
        self.pos = 0
        self.lineno = lineno
        self.width = width

    # --- cursor ---

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        column = tok.column if tok else self.width + 1
        found = f", found {tok.text!r}" if tok else ", found end of line"
        raise ItsSyntaxError(message + found, self.lineno, column)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        tok = self.peek()
        if tok and tok.kind == kind and (text is None or tok.text == text):
            self.pos += 1
            return tok
        return None

    def expect(self, kind: str, text: Optional[str] = None, what: str = "") -> Token:
        tok = self.accept(kind, text)
        if tok is None:
            self.fail(f"expected {what or text or kind}")
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    # --- expressions ---

    def expr(self) -> Expr:
        value = self.product()
        while True:
            if self.accept("op", "+"):
                value = value + self.product()
            elif self.accept("op", "-"):
                value = value - self.product()
            else:
                return value

    def product(self) -> Expr:
        value = self.unary()
        while True:
            if self.accept("op", "*"):
                value = value * self.unary()
            elif self.peek() and self.peek().text == "/":
                tok = self.expect("op", "/")
                divisor = self.unary()
                if divisor.free_symbols or divisor == 0:
                    self.fail("division only by a non-zero constant", tok)
                value = value / divisor
            else:
                return value

    def unary(self) -> Expr:
        if self.accept("op", "-"):
            return -self.unary()
        if self.accept("op", "+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.accept("op", "^")
        if tok is None:
            return base
        exponent = self.unary()
        if exponent.free_symbols:
            if base.free_symbols or not (base.is_Rational and base > 0):
                self.fail("symbolic exponents need a positive constant base", tok)
        elif not (exponent.is_Integer and exponent >= 0):
            self.fail("constant exponents must be non-negative integers", tok)
        return sp.Pow(base, exponent)

    def atom(self) -> Expr:
        tok = self.peek()
        if self.accept("num"):
            return sp.Integer(int(tok.text))
        if tok and tok.kind == "ident" and tok.text not in KEYWORDS:
            self.pos += 1
            return var(tok.text)
        if self.accept("op", "("):
            value = self.expr()
            self.expect("op", ")")
            return value
        self.fail("expected an expression")

    # --- rules ---

    def ident(self, what: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "ident" or tok.text in KEYWORDS:
            self.fail(f"expected {what}")
        self.pos += 1
        return tok

    def arguments(self) -> List[Expr]:
        self.expect("op", "(")
        args: List[Expr] = []
        if self.accept("op", ")"):
            return args
        args.append(self.expr())
        while self.accept("op", ","):
            args.append(self.expr())
        self.expect("op", ")")
        return args

    def lhs(self) -> Tuple[str, List[str]]:
        root = self.ident("a function symbol").text
        self.expect("op", "(")
        names: List[str] = []
        if not self.accept("op", ")"):
            names.append(self.ident("a variable").text)
            while self.accept("op", ","):
                names.append(self.ident("a variable").text)
            self.expect("op", ")")
        return root, names

    def rhs(self) -> List[Tuple[str, List[Expr]]]:
        if self.accept("ident", "NIL"):
            return []
        terms = [self.term()]
        while self.accept("op", ","):
            terms.append(self.term())
        return terms

    def term(self) -> Tuple[str, List[Expr]]:
        root = self.ident("a function symbol or NIL").text
        return root, self.arguments()

    def guard(self) -> List[Tuple[Expr, str, Expr]]:
        if self.accept("ident", "TRUE"):
            return []
        out = [self.comparison()]
        while self.accept("and"):
            if self.accept("ident", "TRUE"):
                continue
            out.append(self.comparison())
        return out

    def comparison(self) -> Tuple[Expr, str, Expr]:
        lhs = self.expr()
        rel = self.expect("rel", what="a relation")
        rhs = self.expr()
        return lhs, rel.text, rhs

    def rule(self) -> _RawRule:
        root, params = self.lhs()
        if self.accept("cost_open"):
            cost = self.expr()
            self.expect("cost_close", what="'}->'")
        else:
            self.expect("arrow", what="'->' or '-{cost}->'")
            cost = ONE
        rhs = self.rhs()
        guard = self.guard() if self.accept("guard_sep") else []
        if not self.at_end():
            self.fail("unexpected trailing input")
        return _RawRule(root, params, cost, rhs, guard, self.lineno)


def _read(text: str) -> Tuple[Optional[str], List[_RawRule]]:
    start: Optional[str] = None
    rules: List[_RawRule] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = tokenize(line, lineno)
        if not tokens:
            continue
        parser = _LineParser(tokens, lineno, len(line))
        if tokens[0].kind == "ident" and tokens[0].text == "START":
            parser.pos = 1
            parser.expect("op", ":")
            name = parser.ident("the start symbol").text
            if not parser.at_end():
                parser.fail("unexpected trailing input")
            if start is not None:
                raise ItsSyntaxError("duplicate START declaration", lineno, 1)
            start = name
            continue
        rules.append(parser.rule())
    return start, rules


def _arities(rules: Sequence[_RawRule]) -> Dict[str, int]:
    arity: Dict[str, int] = {}

    def record(name: str, k: int, line: int):
        if name == SINK:
            raise SemanticError(f"line {line}: '{SINK}' is a reserved symbol")
        if arity.setdefault(name, k) != k:
            raise SemanticError(
                f"line {line}: {name} used with arity {k} and {arity[name]}"
            )

    for r in rules:
        record(r.root, len(r.params), r.line)
        for name, args in r.rhs:
            record(name, len(args), r.line)
    return arity


def _canonical_params(rules: Sequence[_RawRule]) -> Tuple[sp.Symbol, ...]:
    widest = max(rules, key=lambda r: len(r.params))
    return tuple(var(name) for name in widest.params)


def _normalize_rule(
    raw: _RawRule, params: Tuple[sp.Symbol, ...], rename_root: Dict[str, str]
) -> Rule:
    if len(set(raw.params)) != len(raw.params):
        raise SemanticError(f"line {raw.line}: left-hand side arguments must be distinct")
    lhs = [var(name) for name in raw.params]
    mapping: Dict[sp.Symbol, sp.Expr] = dict(zip(lhs, params))

    used = set(raw.cost.free_symbols)
    for _, args in raw.rhs:
        for a in args:
            used |= a.free_symbols
    for lhs_expr, _, rhs_expr in raw.guard:
        used |= lhs_expr.free_symbols | rhs_expr.free_symbols

    # Temporaries must not collide with the canonical parameter names.
    taken = {p.name for p in params} | {s.name for s in used}
    for s in sorted(used - set(lhs), key=lambda s: s.name):
        if s in params:
            fresh = fresh_var(TEMP_PREFIX, taken)
            taken.add(fresh.name)
            mapping[s] = fresh

    def rename(e: Expr) -> Expr:
        return canonical(e.xreplace(mapping))

    terms = []
    for name, args in raw.rhs:
        full = [rename(a) for a in args] + list(params[len(args):])
        terms.append(Term(rename_root.get(name, name), tuple(full)))
    if not terms:
        terms = [Term(SINK, ())]
    guard = normalize_guard(
        (rename(lhs_expr), rel, rename(rhs_expr)) for lhs_expr, rel, rhs_expr in raw.guard
    )
    return Rule(
        root=rename_root.get(raw.root, raw.root),
        params=params,
        cost=rename(raw.cost),
        rhs=tuple(terms),
        guard=guard,
    )


def parse(text: str) -> Program:
    """Parse, pad arities, canonicalize variables and wrap the start symbol."""
    start, raw_rules = _read(text)
    if not raw_rules:
        raise SemanticError("program has no rules")
    _arities(raw_rules)
    if start is None:
        start = raw_rules[0].root
    params = _canonical_params(raw_rules)

    rename_root: Dict[str, str] = {}
    if any(name == start for r in raw_rules for name, _ in r.rhs):
        wrapped = start + "'"
        symbols = {r.root for r in raw_rules} | {n for r in raw_rules for n, _ in r.rhs}
        while wrapped in symbols:
            wrapped += "'"
        rename_root[start] = wrapped
        logger.debug("start symbol %s occurs on a right-hand side, wrapping as %s", start, wrapped)

    rules: List[Rule] = []
    if rename_root:
        rules.append(
            Rule(start, params, sp.Integer(0), (Term(rename_root[start], params),), ())
        )
    for raw in raw_rules:
        rule = _normalize_rule(raw, params, rename_root)
        if not well_formed(rule):
            raise SemanticError(
                f"line {raw.line}: right-hand side arguments must map integers to integers"
            )
        rules.append(rule)

    named = tuple(
        r.replace(name=f"{RULE_PREFIX}{i}", provenance=Provenance())
        for i, r in enumerate(rules, start=1)
    )
    logger.debug("parsed %d rules over %s", len(named), ", ".join(p.name for p in params))
    return Program(named, start, params, source=text)
