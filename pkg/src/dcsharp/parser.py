"""Concrete syntax for distributional-clause programs.

Surface syntax (ASCII):

    credit_score(C) ~ gaussian(650,15.4) <- has_loan(C,L) ~= Y, Y==f.

`~` reads "is distributed as", `~=` compares a random variable term with
a value, `<-` separates head from body, `\\+` is negation as failure,
`=<` is less-or-equal, `%` starts a comment, `.` ends a clause.
gaussian's second argument is the variance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .syntax import (AGGREGATE_NAMES, COMPARISON_OPS, Aggregate,
                     BernoulliExpr, Comparison, DiscreteExpr,
                     DistributionalClause, GaussianExpr, Program, StatModel,
                     ValExpr, ValueAtom, literal_variables)
from .terms import Compound, Constant, Term, Variable, variables_of


class DcsSyntaxError(Exception):
    def __init__(self, message, line, col, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        loc = "line %d, column %d" % (line, col)
        exp = (" (expected: %s)" % ", ".join(expected)) if expected else ""
        super().__init__("%s at %s%s" % (message, loc, exp))


@dataclass(frozen=True)
class Diagnostic:
    clause_index: int
    rule: str
    message: str

    def __repr__(self):
        return "clause %d: [%s] %s" % (self.clause_index, self.rule, self.message)


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+|%[^\n]*)
    | (?P<num>-?\d+\.\d+([eE][+-]?\d+)?|-?\d+[eE][+-]?\d+|-?\d+)
    | (?P<name>[a-z][A-Za-z0-9_]*)
    | (?P<var>[A-Z_][A-Za-z0-9_]*)
    | (?P<sym>~=|<-|\\\+|==|>=|=<|[~<>()\[\],:.])
""", re.VERBOSE)


def tokenize(text: str):
    tokens = []
    line, col, pos = 1, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DcsSyntaxError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup if m.lastgroup in ("ws", "num", "name", "var", "sym") else None
        for g in ("ws", "num", "name", "var", "sym"):
            if m.group(g) is not None:
                kind = g
                break
        lexeme = m.group(kind)
        if kind != "ws":
            tokens.append((kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# recursive-descent parser

class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.anon = 0

    # token access -----------------------------------------------------
    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def expect(self, lexeme):
        kind, lex, line, col = self.peek()
        if lex != lexeme or kind == "eof":
            raise DcsSyntaxError("unexpected %r" % (lex or "end of input"),
                                 line, col, expected=(lexeme,))
        return self.next()

    def at(self, lexeme) -> bool:
        kind, lex, _, _ = self.peek()
        return kind != "eof" and lex == lexeme

    # grammar ------------------------------------------------------------
    def program(self) -> List[DistributionalClause]:
        clauses = []
        while self.peek()[0] != "eof":
            clauses.append(self.clause())
        return clauses

    def clause(self) -> DistributionalClause:
        head = self.term()
        if self.at("~"):
            self.next()
            dist = self.dist_expr()
        else:
            # bare head: shorthand for a deterministic true fact
            dist = ValExpr(Constant("t"))
        body: Tuple = ()
        if self.at("<-"):
            self.next()
            body = tuple(self.body())
        self.expect(".")
        return DistributionalClause(head, dist, body)

    def body(self) -> List:
        lits = [self.literal()]
        while self.at(","):
            self.next()
            lits.append(self.literal())
        return lits

    def literal(self):
        negated = False
        if self.at("\\+"):
            self.next()
            negated = True
        kind, lex, line, col = self.peek()
        if kind == "name" and lex in AGGREGATE_NAMES and self._lookahead_is("("):
            lit = self.aggregate(negated)
            return lit
        if kind == "name" and lex == "linear" and self._lookahead_is("("):
            if negated:
                raise DcsSyntaxError("negation applies to value atoms and aggregates only",
                                     line, col)
            return self.stat_model()
        lhs = self.operand()
        kind, lex, line, col = self.peek()
        if lex == "~=":
            self.next()
            value = self.operand()
            if not isinstance(value, (Variable, Constant)):
                raise DcsSyntaxError("value position must be a variable or constant",
                                     line, col)
            return ValueAtom(lhs, value, positive=not negated)
        if lex in COMPARISON_OPS:
            if negated:
                raise DcsSyntaxError("negation applies to value atoms and aggregates only",
                                     line, col)
            self.next()
            rhs = self.operand()
            for t in (lhs, rhs):
                if isinstance(t, Compound):
                    raise DcsSyntaxError("comparison operands must be variables or constants",
                                         line, col)
            return Comparison(lhs, rhs, lex)
        raise DcsSyntaxError("unexpected %r" % (lex or "end of input"), line, col,
                             expected=("~=",) + COMPARISON_OPS)

    def aggregate(self, negated: bool) -> Aggregate:
        _, name, line, col = self.next()
        self.expect("(")
        template = self.operand()
        self.expect(",")
        self.expect("(")
        inner = tuple(self.body())
        self.expect(")")
        self.expect(",")
        kind, lex, line, col = self.peek()
        result = self.operand()
        if not isinstance(result, Variable):
            raise DcsSyntaxError("aggregate result must be a variable", line, col)
        self.expect(")")
        return Aggregate(name, template, inner, result, positive=not negated)

    def stat_model(self) -> StatModel:
        self.next()                      # 'linear'
        self.expect("(")
        self.expect("[")
        inputs = [self.operand()]
        while self.at(","):
            self.next()
            inputs.append(self.operand())
        self.expect("]")
        self.expect(",")
        self.expect("[")
        params = [self.number()]
        while self.at(","):
            self.next()
            params.append(self.number())
        self.expect("]")
        self.expect(",")
        kind, lex, line, col = self.peek()
        out = self.operand()
        if not isinstance(out, Variable):
            raise DcsSyntaxError("statistical model output must be a variable", line, col)
        self.expect(")")
        if len(params) != len(inputs) + 1:
            raise DcsSyntaxError("linear/3 needs one weight per input plus an intercept",
                                 line, col)
        return StatModel("linear", tuple(inputs), tuple(params), out)

    def dist_expr(self):
        kind, lex, line, col = self.peek()
        if kind != "name":
            raise DcsSyntaxError("unexpected %r" % lex, line, col,
                                 expected=("val", "bernoulli", "discrete", "gaussian"))
        if lex == "val":
            self.next()
            self.expect("(")
            t = self.operand()
            self.expect(")")
            return ValExpr(t)
        if lex == "bernoulli":
            self.next()
            self.expect("(")
            p = self.operand()
            self.expect(")")
            return BernoulliExpr(p)
        if lex == "gaussian":
            self.next()
            self.expect("(")
            mean = self.operand()
            self.expect(",")
            var = self.operand()
            self.expect(")")
            return GaussianExpr(mean, var)
        if lex == "discrete":
            self.next()
            self.expect("(")
            self.expect("[")
            entries = [self.discrete_entry()]
            while self.at(","):
                self.next()
                entries.append(self.discrete_entry())
            self.expect("]")
            self.expect(")")
            return DiscreteExpr(tuple(entries))
        raise DcsSyntaxError("unknown distribution %r" % lex, line, col,
                             expected=("val", "bernoulli", "discrete", "gaussian"))

    def discrete_entry(self):
        p = self.operand()
        self.expect(":")
        v = self.operand()
        return (p, v)

    def number(self) -> float:
        kind, lex, line, col = self.peek()
        if kind != "num":
            raise DcsSyntaxError("expected a number, found %r" % lex, line, col)
        self.next()
        return _num(lex)

    def operand(self) -> Term:
        kind, lex, line, col = self.peek()
        if kind == "num":
            self.next()
            return Constant(_num(lex))
        if kind == "var":
            self.next()
            if lex == "_":
                self.anon += 1
                return Variable("_G%d" % self.anon)
            return Variable(lex)
        if kind == "name":
            return self.term()
        raise DcsSyntaxError("unexpected %r" % (lex or "end of input"), line, col,
                             expected=("term",))

    def term(self) -> Term:
        kind, lex, line, col = self.peek()
        if kind != "name":
            raise DcsSyntaxError("expected an atom or functor, found %r" % lex,
                                 line, col)
        self.next()
        if not self.at("("):
            return Constant(lex)
        self.next()
        args = [self.operand()]
        while self.at(","):
            self.next()
            args.append(self.operand())
        self.expect(")")
        return Compound(lex, tuple(args))

    def _lookahead_is(self, lexeme) -> bool:
        nxt = self.tokens[self.i + 1]
        return nxt[0] != "eof" and nxt[1] == lexeme


def _num(lex: str):
    if re.fullmatch(r"-?\d+", lex):
        return int(lex)
    return float(lex)


# ---------------------------------------------------------------------------
# public entry points

def parse_program(text: str, combining_rule: str = "mean") -> Program:
    clauses = _Parser(text).program()
    return Program(tuple(clauses), combining_rule=combining_rule)


def parse_query(text: str) -> tuple:
    """A query is a comma-joined body conjunction."""
    p = _Parser(text.rstrip().rstrip("."))
    lits = tuple(p.body())
    kind, lex, line, col = p.peek()
    if kind != "eof":
        raise DcsSyntaxError("trailing input after query: %r" % lex, line, col)
    return lits


def parse_evidence(text: str) -> dict:
    """Evidence files hold one ground `term ~= value.` per line."""
    evidence = {}
    p = _Parser(text)
    while p.peek()[0] != "eof":
        _, _, line, col = p.peek()
        lit = p.literal()
        p.expect(".")
        if not isinstance(lit, ValueAtom) or not lit.positive:
            raise DcsSyntaxError("evidence lines must be positive value atoms", line, col)
        if not isinstance(lit.value, Constant) or list(variables_of(lit.rv_term)):
            raise DcsSyntaxError("evidence must be ground", line, col)
        evidence[lit.rv_term] = lit.value.value
    return evidence


def program_to_text(p: Program) -> str:
    return "\n".join(repr(c) for c in p.clauses) + "\n"


# ---------------------------------------------------------------------------
# validation

def validate(p: Program) -> List[Diagnostic]:
    """Static well-formedness checks; an empty result means the program
    passed.  Exhaustiveness and acyclicity are checked elsewhere."""
    out: List[Diagnostic] = []
    for idx, clause in enumerate(p.clauses):
        rv_terms = [clause.head]
        value_vars = set()
        bound = {v.name for v in variables_of(clause.head)}
        seen_positive_rv_vars = set(bound)

        def walk(lits, out=out, idx=idx):
            for lit in lits:
                if isinstance(lit, ValueAtom):
                    rv_terms.append(lit.rv_term)
                    rv_vars = {v.name for v in variables_of(lit.rv_term)}
                    if isinstance(lit.value, Variable):
                        value_vars.add(lit.value.name)
                        bound.add(lit.value.name)
                    if lit.positive:
                        seen_positive_rv_vars.update(rv_vars)
                        bound.update(rv_vars)
                    else:
                        unsafe = rv_vars - seen_positive_rv_vars
                        if unsafe:
                            out.append(Diagnostic(idx, "unsafe negation",
                                "variables %s of a negated literal are not bound by an "
                                "earlier positive literal" % sorted(unsafe)))
                elif isinstance(lit, Aggregate):
                    walk(lit.inner_goal)
                    bound.add(lit.result.name)
                elif isinstance(lit, StatModel):
                    bound.add(lit.output.name)

        walk(clause.body)

        for t in rv_terms:
            if _has_infinite_nesting(t):
                out.append(Diagnostic(idx, "infinite grounding",
                    "RV term %r nests a compound term with variable arguments" % (t,)))

        bad = value_vars & {v.name for t in rv_terms for v in variables_of(t)}
        if bad:
            out.append(Diagnostic(idx, "value variable in RV term",
                "value variables %s also occur in RV terms" % sorted(bad)))

        free = {v.name for v in _dist_vars(clause)} - bound
        if free:
            out.append(Diagnostic(idx, "unbound distribution parameter",
                "distribution parameters %s are bound neither by the head "
                "nor by the body" % sorted(free)))
    return out


def _dist_vars(clause):
    from .syntax import dist_variables
    return dist_variables(clause.dist)


def _has_infinite_nesting(t: Term) -> bool:
    if isinstance(t, Compound):
        for a in t.args:
            if isinstance(a, Compound) and list(variables_of(a)):
                return True
            if _has_infinite_nesting(a):
                return True
    return False
