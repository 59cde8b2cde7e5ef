"""Operator-expression language used by the CLI.

Grammar (ASCII, whitespace-insensitive)::

    expr   := sign? term (('+' | '-') term)*
    term   := coeff ('*' factor)* | factor ('*' factor)*
    factor := name site? "'"?
    coeff  := real | real ('+'|'-') real 'i' | real 'i'
    name   := a | n | sx | sy | sz | sp | sm | id
    site   := 1-based factor index, omitted for single-factor spaces

Complex literals are lexed greedily: ``2-0.3i*sz`` is ``(2-0.3i)*sz``, not
``2 - 0.3i*sz``. A term made of a bare coefficient denotes that multiple of
the identity. A trailing apostrophe takes the Hermitian conjugate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .algebra import HilbertSpace, Operator, annihilation, embed, identity, number, pauli
from .errors import ParseError, SemanticError

NAMES = ("a", "n", "sx", "sy", "sz", "sp", "sm", "id")
_QUBIT_NAMES = {"sx": "x", "sy": "y", "sz": "z", "sp": "plus", "sm": "minus"}

_REAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_real_re = re.compile(_REAL)
_ident_re = re.compile(r"[A-Za-z_]+")
_int_re = re.compile(r"\d+")


@dataclass(frozen=True)
class Factor:
    name: str
    site: int | None = None  # 1-based
    dagger: bool = False


@dataclass(frozen=True)
class Term:
    coeff: complex
    factors: tuple[Factor, ...]


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, ident, int, op, end
    value: object
    pos: int


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


def _skip_ws(text, pos):
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = _skip_ws(text, 0)
    prev = None
    while pos < len(text):
        ch = text[pos]
        start = pos
        if ch in "0123456789" or (ch == "." and pos + 1 < len(text) and text[pos + 1] in "0123456789"):
            if prev is not None and prev.kind == "ident":
                m = _int_re.match(text, pos)
                toks.append(_Tok("int", int(m.group()), start))
                pos = m.end()
            else:
                m = _real_re.match(text, pos)
                value, pos = _lex_complex(text, m)
                toks.append(_Tok("num", value, start))
        elif ch.isascii() and (ch.isalpha() or ch == "_"):
            m = _ident_re.match(text, pos)
            toks.append(_Tok("ident", m.group(), start))
            pos = m.end()
        elif ch in "+-*'":
            toks.append(_Tok("op", ch, start))
            pos += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", _byte_offset(text, pos))
        prev = toks[-1]
        pos = _skip_ws(text, pos)
    toks.append(_Tok("end", None, len(text)))
    return toks


def _lex_complex(text, m):
    """Greedy complex literal starting at real-number match ``m``."""
    re_part = float(m.group())
    pos = m.end()
    if pos < len(text) and text[pos] == "i":
        return complex(0.0, re_part), pos + 1
    look = _skip_ws(text, pos)
    if look < len(text) and text[look] in "+-":
        sign = -1.0 if text[look] == "-" else 1.0
        look = _skip_ws(text, look + 1)
        m2 = _real_re.match(text, look)
        if m2 and m2.end() < len(text) and text[m2.end()] == "i":
            return complex(re_part, sign * float(m2.group())), m2.end() + 1
    return complex(re_part, 0.0), pos


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, _byte_offset(self.text, tok.pos))

    def expr(self) -> list[Term]:
        sign = 1.0
        tok = self.peek()
        if tok.kind == "op" and tok.value in "+-":
            self.take()
            sign = -1.0 if tok.value == "-" else 1.0
        terms = [self.term(sign)]
        while True:
            tok = self.peek()
            if tok.kind == "end":
                return terms
            if tok.kind == "op" and tok.value in "+-":
                self.take()
                terms.append(self.term(-1.0 if tok.value == "-" else 1.0))
            else:
                raise self.error("expected '+', '-' or end of expression")

    def term(self, sign) -> Term:
        tok = self.peek()
        coeff = 1.0 + 0j
        factors = []
        if tok.kind == "num":
            coeff = self.take().value
        elif tok.kind == "ident":
            factors.append(self.factor())
        else:
            raise self.error("expected a coefficient or an operator name")
        while self.peek().kind == "op" and self.peek().value == "*":
            self.take()
            factors.append(self.factor())
        return Term(sign * coeff, tuple(factors))

    def factor(self) -> Factor:
        tok = self.take()
        if tok.kind != "ident":
            raise self.error("expected an operator name", tok)
        site = None
        if self.peek().kind == "int":
            site = self.take().value
        dagger = False
        if self.peek().kind == "op" and self.peek().value == "'":
            self.take()
            dagger = True
        if tok.value not in NAMES:
            raise SemanticError(
                f"unknown operator {tok.value!r} at byte {_byte_offset(self.text, tok.pos)}"
            )
        return Factor(tok.value, site, dagger)


def parse_terms(expr: str) -> list[Term]:
    """Parse ``expr`` into its term list without binding it to a space."""
    if not expr.strip():
        raise ParseError("empty expression", 0)
    return _Parser(expr).expr()


def _factor_operator(f: Factor, space: HilbertSpace) -> Operator:
    dims = space.dims
    if f.site is None:
        if f.name == "id":
            return identity(dims)
        if len(dims) != 1:
            raise SemanticError(f"operator {f.name!r} needs a site index on a {len(dims)}-factor space")
        idx = 0
    else:
        idx = f.site - 1
        if not 0 <= idx < len(dims):
            raise SemanticError(f"site {f.site} out of range for {len(dims)} factor(s)")
    d = dims[idx]
    if f.name == "id":
        local = identity(d)
    elif f.name == "a":
        if d < 2:
            raise SemanticError(f"mode {idx + 1} has dimension {d}; 'a' needs at least 2")
        local = annihilation(d - 1)
    elif f.name == "n":
        local = number(d - 1)
    else:
        if d != 2:
            raise SemanticError(f"{f.name!r} requires a two-level factor, site {idx + 1} has dim {d}")
        local = pauli(_QUBIT_NAMES[f.name])
    if f.dagger:
        local = local.dag()
    return embed(local, idx, dims)


def terms_to_operator(terms: list[Term], space: HilbertSpace) -> Operator:
    out = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for t in terms:
        m = np.eye(space.total_dim, dtype=complex)
        for f in t.factors:
            m = m @ _factor_operator(f, space).data
        out += t.coeff * m
    return Operator(out, space.dims)


def parse_operator_expression(expr: str, space) -> Operator:
    if not isinstance(space, HilbertSpace):
        space = HilbertSpace(tuple(space))
    return terms_to_operator(parse_terms(expr), space)


def _literal(c: complex) -> str:
    # real part must be non-negative; callers move the sign onto the operator
    im = c.imag
    return f"{c.real!r}{'-' if math.copysign(1.0, im) < 0 else '+'}{abs(im)!r}i"


def _factor_str(f: Factor) -> str:
    return f.name + (str(f.site) if f.site is not None else "") + ("'" if f.dagger else "")


def format_expression(terms: list[Term]) -> str:
    """Canonical text form; ``parse_terms(format_expression(t))`` reproduces ``t``."""
    parts = []
    for k, t in enumerate(terms):
        c = complex(t.coeff)
        negative = math.copysign(1.0, c.real) < 0
        body = "*".join([_literal(-c if negative else c)] + [_factor_str(f) for f in t.factors])
        if k == 0:
            parts.append(("-" if negative else "") + body)
        else:
            parts.append((" - " if negative else " + ") + body)
    return "".join(parts)
