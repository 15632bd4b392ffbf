"""
Recursive-descent parser for the reaction language.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' INTEGER)*
    primary := NUMBER | VARIABLE | FUNCTION '(' expr (',' expr)* ')' | '(' expr ')'
"""

import re
from dataclasses import dataclass
from typing import List

from reactions.exceptions import ArityError, ParseError
from reactions.models import ReactionExpr
from reactions.nodes import FUNCTIONS, Binary, Call, Negate, Number, Power, Variable, VariableKind

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)
_VARIABLE = re.compile(r"([uyx])(\d+)$")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def tokenize(text: str) -> List[Token]:
    tokens, index = [], 0
    while index < len(text):
        if text[index:].strip() == "":
            break
        match = _TOKEN.match(text, index)
        if match is None or match.lastgroup is None:
            start = index + len(text[index:]) - len(text[index:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", _byte_offset(text, start),
                             {"number", "identifier", "operator"})
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), _byte_offset(text, match.start(kind))))
        index = match.end()
    tokens.append(Token("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str, arity: int, kind: VariableKind):
        self.tokens = tokenize(text)
        self.position = 0
        self.arity = arity
        self.kind = kind

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def _advance(self) -> Token:
        token = self.current
        self.position += 1
        return token

    def _expect(self, text: str) -> Token:
        if self.current.text != text or self.current.kind == "end":
            self._fail({repr(text)})
        return self._advance()

    def _fail(self, expected):
        token = self.current
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ParseError(f"unexpected {found}", token.offset, expected)

    def parse(self):
        node = self.expr()
        if self.current.kind != "end":
            self._fail({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.current.text in ("+", "-") and self.current.kind == "op":
            op = self._advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.current.text in ("*", "/") and self.current.kind == "op":
            op = self._advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.current.kind == "op" and self.current.text == "-":
            self._advance()
            return Negate(self.unary())
        return self.power()

    def power(self):
        node = self.primary()
        while self.current.kind == "op" and self.current.text == "^":
            self._advance()
            token = self.current
            if token.kind != "number" or not token.text.isdigit():
                self._fail({"integer exponent"})
            self._advance()
            node = Power(node, int(token.text))
        return node

    def primary(self):
        token = self.current
        if token.kind == "number":
            self._advance()
            value = float(token.text)
            if value == float("inf"):
                raise ParseError(f"number {token.text} overflows", token.offset)
            return Number(value)
        if token.kind == "name":
            return self._name()
        if token.kind == "op" and token.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        self._fail({"number", "variable", "function", "'('", "'-'"})

    def _name(self):
        token = self._advance()
        if token.text in FUNCTIONS:
            self._expect("(")
            args = [self.expr()]
            while self.current.kind == "op" and self.current.text == ",":
                self._advance()
                args.append(self.expr())
            self._expect(")")
            if len(args) != FUNCTIONS[token.text]:
                raise ParseError(
                    f"{token.text} takes {FUNCTIONS[token.text]} argument(s), got {len(args)}", token.offset
                )
            return Call(token.text, tuple(args))
        match = _VARIABLE.match(token.text)
        if match is None or match.group(1) != self.kind.value:
            expected = {f"{self.kind.value}1..{self.kind.value}{self.arity}"} | set(FUNCTIONS)
            raise ParseError(f"unknown identifier {token.text!r}", token.offset, expected)
        index = int(match.group(2))
        if not 1 <= index <= self.arity:
            raise ArityError(
                f"{token.text} at byte {token.offset} is outside the declared arity "
                f"{self.kind.value}1..{self.kind.value}{self.arity}"
            )
        return Variable(self.kind, index)


def parse(text: str, arity: int, kind: VariableKind = VariableKind.SPECIES) -> ReactionExpr:
    """Parse ``text`` into a ReactionExpr over ``arity`` variables of the given kind."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, {"number", "variable", "function", "'('", "'-'"})
    kind = VariableKind(kind)
    if arity < 1:
        raise ArityError(f"arity must be at least 1, got {arity}")
    return ReactionExpr(_Parser(text, arity, kind).parse(), arity, kind)
