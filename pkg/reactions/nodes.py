"""Immutable expression tree and its printer."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union


class VariableKind(str, Enum):
    SPECIES = "u"
    CELL = "y"
    SPACE = "x"


FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "min": 2, "max": 2}


@dataclass(frozen=True)
class Number:
    value: float

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"number literals are finite and non-negative, got {self.value!r}")
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class Variable:
    kind: VariableKind
    index: int


@dataclass(frozen=True)
class Negate:
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Power:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Number, Variable, Negate, Binary, Power, Call]

_BINARY_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEGATE, _POWER, _ATOM = 3, 4, 5


def precedence(node: Node) -> int:
    if isinstance(node, Binary):
        return _BINARY_PRECEDENCE[node.op]
    if isinstance(node, Negate):
        return _NEGATE
    if isinstance(node, Power):
        return _POWER
    return _ATOM


def _wrap(node: Node, parenthesize: bool) -> str:
    text = to_text(node)
    return f"({text})" if parenthesize else text


def to_text(node: Node) -> str:
    """Print with the fewest parentheses that still re-parse to the same tree."""
    if isinstance(node, Number):
        return repr(node.value)
    if isinstance(node, Variable):
        return f"{node.kind.value}{node.index}"
    if isinstance(node, Negate):
        return "-" + _wrap(node.operand, precedence(node.operand) < _NEGATE)
    if isinstance(node, Power):
        return f"{_wrap(node.base, precedence(node.base) < _POWER)}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(arg) for arg in node.args)})"
    level = _BINARY_PRECEDENCE[node.op]
    left = _wrap(node.left, precedence(node.left) < level)
    right = _wrap(node.right, precedence(node.right) <= level)
    spacer = " " if level == 1 else ""
    return f"{left}{spacer}{node.op}{spacer}{right}"


def variables(node: Node) -> set:
    if isinstance(node, Variable):
        return {node}
    if isinstance(node, Negate):
        return variables(node.operand)
    if isinstance(node, Power):
        return variables(node.base)
    if isinstance(node, Binary):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        return set().union(*(variables(arg) for arg in node.args))
    return set()
