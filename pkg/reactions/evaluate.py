"""
Vectorized evaluation and forward-mode differentiation of expression trees.

``values`` is a sequence of ``arity`` array-likes; they are broadcast against each
other and the result has the broadcast shape. Gradients carry a leading axis of
length ``arity``.
"""

import logging
from typing import Sequence, Tuple

import numpy as np

from reactions.exceptions import ArityError, DomainError, EvalError
from reactions.models import ReactionExpr
from reactions.nodes import Call, Negate, Number, Power, Variable

logger = logging.getLogger(__name__)


def _inputs(expr: ReactionExpr, values) -> Tuple[list, tuple]:
    arrays = [np.asarray(v, dtype=np.float64) for v in values]
    if len(arrays) != expr.arity:
        raise ArityError(f"{expr} expects {expr.arity} value(s), got {len(arrays)}")
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    arrays = [np.broadcast_to(a, shape) for a in arrays]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise EvalError(f"non-finite input to {expr}")
    return arrays, shape


def _value(node, arrays, shape):
    if isinstance(node, Number):
        return np.full(shape, node.value)
    if isinstance(node, Variable):
        return arrays[node.index - 1]
    if isinstance(node, Negate):
        return -_value(node.operand, arrays, shape)
    if isinstance(node, Power):
        return _value(node.base, arrays, shape) ** node.exponent
    if isinstance(node, Call):
        args = [_value(arg, arrays, shape) for arg in node.args]
        if node.name == "min":
            return np.minimum(*args)
        if node.name == "max":
            return np.maximum(*args)
        return getattr(np, node.name)(args[0])
    left = _value(node.left, arrays, shape)
    right = _value(node.right, arrays, shape)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if np.any(right == 0.0):
        raise DomainError(f"division by zero in {node.left!r} / {node.right!r}")
    return left / right


def _dual(node, arrays, shape):
    """(value, gradient) pair; gradient has shape (arity,) + shape."""
    arity = len(arrays)
    if isinstance(node, Number):
        return np.full(shape, node.value), np.zeros((arity,) + shape)
    if isinstance(node, Variable):
        grad = np.zeros((arity,) + shape)
        grad[node.index - 1] = 1.0
        return arrays[node.index - 1], grad
    if isinstance(node, Negate):
        value, grad = _dual(node.operand, arrays, shape)
        return -value, -grad
    if isinstance(node, Power):
        value, grad = _dual(node.base, arrays, shape)
        n = node.exponent
        if n == 0:
            return np.ones(shape), np.zeros_like(grad)
        return value**n, n * value ** (n - 1) * grad
    if isinstance(node, Call):
        pairs = [_dual(arg, arrays, shape) for arg in node.args]
        if node.name in ("min", "max"):
            (a, da), (b, db) = pairs
            pick = a <= b if node.name == "min" else a >= b
            return np.where(pick, a, b), np.where(pick, da, db)
        value, grad = pairs[0]
        if node.name == "sin":
            return np.sin(value), np.cos(value) * grad
        if node.name == "cos":
            return np.cos(value), -np.sin(value) * grad
        result = np.exp(value)
        return result, result * grad
    left, dleft = _dual(node.left, arrays, shape)
    right, dright = _dual(node.right, arrays, shape)
    if node.op == "+":
        return left + right, dleft + dright
    if node.op == "-":
        return left - right, dleft - dright
    if node.op == "*":
        return left * right, dleft * right + left * dright
    if np.any(right == 0.0):
        raise DomainError(f"division by zero in {node.left!r} / {node.right!r}")
    return left / right, (dleft * right - left * dright) / right**2


def _checked(expr, result):
    if not np.all(np.isfinite(result)):
        raise EvalError(f"{expr} is not finite at the given point(s)")
    return result


def evaluate(expr: ReactionExpr, values: Sequence) -> np.ndarray:
    arrays, shape = _inputs(expr, values)
    with np.errstate(over="ignore", invalid="ignore"):
        result = np.array(_value(expr.root, arrays, shape), dtype=np.float64)
    return _checked(expr, result)


def eval_gradient(expr: ReactionExpr, values: Sequence) -> np.ndarray:
    """Forward-mode gradient; ``min``/``max`` ties take the first argument's derivative."""
    arrays, shape = _inputs(expr, values)
    with np.errstate(over="ignore", invalid="ignore"):
        _, grad = _dual(expr.root, arrays, shape)
    return _checked(expr, np.array(grad, dtype=np.float64))


def eval_linearized(expr: ReactionExpr, base: Sequence, increment: Sequence) -> np.ndarray:
    """
    Order-one term of ``expr`` evaluated on ``base + t * increment``, i.e. the
    directional derivative grad R(base) . increment.
    """
    grad = eval_gradient(expr, base)
    step = np.stack(np.broadcast_arrays(*[np.asarray(v, dtype=np.float64) for v in increment]))
    return np.sum(grad * step, axis=0)
