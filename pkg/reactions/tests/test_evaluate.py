import numpy as np
from django.test import SimpleTestCase

from reactions.evaluate import eval_gradient, eval_linearized, evaluate
from reactions.exceptions import ArityError, DomainError, EvalError
from reactions.models import ReactionExpr
from reactions.nodes import Binary, Call, Negate, Number, Power, Variable, VariableKind
from reactions.parser import parse


def smooth_tree(rng, depth, arity):
    """Random expression without division or min/max, with small constants."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return Variable(VariableKind.SPECIES, int(rng.integers(1, arity + 1)))
        return Number(float(rng.uniform(0, 1)))
    choice = int(rng.integers(0, 4))
    if choice == 0:
        return Negate(smooth_tree(rng, depth - 1, arity))
    if choice == 1:
        return Power(smooth_tree(rng, depth - 1, arity), int(rng.integers(1, 4)))
    if choice == 2:
        return Call(str(rng.choice(["sin", "cos", "exp"])), (smooth_tree(rng, depth - 1, arity),))
    op = str(rng.choice(["+", "-", "*"]))
    return Binary(op, smooth_tree(rng, depth - 1, arity), smooth_tree(rng, depth - 1, arity))


class EvaluateTests(SimpleTestCase):
    def test_worked_reaction_value_and_gradient(self):
        expr = parse("u1*u2 - u1^2", 2)
        self.assertEqual(float(evaluate(expr, (1.0, 1.0))), 0.0)
        np.testing.assert_array_equal(eval_gradient(expr, (1.0, 1.0)), [-1.0, 1.0])

    def test_exp_at_zero(self):
        expr = parse("exp(u1)", 1)
        self.assertEqual(float(expr(0.0)), 1.0)
        self.assertEqual(float(expr.gradient(0.0)[0]), 1.0)

    def test_broadcasts_to_input_shape(self):
        u = np.linspace(0.0, 1.0, 7)
        self.assertEqual(evaluate(parse("2", 1), (u,)).shape, (7,))
        self.assertEqual(eval_gradient(parse("u1*u2", 2), (u, 3.0)).shape, (2, 7))
        np.testing.assert_allclose(evaluate(parse("u1*u2", 2), (u, 3.0)), 3.0 * u)

    def test_division_by_zero(self):
        with self.assertRaises(DomainError):
            evaluate(parse("u1/u2", 2), (1.0, np.array([1.0, 0.0])))
        with self.assertRaises(DomainError):
            eval_gradient(parse("1/u1", 1), (0.0,))

    def test_overflow_is_reported(self):
        with self.assertRaises(EvalError):
            evaluate(parse("exp(u1)", 1), (1000.0,))

    def test_wrong_value_count(self):
        with self.assertRaises(ArityError):
            evaluate(parse("u1", 2), (1.0,))

    def test_min_max_subgradients(self):
        expr = parse("max(u1, u2) + min(u1, 0)", 2)
        np.testing.assert_array_equal(eval_gradient(expr, (2.0, 1.0)), [1.0, 0.0])
        np.testing.assert_array_equal(eval_gradient(expr, (-2.0, 1.0)), [1.0, 1.0])

    def test_gradient_is_linear_in_the_expression(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            left, right = smooth_tree(rng, 3, 2), smooth_tree(rng, 3, 2)
            point = tuple(rng.uniform(-1, 1, size=2))
            total = eval_gradient(ReactionExpr(Binary("+", left, right), 2), point)
            parts = eval_gradient(ReactionExpr(left, 2), point) + eval_gradient(ReactionExpr(right, 2), point)
            np.testing.assert_allclose(total, parts, rtol=1e-12, atol=1e-12)

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(1234)
        step = 1e-5
        for _ in range(20):
            expr = ReactionExpr(smooth_tree(rng, 3, 3), 3)
            points = rng.uniform(-1, 1, size=(3, 100))
            grad = eval_gradient(expr, points)
            for k in range(3):
                shift = np.zeros((3, 1))
                shift[k] = step
                fd = (evaluate(expr, points + shift) - evaluate(expr, points - shift)) / (2 * step)
                scale = np.maximum(1.0, np.maximum(np.abs(grad).max(axis=0), np.abs(evaluate(expr, points))))
                np.testing.assert_array_less(np.abs(fd - grad[k]), 1e-6 * scale, err_msg=str(expr))

    def test_linearized_worked_reaction(self):
        expr = parse("u1*u2 - u1^2", 2)
        base = (np.array([0.3, 1.2]), np.array([0.7, 0.1]))
        increment = (np.array([-0.4, 2.0]), np.array([0.5, 0.25]))
        expected = increment[0] * base[1] + base[0] * increment[1] - 2 * base[0] * increment[0]
        np.testing.assert_allclose(eval_linearized(expr, base, increment), expected, rtol=1e-12)
