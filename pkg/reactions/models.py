from dataclasses import dataclass
from typing import FrozenSet

from reactions.nodes import Node, VariableKind, to_text, variables


@dataclass(frozen=True)
class ReactionExpr:
    """
    A parsed reaction or coefficient expression.

    Species expressions (R_i, F_i) read u1..uN; coefficient expressions (d_i, a_i, b_i)
    read the cell coordinates y1, y2. Instances are immutable and safe to share.
    """

    root: Node
    arity: int
    kind: VariableKind = VariableKind.SPECIES

    def __str__(self):
        return to_text(self.root)

    @property
    def text(self) -> str:
        return to_text(self.root)

    @property
    def indices(self) -> FrozenSet[int]:
        """1-based indices of the variables the expression actually reads."""
        return frozenset(v.index for v in variables(self.root))

    @property
    def is_constant(self) -> bool:
        return not self.indices

    def __call__(self, *values):
        from reactions.evaluate import evaluate

        return evaluate(self, values)

    def gradient(self, *values):
        from reactions.evaluate import eval_gradient

        return eval_gradient(self, values)
