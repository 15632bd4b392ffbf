from homlab.exceptions import HomlabError


class ExpressionError(HomlabError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class ArityError(ExpressionError):
    pass


class EvalError(ExpressionError):
    pass


class DomainError(EvalError):
    pass
