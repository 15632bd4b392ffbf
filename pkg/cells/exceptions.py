from homlab.exceptions import HomlabError


class CellError(HomlabError):
    pass


class SolvabilityViolation(CellError):
    def __init__(self, residual, tolerance):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"second cell problem is not solvable: compatibility residual {residual:.3e} exceeds {tolerance:.1e}"
        )


class CellFormatError(CellError):
    pass
