from homlab.exceptions import HomlabError


class FemError(HomlabError):
    pass


class ConstraintConflict(FemError):
    pass


class NoConvergence(FemError):
    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class FieldError(FemError):
    pass


class FieldFormatError(FieldError):
    pass
