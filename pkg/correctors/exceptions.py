from homlab.exceptions import HomlabError


class CorrectorError(HomlabError):
    pass


class MeshMismatch(CorrectorError):
    pass


class InsufficientPoints(CorrectorError):
    def __init__(self, count, needed=3):
        self.count = count
        self.needed = needed
        super().__init__(f"a rate fit needs at least {needed} epsilon values, got {count}")
