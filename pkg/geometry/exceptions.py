from homlab.exceptions import HomlabError


class GeometryError(HomlabError):
    pass


class QualityFailure(GeometryError):
    def __init__(self, min_angle, floor):
        self.min_angle = min_angle
        self.floor = floor
        super().__init__(
            f"mesh minimum angle {min_angle:.2f} deg is below the quality floor {floor:.2f} deg"
        )


class TilingError(GeometryError):
    pass


class MeshFormatError(GeometryError):
    pass
