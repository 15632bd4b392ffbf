from homlab.exceptions import HomlabError


class MicroError(HomlabError):
    pass


class PicardNoConvergence(MicroError):
    """Raised after ``max_iter`` sweeps; carries the partial report and the last iterate."""

    def __init__(self, report, diverging: bool, values=None):
        self.report = report
        self.diverging = diverging
        self.values = values
        state = "diverging" if diverging else "stagnating"
        last = report.residuals[-1] if report.residuals else float("nan")
        super().__init__(
            f"{report.label}: Picard iteration did not converge in {report.n} sweeps "
            f"(last residual {last:.3e}, {state})"
        )
