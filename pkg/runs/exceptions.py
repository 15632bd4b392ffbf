from homlab.exceptions import HomlabError


class RunError(HomlabError):
    pass


class ConfigError(RunError):
    """Syntax error in a run configuration file; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MixedProvenance(RunError):
    def __init__(self, path, found, expected):
        self.path = path
        self.found = found
        self.expected = expected
        super().__init__(f"{path} was written by configuration {found[:12]}, not {expected[:12]}")
