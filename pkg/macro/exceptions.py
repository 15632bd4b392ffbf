from homlab.exceptions import HomlabError


class MacroError(HomlabError):
    pass


class InvalidMacroProblem(MacroError):
    pass
