class HomlabError(Exception):
    """Base class for every error raised by the toolkit."""
