"""Exception hierarchy shared across the package."""


class LemmaDisambError(Exception):
    pass


class ParseError(LemmaDisambError, ValueError):
    """A data file line could not be parsed."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"line {lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class BackendError(LemmaDisambError):
    """The analyzer or LLM backend failed."""

    def __init__(self, message, stderr=""):
        self.stderr = stderr
        super().__init__(message)


class CredentialError(BackendError):
    pass


class ReplayMissError(BackendError):
    pass


class NetworkError(BackendError):
    """Transport failure or HTTP error that survived all retries."""


class ExtractionError(LemmaDisambError):
    pass


class AlignmentError(LemmaDisambError):
    pass


class ConfigError(LemmaDisambError):
    pass
