"""Error taxonomy shared across the toolkit; the CLI maps these to exit codes."""


class CorpusError(ValueError):
    """Malformed or inconsistent corpus data (CLI exit code 2)."""


class OracleError(RuntimeError):
    """Oracle transport, protocol, or budget failure (CLI exit code 3)."""


class ConfigError(ValueError):
    """Bad configuration, flags, or report inputs (CLI exit code 4)."""


class OutOfVocabulary(LookupError):
    """No token of a phrase is present in the embedding table."""
