"""Exception types shared across the package.

Exit-code mapping used by the CLI:

    2  bad configuration            (ValueError / ConfigError)
    3  missing or unreadable input  (InputError and subclasses, OSError)
    4  remote protocol failure      (ProtocolError)
    5  anything else
"""


class KidError(Exception):
    """Base class for package-specific errors."""


class ConfigError(KidError):
    """Invalid configuration (bad flag value, unknown config key, ...)."""


class InputError(KidError):
    """Missing, unreadable, or malformed input data."""


class DegenerateQueryError(InputError):
    """Retrieval was asked to score an empty context."""


class TrieFormatError(InputError):
    """Serialized trie did not parse.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ProtocolError(KidError):
    """The remote policy provider misbehaved (bad frame, id mismatch, error reply)."""
