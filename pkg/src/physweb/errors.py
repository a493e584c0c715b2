"""Exception types shared across the toolkit.

Every error carries a stable ``code`` string (``UNKNOWN_FRAME_TYPE``,
``DUPLICATE_KEY``, ...). The HTTP layer and the CLI surface that code
verbatim, so callers can match on it instead of on message text.
"""

from __future__ import annotations


class PhyswebError(Exception):
    """Base class; ``code`` is the machine-readable error name."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}")


class CodecError(PhyswebError):
    """Malformed frame, URL or SSID."""


class SceneError(PhyswebError):
    """Scene failed validation. ``path`` is a JSON-pointer to the bad field."""

    def __init__(self, code: str, message: str = "", path: str = ""):
        self.path = path
        super().__init__(code, message)

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.code}{where}: {self.message}"


class ScenarioError(SceneError):
    """Scenario file could not be loaded (PARSE_ERROR / VALIDATION_ERROR).

    For validation failures ``reason`` holds the underlying scene error code.
    """

    def __init__(self, code: str, message: str = "", path: str = "", reason: str | None = None):
        self.reason = reason
        super().__init__(code, message, path)


class StoreError(PhyswebError):
    """Attachment store rejected an operation."""


class CorruptRecordError(StoreError):
    """Journal replay hit a bad record.

    ``position`` is the zero-based index of the offending record; ``store``
    holds the state rebuilt from every record before it.
    """

    def __init__(self, position: int, message: str, store=None):
        self.position = position
        self.store = store
        super().__init__("CORRUPT_RECORD", f"record {position}: {message}")
