"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(Exception):
    """Raised when a configuration file is missing, unparsable, or invalid.

    Carries a human-readable location (file path, JSON key, or line number)
    so the CLI can point at the offending spot.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class IncompleteDataError(Exception):
    """Raised when a count table lacks rows a reconstruction needs.

    ``missing`` lists the absent setting labels verbatim.
    """

    def __init__(self, missing: list[str]):
        self.missing = sorted(missing)
        preview = ", ".join(self.missing[:6])
        if len(self.missing) > 6:
            preview += f", ... ({len(self.missing)} total)"
        super().__init__(f"count table is missing required settings: {preview}")
