"""Shared exception types for file and configuration handling."""


class PolemapError(Exception):
    """Base class for package-specific runtime errors."""


class DatasetError(PolemapError):
    """A dataset file or directory is malformed."""


class MapFormatError(PolemapError):
    """A serialized cluster map cannot be decoded."""


class ConfigError(PolemapError):
    """A configuration file contains unknown keys or bad values."""
