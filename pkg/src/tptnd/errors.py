"""Shared exception types."""


class TptndError(Exception):
    pass


class RangeError(TptndError):
    """A numeric value lies outside its legal range (probability, count)."""
