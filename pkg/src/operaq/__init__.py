"""operaq: symbolic-numeric tools for finite-dimensional quantum processes."""

from . import (
    channels,
    errors,
    ideals,
    io,
    linalg,
    monad,
    multilinear,
    operad,
    sampling,
)

__all__ = [
    "channels",
    "errors",
    "ideals",
    "io",
    "linalg",
    "monad",
    "multilinear",
    "operad",
    "sampling",
]
__version__ = "0.1.0"
