"""Direct and inverse scattering for the matrix NLS equation."""

from ._mnls import (
    MnlsError,
    forward,
    materialize,
    parse_complex,
    propagate,
    read_field,
    reconstruct,
    reflection,
    roundtrip,
    window,
    write_field,
)

__all__ = [
    "MnlsError",
    "forward",
    "materialize",
    "parse_complex",
    "propagate",
    "read_field",
    "reconstruct",
    "reflection",
    "roundtrip",
    "window",
    "write_field",
]
