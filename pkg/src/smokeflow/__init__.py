"""2D smoke-flow toolkit: simulation, stream functions, streamline sketches,
sketch-driven flow reconstruction, and a session service for interactive use."""

from .fields import (
    CELL,
    NODE,
    FieldFormatError,
    Grid,
    MacVelocity,
    ScalarField,
    read_field,
    sample_scalar,
    sample_velocity,
    write_field,
)

__all__ = [
    "CELL",
    "NODE",
    "FieldFormatError",
    "Grid",
    "MacVelocity",
    "ScalarField",
    "read_field",
    "sample_scalar",
    "sample_velocity",
    "write_field",
]

__version__ = "0.1.0"
