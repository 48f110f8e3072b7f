"""Runtime checker for an invariant protocol based on ownership and subject/observer collaboration."""

__version__ = "0.1.0"
