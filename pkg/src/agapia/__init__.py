"""AGAPIA v0.1 toolchain: parse, type-check, run, and verify structured rv-programs."""

__version__ = "0.1.0"
