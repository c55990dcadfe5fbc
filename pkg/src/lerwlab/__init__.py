"""Loop-erased random walk simulation and exponent-estimation toolkit."""

__version__ = "0.1.0"

from .rng import RandomStream, derive_stream_id  # noqa: F401
