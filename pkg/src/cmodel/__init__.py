"""Complete models: bijective re-coordinatizations of finite bit-string universes."""

__version__ = "0.1.0"
