"""Bell-inequality bounds, tightness certificates and Tsirelson-preserving modifications."""

__version__ = "0.1.0"
