"""Frequency-domain encoding of amino-acid sequences and ensemble learning on top of it."""

__version__ = "0.1.0"
