"""Gravitational form factor of oscillator geometry pairs."""

__version__ = "0.1.0"
