"""Numerical checks of frame, current-algebra and BRST identities on almost-Kaehler manifolds."""

__version__ = "0.1.0"
