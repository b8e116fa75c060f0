"""Entangled histories, two-time states and temporal Bell / Leggett-Garg bounds."""
from . import bell, bundle, histories, linalg, mixtures, twotime

__all__ = ["bell", "bundle", "histories", "linalg", "mixtures", "twotime"]
__version__ = "0.1.0"
