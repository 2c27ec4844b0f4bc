"""Lower bounds for two-agent evacuation-style search on the n-gon and disk."""

from __future__ import annotations

__version__ = "0.1.0"
