"""swarmzones: deterministic multi-drone zone-operations simulator."""

__version__ = "0.1.0"
