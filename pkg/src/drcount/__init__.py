"""Domain-randomized synthetic datasets for object counting."""

__version__ = "0.1.0"
