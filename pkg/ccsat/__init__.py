"""Local search and CNF compilation for propositional theories with cardinality atoms."""

__version__ = "0.1.0"
