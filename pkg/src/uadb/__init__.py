"""Uncertainty-annotated databases: certain-answer under-approximations
paired with a best-guess world, propagated through queries."""

__version__ = "0.1.0"
