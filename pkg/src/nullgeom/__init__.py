"""Numerical differential geometry of codimension-two spacelike submanifolds
inside null hypersurfaces of Minkowski, Robertson-Walker and de Sitter
spacetimes."""

__version__ = "0.1.0"
