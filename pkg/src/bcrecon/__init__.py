"""Reconstruction of profinite completions of free abelian groups from
K-theoretic data, and a finite-truncation pipeline comparing Bost-Connes
type semigroup actions of number fields."""

__version__ = "0.1.0"
