"""Reduced thin-film micromagnetic energies: kernels, functionals, minimizers and checkers."""

__version__ = "0.1.0"
