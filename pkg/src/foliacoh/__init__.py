"""Gelfand-Fuchs cohomology, characteristic forms of foliations, and Cech-de Rham double complexes in exact arithmetic."""

__version__ = "0.1.0"
