"""
Refined analytic torsion at desk scale
"""

__version__ = "0.3.0"
__author__ = "Refined Torsion Team"
__description__ = "Graded determinants, eta invariants and Turaev torsion for finite and circle models"
