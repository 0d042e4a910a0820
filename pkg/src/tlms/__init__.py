"""Singularities of generalized timelike minimal surfaces in Minkowski 3-space."""

from .classify import Classification, Verdict
from .surface import NullCurvePair, WData, associate, conjugate, from_null_curves

__all__ = ["Classification", "NullCurvePair", "Verdict", "WData", "associate", "conjugate",
           "from_null_curves"]
