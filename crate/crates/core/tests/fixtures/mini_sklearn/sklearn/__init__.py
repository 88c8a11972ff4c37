"""Machine learning toolkit with estimators, transformers and metrics."""

from .base import BaseEstimator, clone

__all__ = ["BaseEstimator", "clone"]
