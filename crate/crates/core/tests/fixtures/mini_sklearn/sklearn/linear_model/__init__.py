"""Linear models for regression."""

from ._base import LinearRegression
from ._ridge import Ridge
