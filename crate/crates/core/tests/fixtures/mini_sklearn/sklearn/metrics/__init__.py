"""Score functions and performance metrics."""

from ._regression import mean_absolute_error, mean_squared_error, r2_score
