"""Ridge regression with l2 regularization."""

from ..utils.validation import check_array, column_or_1d
from ._base import LinearModel, _solve_normal_equations


class _CholeskySolver:
    """Solve ridge problems through the regularized normal equations."""

    def solve(self, X, y, alpha):
        """Return ridge coefficients for the given penalty."""
        return _solve_normal_equations(X, y, alpha)


class Ridge(LinearModel):
    """Fit linear least squares with l2 regularization.

    The penalty shrinks the coefficients towards zero, which stabilizes the
    solution when features are correlated.

    Parameters
    ----------
    alpha : float, default=1.0
        Constant that multiplies the l2 term, controlling regularization
        strength. Must be a non negative float.

    Attributes
    ----------
    coef_ : list of float
        Weight vector.
    intercept_ : float
        Independent term in decision function.
    """

    solver: _CholeskySolver

    def __init__(self, alpha=1.0):
        """Initialize ridge regression with its penalty strength."""
        self.alpha = alpha
        self.solver = _CholeskySolver()

    def fit(self, X, y):
        """Fit the ridge regression model."""
        X = check_array(X)
        y = column_or_1d(y)
        Xc, yc, x_mean, y_mean = LinearModel._center(X, y)
        self.coef_ = self.solver.solve(Xc, yc, self.alpha)
        self.intercept_ = y_mean - sum(c * m for c, m in zip(self.coef_, x_mean))
        return self
