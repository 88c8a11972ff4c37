"""Ordinary least squares and shared linear model helpers."""

from ..base import BaseEstimator
from ..utils.validation import check_array, check_is_fitted


def _solve_normal_equations(X, y, alpha=0.0):
    """Solve the regularized normal equations for the coefficients.

    Builds the Gram matrix of X plus alpha on the diagonal and solves the
    resulting square system with Gaussian elimination.

    Parameters
    ----------
    X : list of rows of shape (n_samples, n_features)
        Centered training data.
    y : list of shape (n_samples,)
        Centered target values.
    alpha : float, default=0.0
        Regularization strength added to the diagonal.

    Returns
    -------
    coef : list of float
        Solution of the linear system.
    """
    n = len(X[0])
    A = [[sum(r[i] * r[j] for r in X) + (alpha if i == j else 0.0) for j in range(n)] for i in range(n)]
    b = [sum(r[i] * t for r, t in zip(X, y)) for i in range(n)]

    def pivot(col):
        """Pick the row with the largest entry in a column."""
        return max(range(col, n), key=lambda i: abs(A[i][col]))

    for c in range(n):
        p = pivot(c)
        A[c], A[p] = A[p], A[c]
        b[c], b[p] = b[p], b[c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c] if A[c][c] else 0.0
            A[r] = [x - f * y_ for x, y_ in zip(A[r], A[c])]
            b[r] -= f * b[c]
    coef = [0.0] * n
    for c in reversed(range(n)):
        s = b[c] - sum(A[c][k] * coef[k] for k in range(c + 1, n))
        coef[c] = s / A[c][c] if A[c][c] else 0.0
    return coef


class LinearModel(BaseEstimator):
    """Base class for linear models.

    Holds the prediction logic shared by every linear regressor once the
    coefficients and the intercept are fitted.
    """

    def predict(self, X):
        """Predict using the linear model."""
        check_is_fitted(self, ["coef_", "intercept_"])
        X = check_array(X)
        return [sum(c * v for c, v in zip(self.coef_, r)) + self.intercept_ for r in X]

    @staticmethod
    def _center(X, y):
        """Center the data and target around their means.

        Returns the centered data, the centered target and both means so
        the intercept can be recovered after fitting.
        """
        n = len(X)
        x_mean = [sum(c) / n for c in zip(*X)]
        y_mean = sum(y) / n
        Xc = [[v - m for v, m in zip(r, x_mean)] for r in X]
        yc = [t - y_mean for t in y]
        return Xc, yc, x_mean, y_mean


class LinearRegression(LinearModel):
    """Fit ordinary least squares linear regression.

    Minimizes the residual sum of squares between the observed targets and
    the targets predicted by the linear approximation.

    Attributes
    ----------
    coef_ : list of float
        Estimated coefficients for the linear regression problem.
    intercept_ : float
        Independent term in the linear model.
    """

    def fit(self, X, y):
        """Fit the linear model to training data."""
        X = check_array(X)
        Xc, yc, x_mean, y_mean = LinearModel._center(X, y)
        self.coef_ = _solve_normal_equations(Xc, yc)
        self.intercept_ = y_mean - sum(c * m for c, m in zip(self.coef_, x_mean))
        return self
