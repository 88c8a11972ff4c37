"""Input validation helpers for arrays and fitted estimators."""

from ..exceptions import DataConversionWarning, NotFittedError


def check_array(X):
    """Validate input data as a two dimensional list of rows.

    Every row is converted to a list of floats. Empty input and rows of
    unequal width are rejected with an error that names the problem.

    Parameters
    ----------
    X : iterable of rows
        Input object to check and convert.

    Returns
    -------
    rows : list of lists of float
        The converted and validated rows.

    Raises
    ------
    ValueError
        If the input has no samples or rows of different widths.
    """
    rows = [[float(v) for v in r] for r in X]
    if not rows:
        raise ValueError("Found array with 0 sample(s)")
    _check_consistent_width(rows)
    return rows


def _check_consistent_width(rows):
    """Check that every row has the same number of columns."""
    width = len(rows[0])
    for r in rows:
        if len(r) != width:
            raise ValueError("inconsistent number of features")


def check_is_fitted(estimator, attributes):
    """Check whether the estimator has been fitted.

    Checks if the estimator is fitted by verifying the presence of the
    given fitted attributes and otherwise raises a NotFittedError.

    Parameters
    ----------
    estimator : estimator instance
        Estimator instance for which the check is performed.
    attributes : list of str
        Attribute names that a fitted estimator defines, such as
        ``["coef_", "intercept_"]``.

    Raises
    ------
    NotFittedError
        If any of the attributes is missing.
    """
    missing = [a for a in attributes if not hasattr(estimator, a)]
    if missing:
        raise NotFittedError("%s is not fitted yet" % type(estimator).__name__)


def column_or_1d(y):
    """Ravel column or one dimensional target values.

    A column vector is flattened and reported through a data conversion
    warning that callers may log.

    Parameters
    ----------
    y : iterable
        Input data, either flat or a column vector of one element rows.

    Returns
    -------
    y : list of float
        Flat list of target values.
    """
    y = list(y)
    if y and isinstance(y[0], (list, tuple)):
        warning = DataConversionWarning("a column vector y was passed")
        print(warning)
        return [float(v[0]) for v in y]
    return [float(v) for v in y]
