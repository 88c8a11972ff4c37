"""Metrics for evaluating regression predictions."""

from ..utils.validation import column_or_1d


def _check_reg_targets(y_true, y_pred):
    """Check that y_true and y_pred belong to the same regression task.

    Both targets are flattened and must contain the same number of
    samples.
    """
    y_true = column_or_1d(y_true)
    y_pred = column_or_1d(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred have different number of samples")
    return y_true, y_pred


def mean_squared_error(y_true, y_pred):
    """Compute the mean squared error regression loss.

    The loss is the average of the squared differences between the
    predicted and the true targets.

    Parameters
    ----------
    y_true : list of shape (n_samples,)
        Ground truth (correct) target values.
    y_pred : list of shape (n_samples,)
        Estimated target values.

    Returns
    -------
    loss : float
        A non negative floating point value, the best value is 0.0.
    """
    y_true, y_pred = _check_reg_targets(y_true, y_pred)
    return sum((a - b) ** 2 for a, b in zip(y_true, y_pred)) / len(y_true)


def mean_absolute_error(y_true, y_pred):
    """Compute the mean absolute error regression loss."""
    y_true, y_pred = _check_reg_targets(y_true, y_pred)
    return sum(abs(a - b) for a, b in zip(y_true, y_pred)) / len(y_true)


def r2_score(y_true, y_pred):
    """Compute the coefficient of determination regression score.

    The best possible score is one. A constant model that always predicts
    the mean of the target gets a score of zero.

    Parameters
    ----------
    y_true : list of shape (n_samples,)
        Ground truth (correct) target values.
    y_pred : list of shape (n_samples,)
        Estimated target values.

    Returns
    -------
    z : float
        The R2 score.
    """
    y_true, y_pred = _check_reg_targets(y_true, y_pred)
    mean = sum(y_true) / len(y_true)
    total = sum((t - mean) ** 2 for t in y_true)
    if not total:
        return 0.0
    return 1.0 - mean_squared_error(y_true, y_pred) * len(y_true) / total
