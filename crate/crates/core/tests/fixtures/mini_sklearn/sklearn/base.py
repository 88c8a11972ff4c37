"""Base classes shared by every estimator."""

import copy


def clone(estimator):
    """Construct a new unfitted estimator with the same parameters.

    Clone does a deep copy of the model in an estimator without actually
    copying attached data. It returns a new estimator with the same
    parameters that has not been fitted on any data.

    Parameters
    ----------
    estimator : estimator object
        The estimator to be cloned. Its parameters are read through
        ``get_params`` and passed to a fresh instance of the same class.

    Returns
    -------
    estimator : object
        The deep copy of the input, an estimator if input is an estimator.
    """
    params = copy.deepcopy(estimator.get_params())
    return type(estimator)(**params)


class BaseEstimator:
    """Provide parameter access for all estimators.

    Estimators should specify all the parameters that can be set at the
    class level in their ``__init__`` as explicit keyword arguments.
    """

    def get_params(self):
        """Get parameters for this estimator.

        Returns a dictionary mapping parameter names to their values. Fitted
        attributes, which end with an underscore, are left out.

        Returns
        -------
        params : dict
            Parameter names mapped to their values.
        """
        return {k: v for k, v in vars(self).items() if not k.endswith("_")}

    def set_params(self, **params):
        """Set the parameters of this estimator.

        Unknown parameter names raise an error instead of silently creating
        new attributes.

        Parameters
        ----------
        **params : dict
            Estimator parameters.

        Returns
        -------
        self : estimator instance
            Estimator instance.
        """
        valid = self.get_params()
        for key, value in params.items():
            if key not in valid:
                raise ValueError("invalid parameter %s" % key)
            setattr(self, key, value)
        return self

    def __repr__(self):
        """Render the estimator with its parameters."""
        args = ", ".join("%s=%r" % kv for kv in sorted(self.get_params().items()))
        return "%s(%s)" % (type(self).__name__, args)


class TransformerMixin:
    """Mixin class for all transformers."""

    def fit_transform(self, X, y=None):
        """Fit to data, then transform it.

        Fits transformer to X and y and returns a transformed version of X.

        Parameters
        ----------
        X : list of rows of shape (n_samples, n_features)
            Input samples.
        y : list of shape (n_samples,), default=None
            Target values, ignored by unsupervised transformations.

        Returns
        -------
        X_new : list of rows of shape (n_samples, n_features_new)
            Transformed array.
        """
        return self.fit(X, y).transform(X)
