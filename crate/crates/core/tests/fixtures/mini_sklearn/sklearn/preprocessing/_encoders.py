"""Encoders turning categorical features into numeric arrays."""

from ..base import BaseEstimator, TransformerMixin


class _BaseEncoder(TransformerMixin, BaseEstimator):
    """Base class for encoders that includes the code to categorize.

    Categories are learned per column and kept in sorted order so the
    encoding is stable across runs.

    Attributes
    ----------
    categories_ : list of lists
        The categories of each feature determined during fitting, in
        sorted order.
    """

    def _fit(self, X):
        """Collect the sorted categories of every column."""
        rows = [list(r) for r in X]
        self.categories_ = [sorted(set(c)) for c in zip(*rows)]
        return rows

    def _encode_value(self, column, value):
        """Look up the position of a category in a fitted column."""
        cats = self.categories_[column]
        if value not in cats:
            raise ValueError("Found unknown category %r in column %d" % (value, column))
        return cats.index(value)


class OneHotEncoder(_BaseEncoder):
    """Encode categorical features as a one hot numeric array.

    Each category of each column becomes its own binary indicator column.

    Parameters
    ----------
    handle_unknown : {"error", "ignore"}, default="error"
        Whether to raise an error or ignore if an unknown categorical
        feature is present during transform.
    """

    def __init__(self, handle_unknown="error"):
        """Initialize the encoder with the unknown category policy."""
        self.handle_unknown = handle_unknown

    def fit(self, X, y=None):
        """Fit the one hot encoder to X."""
        _BaseEncoder._fit(self, X)
        return self

    def transform(self, X):
        """Transform X using one hot encoding.

        Unknown categories raise an error unless the encoder was configured
        to ignore them, in which case they encode as all zeros.

        Parameters
        ----------
        X : list of rows of shape (n_samples, n_features)
            The data to encode.

        Returns
        -------
        X_out : list of rows of shape (n_samples, n_encoded_features)
            Transformed input.
        """
        out = []
        for r in X:
            row = []
            for j, v in enumerate(r):
                width = len(self.categories_[j])
                hot = [0.0] * width
                if v in self.categories_[j]:
                    hot[self.categories_[j].index(v)] = 1.0
                elif self.handle_unknown == "error":
                    raise ValueError("Found unknown category %r" % (v,))
                row.extend(hot)
            out.append(row)
        return out


class OrdinalEncoder(_BaseEncoder):
    """Encode categorical features as an integer array.

    Categories are replaced by their position in the sorted category list
    of their column.
    """

    def fit(self, X, y=None):
        """Fit the ordinal encoder to X."""
        _BaseEncoder._fit(self, X)
        return self

    def transform(self, X):
        """Transform X to ordinal codes."""
        return [[float(self._encode_value(j, v)) for j, v in enumerate(r)] for r in X]
