"""Scaling, centering, normalization and encoding of features."""

from ._data import MinMaxScaler, StandardScaler, normalize
from ._encoders import OneHotEncoder, OrdinalEncoder
