# digests/oracle.py
"""
Exact answers computed from the raw readings. Slow but trivially correct:
tests and the simulator's error columns compare digest answers against these.
"""
import math
from bisect import bisect_left, bisect_right
from collections import Counter
from collections.abc import Mapping
from itertools import accumulate

from .digest import _integer
from .exceptions import DigestDomainError


class FrequencyVector(Mapping):
    """
    An exact multiset of readings, as value -> frequency.

    Zero frequencies are dropped. When `sigma` is given every value must lie in
    [1, sigma]; otherwise values only need to be positive.
    """

    def __init__(self, frequencies=None, sigma=None):
        cleaned = {}
        for value, frequency in (frequencies or {}).items():
            value = _integer(value, 'value')
            frequency = _integer(frequency, f'frequency of {value}')
            if value < 1 or (sigma is not None and value > sigma):
                raise DigestDomainError(f'value {value} outside [1, {sigma}]')
            if frequency < 0:
                raise DigestDomainError(f'frequency of {value} is negative')
            if frequency:
                cleaned[value] = frequency
        self.sigma = sigma
        self._values = sorted(cleaned)
        self._frequencies = cleaned
        # _below[i] readings are smaller than _values[i]; _below[-1] is n
        self._below = [0, *accumulate(cleaned[value] for value in self._values)]

    @classmethod
    def from_readings(cls, readings, sigma=None):
        return cls(Counter(_integer(value, 'reading') for value in readings), sigma=sigma)

    @property
    def n(self):
        return self._below[-1]

    def __getitem__(self, value):
        return self._frequencies[value]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f'FrequencyVector(n={self.n}, distinct={len(self)})'


def exact_rank(f, x):
    """Number of readings strictly less than x."""
    return f._below[bisect_left(f._values, x)]


def exact_quantile(f, q):
    """The reading at 1-based position ceil(q*n) of the sorted multiset."""
    if f.n == 0:
        raise DigestDomainError('quantile of an empty multiset')
    position = max(1, math.ceil(q * f.n))
    return f._values[bisect_left(f._below, position) - 1]


def exact_frequent(f, s):
    return {value for value, frequency in f._frequencies.items() if frequency > s * f.n}


def exact_range(f, low, high):
    """Readings in the closed range [low, high]."""
    return f._below[bisect_right(f._values, high)] - f._below[bisect_left(f._values, low)]


def rank_error(f, value, q):
    """
    How far `value` is from being a true q-quantile, in ranks.

    Zero when some copy of `value` sits at rank q*n; otherwise the distance from
    q*n to the nearest end of the rank interval [rank(value), rank(value + 1)].
    """
    target = q * f.n
    return max(0, exact_rank(f, value) - target, target - exact_rank(f, value + 1))
