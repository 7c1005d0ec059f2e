# digests/queries.py
"""
Queries answered from a single digest: quantiles, inverse quantiles, range
counts, consensus (frequent values), equi-width histograms and the confidence
factor certifying how far any quantile answer can be off.

Quantile-style queries scan the post-order list L: buckets sorted by the right
end of their range, smaller ranges first when two share a right end.
"""
import logging
import numbers
from dataclasses import dataclass
from fractions import Fraction

from .digest import is_leaf, node_range
from .exceptions import DigestDomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueryAnswer:
    """
    A query result with its a-priori error budget ceil(epsilon * n), epsilon = log2(sigma)/k.

    Quantile queries fill `value`; rank-style queries (inverse quantile, range) fill `rank`.
    """
    value: int = None
    rank: int = None
    error_budget: int = 0


@dataclass(frozen=True)
class ConfidenceReport:
    """Digest-specific certificate: no quantile answer is off by more than theta * n ranks."""
    theta: Fraction
    n: int

    @property
    def max_rank_error(self):
        return self.theta * self.n


def error_budget(digest):
    config = digest.config
    return -(-config.height * digest.n // config.k)


def _check_fraction(q, name):
    if isinstance(q, bool) or not isinstance(q, numbers.Real) or not 0 < q < 1:
        raise DigestDomainError(f'{name} must lie strictly between 0 and 1, got {q!r}')


def _check_value(digest, x, name='value'):
    if isinstance(x, bool) or not isinstance(x, numbers.Integral) or not 1 <= x <= digest.config.sigma:
        raise DigestDomainError(f'{name} {x!r} outside [1, {digest.config.sigma}]')


def _require_readings(digest):
    if digest.is_empty():
        raise DigestDomainError('query on an empty digest')


def post_order(digest):
    """
    The list L as (low, high, node id, count), ordered by high then by width.
    """
    capacity = digest.config.capacity
    spans = []
    for node_id, count in digest.buckets.items():
        low, high = node_range(node_id, capacity)
        spans.append((high, high - low, low, node_id, count))
    spans.sort()
    return [(low, high, node_id, count) for high, _, low, node_id, count in spans]


def quantile(digest, q):
    """
    Estimate the q-quantile: the right end of the first bucket in L at which
    the running count reaches q*n.

    The answer never undershoots: at least q*n readings are <= the value, and
    fewer than (q + epsilon)*n readings are strictly below it.
    """
    return quantiles(digest, (q,))[0]


def quantiles(digest, fractions):
    """Answer several quantile fractions in a single scan of L, in the order given."""
    for q in fractions:
        _check_fraction(q, 'q')
    _require_readings(digest)

    sigma = digest.config.sigma
    budget = error_budget(digest)
    pending = sorted(range(len(fractions)), key=lambda index: fractions[index])
    answers = [None] * len(fractions)
    running = 0
    position = 0
    for _, high, _, count in post_order(digest):
        running += count
        while position < len(pending) and running >= fractions[pending[position]] * digest.n:
            answers[pending[position]] = QueryAnswer(value=min(high, sigma), error_budget=budget)
            position += 1
        if position == len(pending):
            break
    return answers


def _rank_below(digest, x):
    if x > digest.config.sigma:
        return digest.n
    capacity = digest.config.capacity
    return sum(count for node_id, count in digest.buckets.items() if node_range(node_id, capacity)[1] < x)


def inverse_quantile(digest, x):
    """
    Estimate rank(x), the number of readings strictly below x, as the total count
    of buckets lying entirely below x. Readings hidden in buckets that straddle x
    make this an undercount by at most epsilon * n.
    """
    _check_value(digest, x)
    return QueryAnswer(rank=_rank_below(digest, x), error_budget=error_budget(digest))


def range_count(digest, low, high):
    """Estimate how many readings fall in the closed range [low, high]."""
    _check_value(digest, low, 'low')
    _check_value(digest, high, 'high')
    if low > high:
        raise DigestDomainError(f'empty range [{low}, {high}]')
    count = _rank_below(digest, high + 1) - _rank_below(digest, low)
    return QueryAnswer(rank=count, error_budget=error_budget(digest))


def consensus(digest, s):
    """
    Values reported by more than s*n sensors, as (value, stored count) pairs.

    Every unit-width bucket whose count exceeds (s - epsilon)*n is returned, so no
    value above s*n is missed; values between (s - epsilon)*n and s*n may appear too.
    """
    _check_fraction(s, 's')
    _require_readings(digest)
    config = digest.config
    cutoff = (Fraction(s) - config.epsilon) * digest.n
    if cutoff < 0:
        logger.warning('consensus s=%s is below epsilon=%s: every stored value qualifies', s, float(config.epsilon))
    capacity = config.capacity
    return sorted(
        (node_id - capacity + 1, count)
        for node_id, count in digest.buckets.items()
        if is_leaf(node_id, capacity) and count > cutoff
    )


def confidence_factor(digest):
    """
    theta = heaviest path weight / n, where a path runs from the root down to a
    stored node and counts the stored ancestors plus the node itself unless it
    is a leaf. A leaf's own count is exact for its value, so it adds no error.
    """
    if digest.is_empty():
        return ConfidenceReport(theta=Fraction(0), n=0)
    capacity = digest.config.capacity
    buckets = digest.buckets
    heaviest = 0
    for node_id, count in buckets.items():
        weight = 0 if is_leaf(node_id, capacity) else count
        ancestor = node_id >> 1
        while ancestor:
            weight += buckets.get(ancestor, 0)
            ancestor >>= 1
        heaviest = max(heaviest, weight)
    return ConfidenceReport(theta=Fraction(heaviest, digest.n), n=digest.n)


def histogram(digest, buckets):
    """Equi-width histogram over [1, sigma] as (low, high, estimated count) rows."""
    sigma = digest.config.sigma
    if isinstance(buckets, bool) or not isinstance(buckets, numbers.Integral) or not 1 <= buckets <= sigma:
        raise DigestDomainError(f'bucket count must lie in [1, {sigma}], got {buckets!r}')
    return [(low, high, range_count(digest, low, high).rank) for low, high in equi_width_edges(sigma, buckets)]


def equi_width_edges(sigma, buckets):
    return [(1 + index * sigma // buckets, (index + 1) * sigma // buckets) for index in range(buckets)]


