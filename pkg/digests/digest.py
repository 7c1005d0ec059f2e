# digests/digest.py
"""
The q-digest summary: a sparse set of counted buckets drawn from the complete
binary tree over the value range [1, sigma].

Nodes are addressed by their level-order id: the root is 1, the children of
node i are 2i and 2i+1, and the leaves sigma .. 2*sigma-1 hold the single
values 1 .. sigma from left to right. A digest never stores a zero count.

Every operation here is pure: digests are immutable once built, so they can be
handed between threads or processes and merged in any grouping.
"""
import logging
import operator
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

from .exceptions import DigestDomainError, DigestOverflowError

logger = logging.getLogger(__name__)

COUNT_CAPACITY = 2 ** 64


def _integer(value, what):
    # numpy scalars pass, bools and floats do not
    if isinstance(value, bool):
        raise DigestDomainError(f'{what} must be an integer, got {value!r}')
    try:
        return operator.index(value)
    except TypeError:
        raise DigestDomainError(f'{what} must be an integer, got {value!r}') from None


@dataclass(frozen=True)
class DigestConfig:
    """
    Value range bound and compression factor shared by every digest that may be merged.

    `sigma` is the largest value a reading may take. The tree itself is built over
    `capacity`, sigma rounded up to a power of two, so node arithmetic stays closed.
    """
    sigma: int
    k: int

    def __post_init__(self):
        sigma = _integer(self.sigma, 'sigma')
        k = _integer(self.k, 'k')
        if sigma < 2:
            raise DigestDomainError(f'sigma must be >= 2, got {sigma}')
        if k < 1:
            raise DigestDomainError(f'k must be >= 1, got {k}')
        object.__setattr__(self, 'sigma', sigma)
        object.__setattr__(self, 'k', k)

    @classmethod
    def from_tuple_budget(cls, sigma, tuples):
        """Config whose digests hold at most `tuples` buckets (k = m/3)."""
        return cls(sigma=sigma, k=max(1, tuples // 3))

    @property
    def capacity(self):
        return 1 << (self.sigma - 1).bit_length()

    @property
    def height(self):
        """log2 of the capacity: the number of edges from the root to a leaf."""
        return self.capacity.bit_length() - 1

    @property
    def max_node_id(self):
        return 2 * self.capacity - 1

    @property
    def epsilon(self):
        return Fraction(self.height, self.k)

    def threshold(self, n):
        return n // self.k

    def leaf_id(self, value):
        value = _integer(value, 'value')
        if not 1 <= value <= self.sigma:
            raise DigestDomainError(f'value {value} outside [1, {self.sigma}]')
        return self.capacity + value - 1


def node_depth(node_id):
    return node_id.bit_length() - 1


def parent(node_id):
    return node_id >> 1


def sibling(node_id):
    return node_id ^ 1


def node_range(node_id, sigma):
    """
    Return the closed value interval [min, max] covered by `node_id`.

    `sigma` must be the power-of-two tree capacity the id was drawn from.
    """
    sigma = _integer(sigma, 'sigma')
    if sigma < 2 or sigma & (sigma - 1):
        raise DigestDomainError(f'sigma must be a power of two >= 2, got {sigma}')
    node_id = _integer(node_id, 'node id')
    if not 1 <= node_id <= 2 * sigma - 1:
        raise DigestDomainError(f'node id {node_id} outside [1, {2 * sigma - 1}]')
    depth = node_depth(node_id)
    span = sigma >> depth
    low = (node_id - (1 << depth)) * span + 1
    return low, low + span - 1


def is_leaf(node_id, sigma):
    return node_id >= sigma


class QDigest:
    """
    An immutable q-digest: bucket counts keyed by node id, plus the total count n.

    Build digests with `from_frequencies`, `singleton`, `empty` or `merge`; the
    constructor accepts arbitrary bucket maps (validated for ids and counts, not
    for the digest property) so hand-built fixtures and decoded data fit too.
    """
    __slots__ = ('_config', '_buckets', '_n')

    def __init__(self, config, buckets=None):
        cleaned = {}
        for node_id, count in (buckets or {}).items():
            node_id = _integer(node_id, 'node id')
            count = _integer(count, f'count of node {node_id}')
            if not 1 <= node_id <= config.max_node_id:
                raise DigestDomainError(f'node id {node_id} outside [1, {config.max_node_id}]')
            if count < 0:
                raise DigestDomainError(f'count of node {node_id} is negative')
            if count >= COUNT_CAPACITY:
                raise DigestOverflowError(f'count of node {node_id} exceeds 64 bits')
            if count:
                cleaned[node_id] = count
        n = sum(cleaned.values())
        if n >= COUNT_CAPACITY:
            raise DigestOverflowError(f'total count {n} exceeds 64 bits')
        self._config = config
        self._buckets = cleaned
        self._n = n

    @classmethod
    def _trusted(cls, config, buckets, n):
        digest = cls.__new__(cls)
        digest._config = config
        digest._buckets = buckets
        digest._n = n
        return digest

    @property
    def config(self):
        return self._config

    @property
    def n(self):
        return self._n

    @property
    def buckets(self):
        return MappingProxyType(self._buckets)

    @property
    def threshold(self):
        return self._config.threshold(self._n)

    def count(self, node_id):
        return self._buckets.get(node_id, 0)

    def items(self):
        """(node id, count) pairs in ascending id order."""
        return sorted(self._buckets.items())

    def node_range(self, node_id):
        return node_range(node_id, self._config.capacity)

    def is_empty(self):
        return not self._buckets

    def __len__(self):
        return len(self._buckets)

    def __contains__(self, node_id):
        return node_id in self._buckets

    def __eq__(self, other):
        if not isinstance(other, QDigest):
            return NotImplemented
        return self._config == other._config and self._n == other._n and self._buckets == other._buckets

    __hash__ = None

    def __repr__(self):
        tuples = ', '.join(f'<{node_id},{count}>' for node_id, count in self.items())
        return f'QDigest(sigma={self._config.sigma}, k={self._config.k}, n={self._n}, {{{tuples}}})'


def empty(config):
    return QDigest._trusted(config, {}, 0)


def singleton(value, config):
    """The trivial digest of a single reading: one leaf with count 1."""
    return QDigest._trusted(config, {config.leaf_id(value): 1}, 1)


def from_frequencies(frequencies, config):
    """
    Build a compressed digest from an exact value -> frequency map.

    Every frequency lands on its leaf first; the tree is compressed once at the end.
    """
    buckets = {}
    for value, frequency in frequencies.items():
        frequency = _integer(frequency, f'frequency of {value!r}')
        if frequency < 0:
            raise DigestDomainError(f'frequency of {value!r} is negative')
        if frequency:
            buckets[config.leaf_id(value)] = frequency
    return compress(QDigest(config, buckets))


def compress(digest):
    """
    Merge low-count families bottom up until every family reaches floor(n/k).

    Parents are visited from the level above the leaves up to the root, in
    ascending id within a level. A parent whose own count plus its children's
    is below the threshold absorbs both children. The sweep repeats until it
    merges nothing, because absorbing a node can leave its children short of
    the threshold.
    """
    buckets = dict(digest._buckets)
    absorbed = _compress_buckets(buckets, digest.threshold, digest.config.height)
    logger.debug('compress n=%d k=%d: %d absorptions, %d -> %d buckets',
                 digest.n, digest.config.k, absorbed, len(digest), len(buckets))
    return QDigest._trusted(digest.config, buckets, digest.n)


def _compress_buckets(buckets, threshold, height):
    if threshold <= 0:
        return 0
    absorbed = 0
    while True:
        swept = _sweep(buckets, threshold, height)
        if not swept:
            return absorbed
        absorbed += swept


def _sweep(buckets, threshold, height):
    levels = [set() for _ in range(height + 1)]
    for node_id in buckets:
        levels[node_depth(node_id)].add(node_id)

    absorbed = 0
    for depth in range(height - 1, -1, -1):
        children = levels[depth + 1]
        for parent_id in sorted({child >> 1 for child in children}):
            left, right = parent_id << 1, (parent_id << 1) | 1
            family = buckets.get(parent_id, 0) + buckets.get(left, 0) + buckets.get(right, 0)
            if family < threshold:
                buckets[parent_id] = family
                buckets.pop(left, None)
                buckets.pop(right, None)
                children.discard(left)
                children.discard(right)
                levels[depth].add(parent_id)
                absorbed += 1
    return absorbed


def merge(first, second):
    """Union two digests built with the same config, then compress at floor((n1+n2)/k)."""
    return merge_all((first, second))


def union(digests):
    """Bucket-wise sum of digests sharing a config, left uncompressed."""
    digests = list(digests)
    if not digests:
        raise DigestDomainError('merge needs at least one digest')
    config = digests[0].config
    buckets = {}
    n = 0
    for digest in digests:
        if digest.config != config:
            raise DigestDomainError(f'cannot merge digests with configs {config} and {digest.config}')
        n += digest.n
        for node_id, count in digest._buckets.items():
            total = buckets.get(node_id, 0) + count
            if total >= COUNT_CAPACITY:
                raise DigestOverflowError(f'merged count for node {node_id} exceeds 64 bits')
            buckets[node_id] = total
    if n >= COUNT_CAPACITY:
        raise DigestOverflowError(f'merged total {n} exceeds 64 bits')
    return QDigest._trusted(config, buckets, n)


def merge_all(digests):
    """
    Merge any number of digests in one union-and-compress step.

    A sensor merges its children's digests and its own reading this way.
    """
    return compress(union(digests))


@dataclass(frozen=True)
class Violation:
    node_id: int
    rule: str
    detail: str

    def __str__(self):
        return f'node {self.node_id}: {self.rule}: {self.detail}'


def validate(digest):
    """
    Check a digest against the invariants compress guarantees.

    Returns an empty list for any digest produced by compress or merge. Rules:
    `count` (stored counts are positive), `conservation` (counts sum to n),
    `capacity` (internal nodes other than the root hold at most floor(n/k)),
    `family` (node + parent + sibling reach floor(n/k)) and `size` (at most 3k
    buckets once floor(n/k) >= 1).
    """
    config = digest.config
    threshold = digest.threshold
    buckets = digest._buckets
    violations = []

    if sum(buckets.values()) != digest.n:
        violations.append(Violation(1, 'conservation', f'counts sum to {sum(buckets.values())}, n is {digest.n}'))

    for node_id, count in sorted(buckets.items()):
        if count < 1:
            violations.append(Violation(node_id, 'count', f'stored count {count} is not positive'))
        if node_id == 1:
            continue
        if not is_leaf(node_id, config.capacity) and count > threshold:
            violations.append(Violation(node_id, 'capacity', f'count {count} exceeds floor(n/k) = {threshold}'))
        family = count + buckets.get(parent(node_id), 0) + buckets.get(sibling(node_id), 0)
        if family < threshold:
            violations.append(Violation(node_id, 'family', f'family sum {family} below floor(n/k) = {threshold}'))

    if threshold >= 1 and len(buckets) > 3 * config.k:
        violations.append(Violation(1, 'size', f'{len(buckets)} buckets exceed 3k = {3 * config.k}'))
    return violations
