# netsim/aggregation.py
"""
In-network aggregation over a routing tree.

Every sensor waits for its children, folds their summaries together with its
own reading and sends one message to its parent. Two summaries are compared:
the q-digest, compressed at every hop, and the exact list of (value, count)
pairs, which only ever grows on its way to the base station.

A q-digest message costs its full wire encoding, header included. A list
message costs its tuple count times the whole bytes one tuple needs.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from digests import codec
from digests.digest import DigestConfig, empty, merge_all, singleton
from digests.exceptions import DigestDomainError
from digests.oracle import FrequencyVector, exact_quantile, rank_error
from digests.queries import confidence_factor, quantiles

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

QDIGEST = 'qdigest'
LIST = 'list'
SCHEMES = (QDIGEST, LIST)


def tuple_bytes(sigma, node_count):
    """
    Whole bytes per <value or node id, count> tuple: log2(2 sigma) id bits plus
    enough count bits for every sensor in the network.
    """
    config = DigestConfig(sigma=sigma, k=1)
    return math.ceil((codec.id_bits(config.height) + codec.count_bits(node_count)) / 8)


def budget_to_k(budget_bytes, sigma, node_count):
    """
    A third of the tuples `budget_bytes` can carry: a compressed digest holds at
    most 3k. Lowered while a full digest and its header would not fit.
    """
    height = DigestConfig(sigma=sigma, k=1).height
    k = budget_bytes // tuple_bytes(sigma, node_count) // 3
    while k >= 1 and codec.HEADER.size + codec.payload_size(height, node_count, 3 * k) > budget_bytes:
        k -= 1
    if k < 1:
        raise ConfigError(f'a {budget_bytes}-byte budget cannot hold a 3-tuple digest and its header at sigma={sigma}')
    return k


@dataclass(frozen=True)
class ListSummary:
    """Exact width-1 histogram: sorted (value, count) pairs."""
    pairs: tuple

    @classmethod
    def from_counts(cls, counts):
        return cls(pairs=tuple(sorted((value, count) for value, count in counts.items() if count)))

    @property
    def n(self):
        return sum(count for _, count in self.pairs)

    def __len__(self):
        return len(self.pairs)

    def frequencies(self):
        return FrequencyVector(dict(self.pairs))


def digest_message_bytes(digest):
    return codec.encoded_size(digest)


@dataclass(frozen=True)
class ExperimentReport:
    """
    Outcome of one aggregation run.

    `node_bytes[i]` is what sensor i transmitted; the base station sends nothing.
    `summary` is what reached the base station and `oracle` the exact multiset it summarizes.
    """
    scheme: str
    config: DigestConfig
    node_bytes: tuple
    summary: object
    oracle: FrequencyVector
    root: int = 0

    @property
    def max_bytes(self):
        return max(self.node_bytes)

    @property
    def total_bytes(self):
        return sum(self.node_bytes)

    @property
    def theta(self):
        if self.scheme == LIST:
            return 0.0
        return float(confidence_factor(self.summary).theta)

    def nodes_over(self, cap):
        return sum(1 for size in self.node_bytes if size > cap)

    def quantile_answers(self, fractions):
        if self.scheme == LIST:
            received = self.summary.frequencies()
            return [exact_quantile(received, q) for q in fractions]
        return [answer.value for answer in quantiles(self.summary, list(fractions))]

    def quantile_errors(self, fractions):
        """Rank error of each answer as a fraction of n, keyed by q."""
        answers = self.quantile_answers(fractions)
        return {q: rank_error(self.oracle, value, q) / self.oracle.n for q, value in zip(fractions, answers)}


def run_aggregation(tree, readings, config, scheme=QDIGEST, node_count=None, root_senses=False):
    """
    Push every sensor's reading up `tree` and return what each node sent.

    Nodes report deepest level first. `readings[i]` is sensor i's value; the base
    station's own entry is ignored unless `root_senses` is set. `node_count`, the
    bound on any count used to size list tuples, defaults to the tree size.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f'unknown scheme {scheme!r}; expected one of {", ".join(SCHEMES)}')
    if len(readings) != tree.node_count:
        raise ConfigError(f'{len(readings)} readings for {tree.node_count} sensors')
    for node, value in enumerate(readings):
        if not 1 <= value <= config.sigma:
            raise DigestDomainError(f'sensor {node} read {value}, outside [1, {config.sigma}]')

    list_tuple_bytes = tuple_bytes(config.sigma, node_count or tree.node_count)
    node_bytes = [0] * tree.node_count
    inbox = {}
    for node in tree.bottom_up():
        received = [inbox.pop(child) for child in tree.children[node]]
        senses = node != tree.root or root_senses
        if scheme == QDIGEST:
            parts = [singleton(readings[node], config)] if senses else []
            summary = merge_all(received + parts) if received or parts else empty(config)
        else:
            summary = Counter()
            for counts in received:
                summary.update(counts)
            if senses:
                summary[readings[node]] += 1

        if node == tree.root:
            break
        node_bytes[node] = digest_message_bytes(summary) if scheme == QDIGEST else len(summary) * list_tuple_bytes
        inbox[node] = summary

    if scheme == LIST:
        summary = ListSummary.from_counts(summary)
    aggregated = [value for node, value in enumerate(readings) if node != tree.root or root_senses]
    report = ExperimentReport(scheme=scheme, config=config, node_bytes=tuple(node_bytes), summary=summary,
                              oracle=FrequencyVector.from_readings(aggregated, sigma=config.sigma),
                              root=tree.root)
    logger.debug('%s aggregation over %d sensors: max %d bytes, total %d bytes',
                 scheme, tree.node_count, report.max_bytes, report.total_bytes)
    return report


@dataclass(frozen=True)
class ResidualPowerDistribution:
    """Remaining battery fraction of every sensor after one query."""
    fractions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'fractions', np.sort(np.asarray(self.fractions, dtype=float)))

    @property
    def minimum(self):
        return float(self.fractions[0])

    def percentile(self, p):
        return float(np.percentile(self.fractions, p))

    def count_below(self, level):
        return int(np.searchsorted(self.fractions, level, side='left'))

    def cdf(self, levels=None):
        """(level, number of sensors left with less than level) for each level, ascending."""
        if levels is None:
            levels = np.unique(self.fractions)
        return [(float(level), self.count_below(level)) for level in sorted(levels)]


def residual_power(report, initial, cost_per_byte=1):
    """P = 1 - bytes * cost / initial per sensor, floored at zero."""
    if initial <= 0:
        raise ConfigError(f'initial power must be positive, got {initial}')
    spent = np.asarray(report.node_bytes, dtype=float) * cost_per_byte
    exhausted = int((spent >= initial).sum())
    if exhausted:
        logger.warning('%d sensors exhausted their %g units of power in a single query', exhausted, initial)
    return ResidualPowerDistribution(np.maximum(0.0, 1.0 - spent / initial))


def message_size_ccdf(report, sizes):
    """For each size m, how many sensors sent more than m bytes."""
    ordered = np.sort(np.asarray(report.node_bytes))
    return [(size, int(len(ordered) - np.searchsorted(ordered, size, side='right'))) for size in sizes]


def queries_until_exhaustion(report, initial, cost_per_byte=1):
    """How many identical queries the network answers before its busiest sensor runs dry."""
    busiest = report.max_bytes * cost_per_byte
    if busiest == 0:
        return math.inf
    return int(initial // busiest)
