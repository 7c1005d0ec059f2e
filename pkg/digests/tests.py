import base64
import json
import tempfile
from collections import Counter
from fractions import Fraction
from functools import reduce
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from hypothesis import given, settings as hsettings, strategies as st
from rest_framework.test import APIClient

from .codec import HEADER, decode, encode, encoded_size
from .digest import (
    DigestConfig, QDigest, compress, empty, from_frequencies, merge, merge_all,
    node_range, singleton, union, validate,
)
from .exceptions import DigestDecodeError, DigestDomainError, DigestOverflowError
from .oracle import (
    FrequencyVector, exact_frequent, exact_quantile, exact_range, exact_rank, rank_error,
)
from .queries import (
    confidence_factor, consensus, histogram, inverse_quantile, quantile, quantiles, range_count,
)

# Readings behind the worked compression example: 1 once, 3 four times, 4 six times, 5..8 once each.
EXAMPLE_FREQUENCIES = {1: 1, 3: 4, 4: 6, 5: 1, 6: 1, 7: 1, 8: 1}
EXAMPLE_BUCKETS = {1: 1, 6: 2, 7: 2, 10: 4, 11: 6}
EXAMPLE_ENCODING = bytes.fromhex('510103' '000000000000000f' '00000005' '116272a4b6')

SIGMA = 2 ** 16
CORPUS_QUANTILES = (0.01, *(step / 20 for step in range(1, 20)), 0.99)


def example_digest():
    return from_frequencies(EXAMPLE_FREQUENCIES, DigestConfig(sigma=8, k=5))


def example_oracle():
    return FrequencyVector(EXAMPLE_FREQUENCIES, sigma=8)


def assert_sound_quantiles(test, digest, oracle, fractions):
    """Every answer sits in [q*n, (q + epsilon)*n] ranks and within theta*n of a true quantile."""
    config = digest.config
    report = confidence_factor(digest)
    test.assertLessEqual(report.theta, config.epsilon)
    for q, answer in zip(fractions, quantiles(digest, fractions)):
        value = answer.value
        test.assertGreaterEqual(exact_rank(oracle, value + 1), q * oracle.n, (q, value))
        test.assertLessEqual(exact_rank(oracle, value), q * oracle.n + config.height * oracle.n / config.k, (q, value))
        test.assertLessEqual(rank_error(oracle, value, q), report.max_rank_error, (q, value))


def random_merge_tree(rng, readings, config):
    """Split the readings into up to 8 pieces and merge the piece digests in a random order."""
    pieces = np.array_split(readings, int(rng.integers(1, 9)))
    pool = [from_frequencies(Counter(piece.tolist()), config) for piece in pieces]
    while len(pool) > 1:
        first, second = sorted(int(i) for i in rng.choice(len(pool), size=2, replace=False))
        merged = merge(pool[first], pool[second])
        del pool[second], pool[first]
        pool.append(merged)
    return pool[0]


def corpus(seed, instances):
    rng = np.random.default_rng(seed)
    for index in range(instances):
        n = 100_000 if index % 25 == 24 else int(10 ** rng.uniform(1, 4))
        k = int(rng.choice((10, 33, 100)))
        readings = rng.integers(1, SIGMA, size=n, endpoint=True)
        yield rng, DigestConfig(sigma=SIGMA, k=k), readings


readings_strategy = st.lists(st.integers(min_value=1, max_value=64), min_size=1, max_size=300)


class NodeRangeTests(SimpleTestCase):
    def test_root_covers_everything(self):
        self.assertEqual(node_range(1, 8), (1, 8))

    def test_leaf_and_internal_ranges(self):
        self.assertEqual(node_range(11, 8), (4, 4))
        self.assertEqual(node_range(6, 8), (5, 6))
        self.assertEqual(node_range(15, 8), (8, 8))

    def test_children_partition_parent(self):
        for node_id in range(1, 8):
            low, high = node_range(node_id, 8)
            left, right = node_range(2 * node_id, 8), node_range(2 * node_id + 1, 8)
            self.assertEqual((left[0], right[1]), (low, high))
            self.assertEqual(left[1] + 1, right[0])

    def test_out_of_range_id(self):
        with self.assertRaises(DigestDomainError):
            node_range(0, 8)
        with self.assertRaises(DigestDomainError):
            node_range(16, 8)

    def test_sigma_must_be_power_of_two(self):
        with self.assertRaises(DigestDomainError):
            node_range(1, 6)


class DigestConfigTests(SimpleTestCase):
    def test_sigma_rounds_up_to_capacity(self):
        config = DigestConfig(sigma=100, k=4)
        self.assertEqual(config.capacity, 128)
        self.assertEqual(config.height, 7)
        self.assertEqual(config.epsilon, Fraction(7, 4))

    def test_rejects_bad_parameters(self):
        for sigma, k in ((1, 5), (8, 0), (8.0, 5), (True, 5)):
            with self.assertRaises(DigestDomainError):
                DigestConfig(sigma=sigma, k=k)

    def test_numpy_integers_accepted(self):
        self.assertEqual(DigestConfig(sigma=np.int64(8), k=np.int32(5)), DigestConfig(sigma=8, k=5))

    def test_tuple_budget(self):
        self.assertEqual(DigestConfig.from_tuple_budget(SIGMA, 100).k, 33)
        self.assertEqual(DigestConfig.from_tuple_budget(SIGMA, 2).k, 1)


class ConstructionTests(SimpleTestCase):
    def test_worked_compression(self):
        digest = example_digest()
        self.assertEqual(dict(digest.buckets), EXAMPLE_BUCKETS)
        self.assertEqual(digest.n, 15)

    def test_singleton(self):
        config = DigestConfig(sigma=8, k=3)
        self.assertEqual(dict(singleton(5, config).buckets), {12: 1})
        self.assertEqual(from_frequencies({5: 1}, config), singleton(5, config))

    def test_four_values_k_one(self):
        digest = from_frequencies({1: 1, 2: 1, 3: 1, 4: 1}, DigestConfig(sigma=4, k=1))
        self.assertEqual(dict(digest.buckets), {2: 2, 3: 2})

    def test_value_out_of_range(self):
        with self.assertRaises(DigestDomainError):
            from_frequencies({9: 1}, DigestConfig(sigma=8, k=5))
        with self.assertRaises(DigestDomainError):
            singleton(0, DigestConfig(sigma=8, k=5))

    def test_zero_frequencies_not_stored(self):
        digest = from_frequencies({2: 0, 3: 1}, DigestConfig(sigma=8, k=5))
        self.assertEqual(dict(digest.buckets), {10: 1})

    def test_constructor_checks_counts(self):
        config = DigestConfig(sigma=8, k=5)
        with self.assertRaises(DigestDomainError):
            QDigest(config, {16: 1})
        with self.assertRaises(DigestDomainError):
            QDigest(config, {3: -1})
        with self.assertRaises(DigestOverflowError):
            QDigest(config, {3: 2 ** 64})


class CompressTests(SimpleTestCase):
    def test_threshold_zero_is_identity(self):
        config = DigestConfig(sigma=8, k=20)
        digest = QDigest(config, {8: 1, 9: 2, 15: 3})
        self.assertEqual(compress(digest), digest)

    def test_merge_collapses_both_families(self):
        config = DigestConfig(sigma=64, k=10)
        first = QDigest(config, {16: 19, 33: 20, 34: 10, 66: 25, 68: 12, 127: 114})
        second = QDigest(config, {8: 5, 9: 35, 35: 5, 69: 14, 127: 141})
        merged = merge(first, second)
        self.assertEqual(merged.n, 400)
        self.assertEqual(merged.threshold, 40)
        # node 34 absorbs 68 and 69 (36 < 40), node 16 absorbs 33 (39 < 40), then 33 takes in the orphaned 66
        self.assertEqual(dict(merged.buckets), {8: 5, 9: 35, 16: 39, 33: 25, 34: 36, 35: 5, 127: 255})
        self.assertEqual(validate(merged), [])

    def test_merge_with_empty(self):
        config = DigestConfig(sigma=8, k=5)
        raw = QDigest(config, {8: 1, 10: 4, 11: 6, 12: 1, 13: 1, 14: 1, 15: 1})
        self.assertEqual(merge(raw, empty(config)), compress(raw))

    def test_merge_rejects_mismatched_configs(self):
        with self.assertRaises(DigestDomainError):
            merge(singleton(1, DigestConfig(sigma=8, k=5)), singleton(1, DigestConfig(sigma=8, k=6)))
        with self.assertRaises(DigestDomainError):
            merge_all([])

    def test_merging_singletons(self):
        rng = np.random.default_rng(7)
        config = DigestConfig(sigma=SIGMA, k=33)
        values = rng.integers(1, SIGMA, size=500, endpoint=True).tolist()
        digest = reduce(merge, (singleton(value, config) for value in values))
        self.assertEqual(digest.n, 500)
        self.assertLessEqual(len(digest), 3 * config.k)
        self.assertEqual(validate(digest), [])
        assert_sound_quantiles(self, digest, FrequencyVector.from_readings(values), CORPUS_QUANTILES)

    @hsettings(max_examples=150, deadline=None)
    @given(readings_strategy, st.integers(min_value=1, max_value=20))
    def test_compress_idempotent(self, readings, k):
        digest = from_frequencies(Counter(readings), DigestConfig(sigma=64, k=k))
        self.assertEqual(compress(digest), digest)
        self.assertEqual(validate(digest), [])

    @hsettings(max_examples=150, deadline=None)
    @given(readings_strategy, readings_strategy, st.integers(min_value=1, max_value=20))
    def test_merge_commutes(self, left, right, k):
        config = DigestConfig(sigma=64, k=k)
        first = from_frequencies(Counter(left), config)
        second = from_frequencies(Counter(right), config)
        merged = merge(first, second)
        self.assertEqual(merged, merge(second, first))
        self.assertEqual(merged.n, len(left) + len(right))

    @hsettings(max_examples=150, deadline=None)
    @given(readings_strategy, readings_strategy, readings_strategy, st.integers(min_value=1, max_value=20))
    def test_union_is_associative(self, first, second, third, k):
        config = DigestConfig(sigma=64, k=k)
        a, b, c = (from_frequencies(Counter(group), config) for group in (first, second, third))
        combined = union([a, b, c])
        self.assertEqual(union([union([a, b]), c]), combined)
        self.assertEqual(union([a, union([b, c])]), combined)
        self.assertEqual(combined.n, len(first) + len(second) + len(third))
        self.assertEqual(merge_all([a, b, c]), compress(combined))

    @hsettings(max_examples=100, deadline=None)
    @given(st.lists(readings_strategy, min_size=2, max_size=6), st.integers(min_value=1, max_value=20))
    def test_fold_order_keeps_guarantee(self, groups, k):
        config = DigestConfig(sigma=64, k=k)
        digests = [from_frequencies(Counter(group), config) for group in groups]
        oracle = FrequencyVector.from_readings([value for group in groups for value in group])
        left = reduce(merge, digests)
        right = reduce(lambda acc, digest: merge(digest, acc), reversed(digests))
        for digest in (left, right):
            self.assertEqual(digest.n, oracle.n)
            assert_sound_quantiles(self, digest, oracle, (0.1, 0.25, 0.5, 0.75, 0.9))


class ValidateTests(SimpleTestCase):
    def test_compressed_digest_is_valid(self):
        self.assertEqual(validate(example_digest()), [])

    def test_heavy_internal_node(self):
        violations = validate(QDigest(DigestConfig(sigma=8, k=5), {2: 15}))
        self.assertIn('capacity', {violation.rule for violation in violations})
        self.assertEqual(violations[0].node_id, 2)

    def test_light_family(self):
        violations = validate(QDigest(DigestConfig(sigma=8, k=5), {8: 1, 9: 1, 15: 13}))
        self.assertEqual({(v.node_id, v.rule) for v in violations}, {(8, 'family'), (9, 'family')})

    def test_too_many_buckets(self):
        digest = QDigest(DigestConfig(sigma=8, k=1), {node_id: 1 for node_id in range(8, 16)})
        self.assertIn('size', {violation.rule for violation in validate(digest)})


class QueryTests(SimpleTestCase):
    def test_median(self):
        answer = quantile(example_digest(), 0.5)
        self.assertEqual(answer.value, 4)
        self.assertEqual(answer.error_budget, 9)

    def test_batch_matches_single_queries(self):
        digest = example_digest()
        fractions = [0.9, 0.1, 0.5, 0.7]
        self.assertEqual([answer.value for answer in quantiles(digest, fractions)],
                         [quantile(digest, q).value for q in fractions])

    def test_exact_when_uncompressed(self):
        readings = [3, 9, 9, 14, 20, 21, 40]
        digest = from_frequencies(Counter(readings), DigestConfig(sigma=64, k=50))
        oracle = FrequencyVector.from_readings(readings)
        for q in (0.1, 0.3, 0.5, 0.8, 0.99):
            self.assertEqual(quantile(digest, q).value, exact_quantile(oracle, q))

    def test_answers_clamped_to_declared_sigma(self):
        digest = from_frequencies({4: 1, 5: 1}, DigestConfig(sigma=5, k=1))
        self.assertEqual(dict(digest.buckets), {2: 1, 3: 1})
        self.assertEqual(quantile(digest, 0.9).value, 5)

    def test_domain_errors(self):
        digest = example_digest()
        for q in (0, 1, -0.5, 1.5, True):
            with self.assertRaises(DigestDomainError):
                quantile(digest, q)
        with self.assertRaises(DigestDomainError):
            quantile(empty(DigestConfig(sigma=8, k=5)), 0.5)
        with self.assertRaises(DigestDomainError):
            inverse_quantile(digest, 9)
        with self.assertRaises(DigestDomainError):
            range_count(digest, 5, 4)

    def test_inverse_quantile(self):
        digest = example_digest()
        self.assertEqual(inverse_quantile(digest, 4).rank, 4)
        self.assertEqual(inverse_quantile(digest, 1).rank, 0)
        self.assertLessEqual(abs(inverse_quantile(digest, 4).rank - exact_rank(example_oracle(), 4)), 9)

    def test_range_count(self):
        digest = example_digest()
        self.assertEqual(range_count(digest, 3, 4).rank, 10)
        self.assertEqual(range_count(digest, 1, 8).rank, 15)
        self.assertEqual(exact_range(example_oracle(), 3, 4), 10)

    def test_consensus_below_epsilon_returns_every_leaf(self):
        with self.assertLogs('digests.queries', 'WARNING'):
            self.assertEqual(consensus(example_digest(), 0.35), [(3, 4), (4, 6)])

    def test_consensus_exact_digest(self):
        readings = [7] * 6 + [2, 3, 4, 5]
        digest = from_frequencies(Counter(readings), DigestConfig(sigma=8, k=16))
        self.assertEqual([value for value, _ in consensus(digest, 0.5)], [7])

    def test_confidence_factor(self):
        self.assertEqual(confidence_factor(example_digest()).theta, Fraction(3, 15))
        exact = from_frequencies({1: 2, 6: 3}, DigestConfig(sigma=8, k=10))
        self.assertEqual(confidence_factor(exact).theta, 0)

    def test_confidence_covers_every_quantile(self):
        digest, oracle = example_digest(), example_oracle()
        report = confidence_factor(digest)
        for q in CORPUS_QUANTILES:
            self.assertLessEqual(rank_error(oracle, quantile(digest, q).value, q), report.max_rank_error)

    def test_histogram(self):
        digest = example_digest()
        self.assertEqual(histogram(digest, 1), [(1, 8, 15)])
        self.assertEqual(histogram(digest, 4), [(1, 2, 0), (3, 4, 10), (5, 6, 2), (7, 8, 3)])
        with self.assertRaises(DigestDomainError):
            histogram(digest, 0)


class CorpusPropertyTests(SimpleTestCase):
    """Seeded random multisets built through random merge trees, checked against the oracle."""

    def test_size_and_quantile_bounds(self):
        for rng, config, readings in corpus(seed=20240601, instances=1000):
            digest = random_merge_tree(rng, readings, config)
            self.assertEqual(digest.n, len(readings))
            if digest.threshold >= 1:
                self.assertLessEqual(len(digest), 3 * config.k)
            assert_sound_quantiles(self, digest, FrequencyVector.from_readings(readings.tolist()), CORPUS_QUANTILES)

    def test_random_ranges(self):
        for rng, config, readings in corpus(seed=77, instances=100):
            digest = random_merge_tree(rng, readings, config)
            oracle = FrequencyVector.from_readings(readings.tolist())
            tolerance = 2 * config.epsilon * digest.n
            bounds = np.sort(rng.integers(1, SIGMA, size=(100, 2), endpoint=True), axis=1)
            for low, high in bounds.tolist():
                reported = range_count(digest, low, high).rank
                self.assertLessEqual(abs(reported - exact_range(oracle, low, high)), tolerance)

    def test_consensus_with_planted_values(self):
        rng = np.random.default_rng(11)
        config = DigestConfig(sigma=2 ** 10, k=400)
        for _ in range(20):
            n = int(rng.integers(2_000, 20_000))
            hitters = rng.choice(config.sigma, size=3, replace=False) + 1
            shares = (0.22, 0.12, 0.06)
            planted = np.concatenate([np.full(int(share * n), hitter) for share, hitter in zip(shares, hitters)])
            noise = rng.integers(1, config.sigma, size=n - len(planted), endpoint=True)
            readings = rng.permutation(np.concatenate([planted, noise]))
            digest = random_merge_tree(rng, readings, config)
            oracle = FrequencyVector.from_readings(readings.tolist())
            for s in (0.05, 0.1, 0.2):
                reported = {value for value, _ in consensus(digest, s)}
                self.assertLessEqual(exact_frequent(oracle, s), reported)
                floor = (Fraction(s) - config.epsilon) * oracle.n
                for value in reported:
                    self.assertGreater(oracle[value], floor)

    def test_moderate_digest(self):
        rng = np.random.default_rng(3)
        readings = rng.integers(1, SIGMA, size=10_000, endpoint=True)
        config = DigestConfig(sigma=SIGMA, k=33)
        digest = from_frequencies(Counter(readings.tolist()), config)
        assert_sound_quantiles(self, digest, FrequencyVector.from_readings(readings.tolist()),
                               (0.1, 0.25, 0.5, 0.75, 0.9))


class OracleTests(SimpleTestCase):
    def test_rank(self):
        oracle = example_oracle()
        self.assertEqual(exact_rank(oracle, 4), 5)
        self.assertEqual(exact_rank(oracle, 1), 0)
        self.assertEqual(exact_rank(oracle, 9), 15)

    def test_quantile(self):
        self.assertEqual(exact_quantile(example_oracle(), 0.5), 4)
        self.assertEqual(exact_quantile(FrequencyVector({42: 3}), 0.01), 42)
        self.assertEqual(exact_quantile(FrequencyVector.from_readings(range(1, 101)), 0.25), 25)
        with self.assertRaises(DigestDomainError):
            exact_quantile(FrequencyVector(), 0.5)

    def test_frequent(self):
        oracle = example_oracle()
        self.assertEqual(exact_frequent(oracle, 0.3), {4})
        self.assertEqual(exact_frequent(oracle, 1), set())
        self.assertEqual(exact_frequent(oracle, 0), set(EXAMPLE_FREQUENCIES))

    def test_rejects_values_outside_sigma(self):
        with self.assertRaises(DigestDomainError):
            FrequencyVector({9: 1}, sigma=8)

    @hsettings(max_examples=100, deadline=None)
    @given(readings_strategy, st.floats(min_value=0.01, max_value=0.99))
    def test_quantile_rank_window(self, readings, q):
        oracle = FrequencyVector.from_readings(readings)
        value = exact_quantile(oracle, q)
        self.assertLessEqual(exact_rank(oracle, value), q * oracle.n)
        self.assertLessEqual(q * oracle.n, exact_rank(oracle, value) + oracle[value])
        self.assertEqual(rank_error(oracle, value, q), 0)


class CodecTests(SimpleTestCase):
    def test_example_bytes(self):
        encoded = encode(example_digest())
        self.assertEqual(encoded, EXAMPLE_ENCODING)
        self.assertEqual(len(encoded), HEADER.size + 5)
        self.assertEqual(encoded_size(example_digest()), len(encoded))

    def test_decode_example(self):
        digest = decode(EXAMPLE_ENCODING)
        self.assertEqual(dict(digest.buckets), EXAMPLE_BUCKETS)
        self.assertEqual(digest.config, DigestConfig(sigma=8, k=2))
        self.assertEqual(decode(EXAMPLE_ENCODING, k=5), example_digest())

    def test_empty_digest(self):
        config = DigestConfig(sigma=8, k=5)
        encoded = encode(empty(config))
        self.assertEqual(len(encoded), HEADER.size)
        self.assertEqual(decode(encoded, k=5), empty(config))

    def test_round_trip_over_ten_thousand_digests(self):
        rng = np.random.default_rng(20240611)
        for _ in range(10_000):
            sigma = 2 ** int(rng.integers(1, 17))
            k = int(rng.integers(1, 41))
            readings = rng.integers(1, sigma, size=int(rng.integers(0, 300)), endpoint=True)
            digest = from_frequencies(Counter(readings.tolist()), DigestConfig(sigma=sigma, k=k))
            encoded = encode(digest)
            self.assertEqual(len(encoded), encoded_size(digest))
            self.assertEqual(decode(encoded, k=k), digest)

    @hsettings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(min_value=1, max_value=2 ** 12), max_size=200),
           st.integers(min_value=1, max_value=40))
    def test_round_trip(self, readings, k):
        digest = from_frequencies(Counter(readings), DigestConfig(sigma=2 ** 12, k=k))
        encoded = encode(digest)
        self.assertEqual(len(encoded), encoded_size(digest))
        self.assertEqual(decode(encoded, k=k), digest)

    def assertDecodeError(self, data, field, offset=None):
        with self.assertRaises(DigestDecodeError) as caught:
            decode(data)
        self.assertEqual(caught.exception.field, field)
        if offset is not None:
            self.assertEqual(caught.exception.offset, offset)

    def test_corruptions(self):
        header = EXAMPLE_ENCODING[:HEADER.size]
        self.assertDecodeError(EXAMPLE_ENCODING[:10], 'header')
        self.assertDecodeError(b'\x52' + EXAMPLE_ENCODING[1:], 'magic', 0)
        self.assertDecodeError(EXAMPLE_ENCODING[:1] + b'\x02' + EXAMPLE_ENCODING[2:], 'version', 1)
        self.assertDecodeError(EXAMPLE_ENCODING[:-1], 'payload')
        self.assertDecodeError(EXAMPLE_ENCODING + b'\x00', 'payload')
        self.assertDecodeError(header + bytes.fromhex('016272a4b6'), 'node_id', 15)
        self.assertDecodeError(header + bytes.fromhex('111172a4b6'), 'node_id', 16)
        self.assertDecodeError(header + bytes.fromhex('6211' '72a4b6'), 'node_id', 16)
        self.assertDecodeError(header + bytes.fromhex('116372a4b6'), 'n')
        self.assertDecodeError(header + bytes.fromhex('106272a4b6'), 'count', 15)

    def test_nonzero_padding(self):
        digest = QDigest(DigestConfig(sigma=8, k=5), {11: 3})
        encoded = encode(digest)
        self.assertEqual(encoded[HEADER.size:], b'\xbc')
        self.assertDecodeError(encoded[:-1] + b'\xbd', 'padding')


class QueryCommandTests(SimpleTestCase):
    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()
        self.path = Path(self.workdir.name) / 'example.qd'
        self.path.write_bytes(EXAMPLE_ENCODING)

    def tearDown(self):
        self.workdir.cleanup()

    def run_query(self, *args):
        out = StringIO()
        call_command('query', str(self.path), *args, stdout=out)
        return json.loads(out.getvalue())

    def test_median_from_file(self):
        document = self.run_query('--quantile', '0.5', '--k', '5')
        self.assertEqual(document['quantiles'], [{'q': 0.5, 'value': 4}])
        self.assertEqual(document['n'], 15)
        self.assertEqual(document['theta_fraction'], '1/5')

    def test_matches_in_memory_answers(self):
        document = self.run_query('--quantile', '0.25', '--quantile', '0.9', '--rank', '4',
                                  '--range', '3,4', '--consensus', '0.35', '--k', '5')
        digest = example_digest()
        self.assertEqual([entry['value'] for entry in document['quantiles']],
                         [quantile(digest, 0.25).value, quantile(digest, 0.9).value])
        self.assertEqual(document['ranks'], [{'value': 4, 'rank': 4}])
        self.assertEqual(document['ranges'], [{'low': 3, 'high': 4, 'count': 10}])
        self.assertEqual(document['consensus'][0]['values'], [{'value': 3, 'count': 4}, {'value': 4, 'count': 6}])

    def test_singleton_extreme_quantile(self):
        self.path.write_bytes(encode(singleton(77, DigestConfig(sigma=128, k=3))))
        self.assertEqual(self.run_query('--quantile', '0.999')['quantiles'][0]['value'], 77)

    def test_writes_out_file(self):
        target = Path(self.workdir.name) / 'answers.json'
        call_command('query', str(self.path), '--quantile', '0.5', '--out', str(target), stdout=StringIO())
        self.assertEqual(json.loads(target.read_text())['quantiles'][0]['value'], 4)

    def test_decode_failure_reports_offset(self):
        self.path.write_bytes(EXAMPLE_ENCODING[:HEADER.size] + bytes.fromhex('016272a4b6'))
        with self.assertRaisesMessage(CommandError, 'node_id at byte 15'):
            self.run_query('--quantile', '0.5')

    def test_missing_file(self):
        with self.assertRaises(CommandError):
            call_command('query', str(self.path) + '.missing', stdout=StringIO())

    def test_invalid_quantile(self):
        with self.assertRaises(CommandError):
            self.run_query('--quantile', '1.5')


class DigestQueryAPITests(TestCase):
    def setUp(self):
        self.client = APIClient()
        self.url = reverse('digest-query')
        self.encoded = base64.b64encode(EXAMPLE_ENCODING).decode('ascii')

    def test_query(self):
        response = self.client.post(self.url, {
            'digest': self.encoded, 'k': 5, 'quantiles': [0.5], 'ranks': [4],
            'ranges': [[3, 4]], 'consensus': [0.35],
        }, format='json')
        self.assertEqual(response.status_code, 200)
        self.assertTrue(response.data['success'])
        self.assertEqual(response.data['quantiles'], [{'q': 0.5, 'value': 4}])
        self.assertEqual(response.data['ranges'][0]['count'], 10)
        self.assertEqual(response.data['error_budget'], 9)

    def test_rejects_bad_base64(self):
        response = self.client.post(self.url, {'digest': 'not base64!'}, format='json')
        self.assertEqual(response.status_code, 400)
        self.assertFalse(response.data['success'])

    def test_reports_decode_offset(self):
        corrupted = base64.b64encode(EXAMPLE_ENCODING[:HEADER.size] + bytes.fromhex('016272a4b6')).decode('ascii')
        response = self.client.post(self.url, {'digest': corrupted}, format='json')
        self.assertEqual(response.status_code, 400)
        self.assertEqual((response.data['field'], response.data['offset']), ('node_id', 15))

    def test_value_outside_sigma(self):
        response = self.client.post(self.url, {'digest': self.encoded, 'ranks': [9]}, format='json')
        self.assertEqual(response.status_code, 400)
        self.assertIn('outside', response.data['error'])
