import csv
import json
import math
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path
from types import SimpleNamespace

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from rest_framework.test import APIClient

from digests.codec import HEADER, decode, encode, encoded_size, payload_size
from digests.digest import DigestConfig, singleton, validate

from .aggregation import (
    LIST, QDIGEST, budget_to_k, message_size_ccdf, queries_until_exhaustion, residual_power,
    run_aggregation, tuple_bytes,
)
from .exceptions import ConfigError, DisconnectedTopologyError, TopologyError
from .experiments import CSV_COLUMNS, MEAN_SEED, load_run_config, run_histogram, run_simulation
from .models import ExperimentRow
from .topology import Topology, bfs_tree, default_radio_range, generate_topology


def path_topology(length):
    return Topology.from_edges(length, [(node, node + 1) for node in range(length - 1)])


def mean_value(rows, budget, scheme, metric):
    for row in rows:
        if (row.seed, row.budget_bytes, row.scheme, row.metric) == (MEAN_SEED, budget, scheme, metric):
            return row.value
    raise AssertionError(f'no mean row for {scheme} {metric} at {budget} bytes')


def seed_values(rows, budget, scheme, metric):
    return [row.value for row in rows
            if row.seed != MEAN_SEED and (row.budget_bytes, row.scheme, row.metric) == (budget, scheme, metric)]


class TopologyTests(SimpleTestCase):
    def test_path_tree(self):
        tree = bfs_tree(path_topology(4))
        self.assertEqual(tree.parents, (None, 0, 1, 2))
        self.assertEqual(tree.levels, (0, 1, 2, 3))
        self.assertEqual(tree.depth, 3)
        self.assertEqual(tree.bottom_up(), [3, 2, 1, 0])

    def test_star_tree(self):
        tree = bfs_tree(Topology.from_edges(5, [(0, leaf) for leaf in range(1, 5)]))
        self.assertEqual(tree.children[0], (1, 2, 3, 4))
        self.assertEqual(tree.depth, 1)

    def test_lowest_id_parent_wins(self):
        square = Topology.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
        self.assertEqual(bfs_tree(square).parents[3], 1)

    def test_disconnected(self):
        with self.assertRaises(DisconnectedTopologyError) as caught:
            bfs_tree(Topology.from_edges(4, [(0, 1), (2, 3)]))
        self.assertEqual(caught.exception.node, 2)

    def test_generation_is_deterministic(self):
        first = generate_topology(200, 0.001, seed=7)
        second = generate_topology(200, 0.001, seed=7)
        other = generate_topology(200, 0.001, seed=8)
        self.assertTrue((first.positions == second.positions).all())
        self.assertEqual(sorted(first.graph.edges), sorted(second.graph.edges))
        self.assertFalse((first.positions == other.positions).all())
        self.assertAlmostEqual(first.side, math.sqrt(200 / 0.001))
        self.assertAlmostEqual(first.radio_range, default_radio_range(0.001))

    def test_single_sensor(self):
        topology = generate_topology(1, 0.001, seed=3)
        self.assertEqual(topology.regenerations, 0)
        self.assertEqual(bfs_tree(topology).depth, 0)

    def test_invalid_parameters(self):
        with self.assertRaises(TopologyError):
            generate_topology(0, 0.001)
        with self.assertRaises(TopologyError):
            generate_topology(10, 0)
        with self.assertRaises(TopologyError):
            generate_topology(10, 0.001, radio_range=-1)

    def test_gives_up_after_regeneration_limit(self):
        with self.assertRaisesMessage(TopologyError, 'after 3 regenerations'):
            generate_topology(20, 0.001, radio_range=1e-6, max_regenerations=3)


class AggregationTests(SimpleTestCase):
    def setUp(self):
        self.tree = bfs_tree(path_topology(3))
        self.config = DigestConfig(sigma=8, k=5)

    def test_budget_conversion(self):
        self.assertEqual(tuple_bytes(2 ** 16, 2000), 4)
        self.assertEqual([budget_to_k(budget, 2 ** 16, 2000) for budget in (400, 160, 80)], [33, 13, 6])
        with self.assertRaises(ConfigError):
            budget_to_k(8, 2 ** 16, 2000)

    def test_full_digest_with_header_fits_budget(self):
        for budget, expected in ((400, 362), (160, 152), (80, 78)):
            k = budget_to_k(budget, 2 ** 16, 2000)
            size = HEADER.size + payload_size(16, 2000, 3 * k)
            self.assertEqual(size, expected)
            self.assertLessEqual(size, budget)

    def test_small_networks_lower_k_to_fit_header(self):
        # 3 bytes per tuple at 60 sensors: 51 tuples would need 162 bytes
        self.assertEqual(budget_to_k(160, 2 ** 16, 60), 16)
        for nodes in (2, 60, 300, 2000, 5000):
            for budget in range(40, 420, 20):
                with self.subTest(nodes=nodes, budget=budget):
                    k = budget_to_k(budget, 2 ** 16, nodes)
                    self.assertLessEqual(HEADER.size + payload_size(16, nodes, 3 * k), budget)

    def test_list_scheme_on_a_path(self):
        report = run_aggregation(self.tree, [8, 5, 7], self.config, LIST)
        self.assertEqual(report.node_bytes, (0, 2, 1))
        self.assertEqual(report.summary.pairs, ((5, 1), (7, 1)))
        self.assertEqual(report.oracle.n, 2)
        self.assertEqual(report.theta, 0.0)
        self.assertEqual(report.quantile_answers([0.5]), [5])

    def test_qdigest_scheme_on_a_path(self):
        report = run_aggregation(self.tree, [8, 5, 7], self.config, QDIGEST)
        self.assertEqual(report.node_bytes[0], 0)
        self.assertEqual(report.node_bytes[2], len(encode(singleton(7, self.config))))
        self.assertEqual(report.node_bytes[2], 16)
        self.assertEqual(report.node_bytes[1], encoded_size(report.summary))
        self.assertEqual(report.summary.n, 2)
        self.assertEqual(validate(report.summary), [])

    def test_root_can_sense(self):
        report = run_aggregation(self.tree, [8, 5, 7], self.config, LIST, root_senses=True)
        self.assertEqual(report.summary.pairs, ((5, 1), (7, 1), (8, 1)))

    def test_rejects_bad_input(self):
        with self.assertRaises(ConfigError):
            run_aggregation(self.tree, [1, 2, 3], self.config, 'gossip')
        with self.assertRaises(ConfigError):
            run_aggregation(self.tree, [1, 2], self.config)
        with self.assertRaises(ValueError):
            run_aggregation(self.tree, [1, 2, 9], self.config)

    def test_root_digest_is_valid_and_repeatable(self):
        topology = generate_topology(300, 0.001, seed=4)
        tree = bfs_tree(topology)
        readings = [1 + (17 * node) % 1000 for node in range(300)]
        config = DigestConfig(sigma=1024, k=10)
        first = run_aggregation(tree, readings, config)
        second = run_aggregation(tree, readings, config)
        self.assertEqual(first.summary, second.summary)
        self.assertEqual(first.node_bytes, second.node_bytes)
        self.assertEqual(validate(first.summary), [])
        self.assertEqual(first.summary.n, 299)
        self.assertLessEqual(len(first.summary), 3 * config.k)


class ResidualPowerTests(SimpleTestCase):
    def setUp(self):
        self.report = SimpleNamespace(node_bytes=(0, 400, 20000), max_bytes=20000)

    def test_fractions(self):
        power = residual_power(self.report, 40000)
        self.assertEqual(power.minimum, 0.5)
        self.assertAlmostEqual(float(power.fractions[1]), 0.99)
        self.assertEqual(float(power.fractions[2]), 1.0)
        self.assertEqual(power.count_below(0.99), 1)
        self.assertEqual(power.count_below(1.0), 2)
        self.assertEqual([count for _, count in power.cdf()], [0, 1, 2])
        self.assertEqual(power.cdf([1.0, 0.6]), [(0.6, 1), (1.0, 2)])

    def test_floor_at_zero(self):
        self.assertEqual(residual_power(self.report, 10000).minimum, 0.0)
        with self.assertRaises(ConfigError):
            residual_power(self.report, 0)

    def test_lifetime_and_size_tail(self):
        self.assertEqual(queries_until_exhaustion(self.report, 40000), 2)
        self.assertEqual(queries_until_exhaustion(SimpleNamespace(max_bytes=0), 40000), math.inf)
        self.assertEqual(message_size_ccdf(self.report, [0, 400, 1000]), [(0, 2), (400, 1), (1000, 1)])


class RunConfigTests(SimpleTestCase):
    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.workdir.cleanup()

    def write_config(self, text):
        path = Path(self.workdir.name) / 'run.env'
        path.write_text(text)
        return path

    def test_flags_parse_lists(self):
        config = load_run_config({'nodes': 50, 'budget': '160,400', 'seeds': '1,2', 'verbosity': 1})
        self.assertEqual((config.nodes, config.budgets, config.seeds), (50, (160, 400), (1, 2)))
        self.assertEqual(config.budget_ks(), [(160, 16), (400, 44)])

    def test_explicit_k_applies_to_every_budget(self):
        config = load_run_config({'budget': '160,400', 'k': 7})
        self.assertEqual(config.budget_ks(), [(160, 7), (400, 7)])

    def test_precedence(self):
        path = self.write_config('NODES=30\nSEEDS=3\n# comment\nDATASET=uniform\n')
        config = load_run_config({'nodes': 40}, path)
        self.assertEqual((config.nodes, config.seeds), (40, (3,)))

    def test_rejections(self):
        with self.assertRaisesMessage(ConfigError, 'unknown setting COLOUR'):
            load_run_config({}, self.write_config('COLOUR=blue\n'))
        with self.assertRaisesMessage(ConfigError, 'bad value'):
            load_run_config({}, self.write_config('NODES=many\n'))
        with self.assertRaises(ConfigError):
            load_run_config({}, Path(self.workdir.name) / 'missing.env')
        with self.assertRaises(ConfigError):
            load_run_config({'budget': '8'})
        with self.assertRaises(ConfigError):
            load_run_config({'dataset': 'grid', 'grid': str(Path(self.workdir.name) / 'none.grid')})
        with self.assertRaises(ConfigError):
            load_run_config({'quantiles': '0.5,1.0'})
        with self.assertRaises(ConfigError):
            load_run_config({'schemes': 'qdigest,gossip'})
        with self.assertRaises(ConfigError):
            load_run_config({'nodes': 1})
        with self.assertRaises(ConfigError):
            load_run_config({'message_sizes': '100,-1'})
        with self.assertRaises(ConfigError):
            load_run_config({'power_levels': '0.9,1.5'})


class DeskScaleTests(SimpleTestCase):
    """Uniform 16-bit readings over five placements, base station excluded."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        config = load_run_config({'nodes': 2000, 'sigma': 2 ** 16, 'budget': '80,160,400',
                                  'seeds': '1,2,3,4,5', 'dataset': 'uniform', 'k': None})
        cls.rows, _ = run_simulation(config)

    def test_median_error_shrinks_with_budget(self):
        errors = [mean_value(self.rows, budget, QDIGEST, 'median_error') for budget in (400, 160, 80)]
        self.assertLessEqual(errors[0], 0.05)
        self.assertLess(errors[0], errors[1])
        self.assertLess(errors[1], errors[2])

    def test_actual_error_below_confidence_factor(self):
        for budget in (160, 400):
            self.assertLess(mean_value(self.rows, budget, QDIGEST, 'median_error'),
                            mean_value(self.rows, budget, QDIGEST, 'theta'))

    def test_message_cap(self):
        self.assertEqual(seed_values(self.rows, 400, QDIGEST, 'nodes_over_cap'), [0] * 5)
        self.assertTrue(all(count >= 1 for count in seed_values(self.rows, 400, LIST, 'nodes_over_cap')))
        self.assertTrue(all(size <= 400 for size in seed_values(self.rows, 400, QDIGEST, 'max_bytes')))

    def test_residual_power(self):
        qdigest = seed_values(self.rows, 400, QDIGEST, 'residual_min')
        self.assertTrue(all(fraction >= 0.99 for fraction in qdigest))
        self.assertLess(min(seed_values(self.rows, 400, LIST, 'residual_min')), min(qdigest))

    def test_list_is_exact(self):
        self.assertEqual(seed_values(self.rows, 400, LIST, 'median_error'), [0.0] * 5)


class TransmissionTests(SimpleTestCase):
    def test_list_sends_more_in_total(self):
        config = load_run_config({'nodes': 1000, 'sigma': 2 ** 16, 'budget': '160', 'seeds': '1,2,3,4,5',
                                  'dataset': 'uniform', 'quantiles': ''})
        rows, _ = run_simulation(config)
        ratio = mean_value(rows, 160, LIST, 'total_bytes') / mean_value(rows, 160, QDIGEST, 'total_bytes')
        self.assertGreaterEqual(ratio, 1.5)


class ParallelSeedsTests(SimpleTestCase):
    def test_jobs_do_not_change_results(self):
        config = load_run_config({'nodes': 60, 'budget': '160,400', 'seeds': '1,2,3', 'dataset': 'uniform'})
        self.assertEqual(run_simulation(replace(config, jobs=2)), run_simulation(config))


SMALL_RUN = ('--nodes', '60', '--budget', '160', '--seeds', '1', '--quantiles', '0.5', '--dataset', 'uniform')


class SimulateCommandTests(TestCase):
    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.workdir.cleanup()

    def simulate(self, *args):
        out = StringIO()
        call_command('simulate', *SMALL_RUN, *args, stdout=out)
        return list(csv.reader(StringIO(out.getvalue())))

    def test_csv_layout(self):
        table = self.simulate()
        self.assertEqual(tuple(table[0]), CSV_COLUMNS)
        # 21 metrics per scheme, for seed 1 and for the mean
        self.assertEqual(len(table), 1 + 2 * 2 * 21)
        self.assertEqual({row[0] for row in table[1:]}, {'1', MEAN_SEED})
        self.assertIn(['1', QDIGEST, '60', '65536', '160', '16', 'distinct_values'], [row[:7] for row in table])

    def test_five_seeds_two_schemes(self):
        table = self.simulate('--seeds', '1,2,3,4,5')
        median = [row for row in table[1:] if row[6] == 'median_error']
        self.assertEqual(len(median), 12)
        self.assertEqual([row[0] for row in median][-2:], [MEAN_SEED, MEAN_SEED])
        self.assertEqual([row[1] for row in median][:2], [QDIGEST, LIST])

    def test_schemes_keep_requested_order(self):
        table = self.simulate('--schemes', f'{LIST},{QDIGEST}')
        median = [(row[0], row[1]) for row in table[1:] if row[6] == 'median_error']
        self.assertEqual(median, [('1', LIST), ('1', QDIGEST), (MEAN_SEED, LIST), (MEAN_SEED, QDIGEST)])

    def test_size_and_power_distribution_rows(self):
        table = self.simulate()
        metrics = [row[6] for row in table[1:] if row[0] == '1' and row[1] == QDIGEST]
        self.assertEqual(metrics[5:10], ['nodes_over_cap', 'nodes_over_100', 'nodes_over_200', 'nodes_over_400',
                                        'nodes_over_800'])
        self.assertEqual(metrics[13:18], ['residual_p50', 'residual_cdf_0.9', 'residual_cdf_0.95',
                                          'residual_cdf_0.99', 'residual_cdf_0.999'])
        values = {(row[1], row[6]): row[7] for row in table[1:] if row[0] == '1'}
        self.assertEqual(values[QDIGEST, 'nodes_over_400'], '0')
        self.assertEqual(values[LIST, 'residual_cdf_0.9'], '0')

        table = self.simulate('--message-sizes', '0', '--power-levels', '1')
        values = {(row[1], row[6]): row[7] for row in table[1:] if row[0] == '1'}
        # every sensor but the base station sends and spends
        self.assertEqual(values[QDIGEST, 'nodes_over_0'], '59')
        self.assertEqual(values[LIST, 'residual_cdf_1'], '59')

    def test_output_is_deterministic(self):
        self.assertEqual(self.simulate(), self.simulate())

    def test_record_and_list(self):
        self.simulate('--record')
        self.assertEqual(ExperimentRow.objects.count(), 84)
        response = APIClient().get(reverse('experiment-list'), {'scheme': QDIGEST, 'metric': 'median_error'})
        self.assertEqual(response.status_code, 200)
        self.assertEqual(sorted(row['seed'] for row in response.data), ['1', MEAN_SEED])

    def test_digest_out_feeds_query(self):
        self.simulate('--digest-out', self.workdir.name)
        path = Path(self.workdir.name) / 'seed1_budget160.qd'
        self.assertEqual(decode(path.read_bytes()).n, 59)
        out = StringIO()
        call_command('query', str(path), '--quantile', '0.5', stdout=out)
        self.assertEqual(json.loads(out.getvalue())['n'], 59)

    def test_out_file(self):
        target = Path(self.workdir.name) / 'rows.csv'
        call_command('simulate', *SMALL_RUN, '--out', str(target), stdout=StringIO())
        self.assertTrue(target.read_text().startswith(','.join(CSV_COLUMNS)))

    def test_bad_configuration(self):
        with self.assertRaises(CommandError):
            call_command('simulate', '--nodes', '60', '--budget', '1', stdout=StringIO())


class HistogramCommandTests(SimpleTestCase):
    def test_buckets_against_exact_counts(self):
        out = StringIO()
        call_command('histogram', '--nodes', '60', '--budget', '160', '--seeds', '1', '--buckets', '8',
                     stdout=out)
        rows = list(csv.DictReader(StringIO(out.getvalue())))
        self.assertEqual(len(rows), 8)
        self.assertEqual(sum(int(row['exact']) for row in rows), 59)
        self.assertEqual((rows[0]['low'], rows[-1]['high']), ('1', '65536'))
        self.assertTrue(all(int(row['approx']) >= 0 for row in rows))

    def test_single_bucket_is_exact(self):
        config = load_run_config({'nodes': 60, 'budget': '160', 'seeds': '2', 'buckets': 1, 'dataset': 'uniform'})
        [row] = run_histogram(config)
        self.assertEqual((row.approx, row.exact), (59, 59))

    def test_two_plateaus_show_two_peaks(self):
        config = load_run_config({'nodes': 1000, 'budget': '400', 'seeds': '1', 'buckets': 32, 'dataset': 'grid'})
        rows = run_histogram(config)
        epsilon = 16 / rows[0].k
        self.assertTrue(all(abs(row.approx - row.exact) <= 2 * epsilon * 999 for row in rows))

        def peaks(counts):
            return set(sorted(range(len(counts)), key=counts.__getitem__)[-2:])

        self.assertEqual(peaks([row.exact for row in rows]), {0, 31})
        self.assertEqual(peaks([row.approx for row in rows]), {0, 31})
