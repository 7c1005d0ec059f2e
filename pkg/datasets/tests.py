import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from netsim.topology import Topology, generate_topology

from .exceptions import GridParseError
from .readings import distinct_count, uniform_readings, write_readings
from .terrain import (
    ElevationGrid, format_grid, load_grid, parse_grid, rescale, terrain_readings,
    two_plateau_elevations, two_plateau_grid,
)

SIGMA = 2 ** 16


class UniformReadingsTests(SimpleTestCase):
    def test_seeded_and_in_range(self):
        readings = uniform_readings(1000, SIGMA, seed=5)
        self.assertEqual(readings, uniform_readings(1000, SIGMA, seed=5))
        self.assertNotEqual(readings, uniform_readings(1000, SIGMA, seed=6))
        self.assertTrue(all(1 <= value <= SIGMA for value in readings))

    def test_tiny_domain_hits_both_ends(self):
        self.assertEqual(set(uniform_readings(200, 2, seed=1)), {1, 2})

    def test_distinct_values_near_expectation(self):
        # 65536 * (1 - exp(-100000 / 65536)) is about 51.3k
        distinct = distinct_count(uniform_readings(100_000, SIGMA, seed=1))
        self.assertGreater(distinct, 50_000)
        self.assertLess(distinct, 53_000)

    def test_needs_a_reading(self):
        with self.assertRaises(ValueError):
            uniform_readings(0, SIGMA)

    def test_write_one_per_line(self):
        out = StringIO()
        write_readings([3, 1, 2], out)
        self.assertEqual(out.getvalue(), '3\n1\n2\n')


class GridParsingTests(SimpleTestCase):
    def test_rescale_corners(self):
        self.assertEqual(rescale([[0, 1], [2, 3]], SIGMA).tolist(), [[1, 21846], [43691, 65536]])

    def test_rescale_wide_range_does_not_overflow(self):
        self.assertEqual(rescale([[0, 10 ** 15]], SIGMA).tolist(), [[1, SIGMA]])
        self.assertEqual(rescale([[-10 ** 15, 0, 10 ** 15]], 3).tolist(), [[1, 2, 3]])

    def test_constant_grid_maps_to_one(self):
        grid = parse_grid('2 2\n7 7\n7 7\n', SIGMA)
        self.assertEqual(grid.elevations.tolist(), [[1, 1], [1, 1]])

    def test_comments_and_blank_lines(self):
        grid = parse_grid('# synthetic\n2 1\n\n5 6\n', 2)
        self.assertEqual((grid.width, grid.height, grid.cell(1, 0)), (2, 1, 2))

    def test_errors_name_the_line(self):
        cases = [
            ('', 1, 'empty'),
            ('2 x\n', 1, 'non-integer'),
            ('2 2\n1 2\n3\n', 3, 'expected 2 elevations'),
            ('2 2\n1 x\n3 4\n', 2, 'non-integer'),
            ('2 2\n1 2\n', 3, 'expected 2 rows'),
            ('1 1\n1\n2\n', 3, 'more than'),
            ('0 2\n', 1, 'header'),
        ]
        for text, line, message in cases:
            with self.subTest(text=text):
                with self.assertRaises(GridParseError) as caught:
                    parse_grid(text, SIGMA)
                self.assertEqual(caught.exception.line, line)
                self.assertIn(message, str(caught.exception))

    def test_format_round_trip(self):
        raw = [[10, 20, 30], [40, 50, 60]]
        self.assertEqual(parse_grid(format_grid(raw), SIGMA), ElevationGrid.from_elevations(raw, SIGMA))


class TerrainTests(SimpleTestCase):
    def test_fixture_is_two_plateau_grid(self):
        fixture = load_grid(settings.SENSORNET['GRID_FILE'], SIGMA)
        self.assertEqual(fixture, two_plateau_grid(SIGMA))
        self.assertEqual((fixture.width, fixture.height), (64, 64))
        self.assertEqual(fixture.raw_min, 1000)
        self.assertEqual(fixture.raw_max, int(two_plateau_elevations().max()))

    def test_readings_follow_positions(self):
        grid = ElevationGrid.from_elevations([[0, 1], [2, 3]], SIGMA)
        corners = Topology.from_edges(3, [(0, 1), (1, 2)], positions=[[0.0, 0.0], [1.0, 1.0], [0.9, 0.1]])
        self.assertEqual(terrain_readings(grid, corners), [1, SIGMA, 21846])

    def test_two_peaks(self):
        topology = generate_topology(500, 0.001, seed=2)
        readings = np.array(terrain_readings(two_plateau_grid(SIGMA), topology))
        self.assertGreater(np.mean(readings < SIGMA // 10), 0.3)
        self.assertGreater(np.mean(readings > 9 * SIGMA // 10), 0.3)

    def test_fewer_distinct_values_than_uniform(self):
        topology = generate_topology(500, 0.001, seed=2)
        terrain = distinct_count(terrain_readings(two_plateau_grid(SIGMA), topology))
        self.assertLess(terrain, distinct_count(uniform_readings(500, SIGMA, seed=2)))


class ReadingsCommandTests(SimpleTestCase):
    def readings(self, *args):
        out = StringIO()
        call_command('readings', *args, stdout=out)
        return [int(line) for line in out.getvalue().split()]

    def test_uniform(self):
        self.assertEqual(self.readings('--nodes', '5', '--seed', '3'), uniform_readings(5, SIGMA, 3))

    def test_grid(self):
        readings = self.readings('--nodes', '30', '--dataset', 'grid', '--sigma', '1024')
        self.assertEqual(len(readings), 30)
        self.assertTrue(all(1 <= value <= 1024 for value in readings))

    def test_out_file(self):
        with tempfile.TemporaryDirectory() as workdir:
            target = Path(workdir) / 'readings.txt'
            call_command('readings', '--nodes', '4', '--out', str(target), stdout=StringIO())
            self.assertEqual(len(target.read_text().splitlines()), 4)

    def test_sigma_below_two(self):
        with self.assertRaisesMessage(CommandError, '--sigma'):
            call_command('readings', '--nodes', '5', '--sigma', '1', stdout=StringIO())

    def test_bad_grid(self):
        with tempfile.TemporaryDirectory() as workdir:
            broken = Path(workdir) / 'broken.grid'
            broken.write_text('2 2\n1 2\n')
            with self.assertRaisesMessage(CommandError, 'line 3'):
                call_command('readings', '--dataset', 'grid', '--grid', str(broken), '--nodes', '10',
                             stdout=StringIO())
            with self.assertRaises(CommandError):
                call_command('readings', '--dataset', 'grid', '--grid', str(Path(workdir) / 'none.grid'),
                             stdout=StringIO())
