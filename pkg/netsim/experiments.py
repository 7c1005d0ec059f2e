# netsim/experiments.py
"""
Experiment harness behind `manage.py simulate` and `manage.py histogram`.

A run configuration starts from settings.SENSORNET, is overridden by an optional
key=value config file and then by command-line flags. Each seed gets its own
placement and readings; every budget and scheme is run over that same network
so the schemes are compared like for like.
"""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from itertools import repeat
from pathlib import Path

import numpy as np
from django.conf import settings
from dotenv import dotenv_values

from datasets.readings import distinct_count, uniform_readings
from datasets.terrain import load_grid, terrain_readings
from digests.codec import encode
from digests.digest import DigestConfig
from digests.oracle import exact_range
from digests.queries import histogram

from .aggregation import (
    QDIGEST, SCHEMES, budget_to_k, message_size_ccdf, queries_until_exhaustion, residual_power,
    run_aggregation,
)
from .exceptions import ConfigError
from .topology import bfs_tree, generate_topology

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('seed', 'scheme', 'n', 'sigma', 'budget_bytes', 'k', 'metric', 'value')
HISTOGRAM_COLUMNS = ('seed', 'n', 'sigma', 'budget_bytes', 'k', 'bucket', 'low', 'high', 'approx', 'exact')
DATASETS = ('uniform', 'grid')
MEAN_SEED = 'mean'


def _int_list(value):
    if isinstance(value, str):
        return tuple(int(item) for item in value.split(',') if item.strip())
    return tuple(int(item) for item in value)


def _float_list(value):
    if isinstance(value, str):
        return tuple(float(item) for item in value.split(',') if item.strip())
    return tuple(float(item) for item in value)


def _str_list(value):
    if isinstance(value, str):
        return tuple(item.strip() for item in value.split(',') if item.strip())
    return tuple(value)


def _optional_int(value):
    return None if value in (None, '') else int(value)


@dataclass(frozen=True)
class RunConfig:
    nodes: int
    sigma: int
    budgets: tuple
    seeds: tuple
    quantiles: tuple
    density: float
    mean_degree: float
    max_regenerations: int
    initial_power: float
    cost_per_byte: float
    buckets: int
    grid: Path
    k: int = None
    dataset: str = 'uniform'
    schemes: tuple = SCHEMES
    jobs: int = 1
    message_sizes: tuple = (100, 200, 400, 800)
    power_levels: tuple = (0.9, 0.95, 0.99, 0.999)

    def validate(self):
        if self.nodes < 2:
            raise ConfigError(f'need the base station plus at least one sensor, got {self.nodes} nodes')
        if self.sigma < 2:
            raise ConfigError(f'sigma must be at least 2, got {self.sigma}')
        if not self.seeds:
            raise ConfigError('no seeds given')
        if not self.budgets or min(self.budgets) < 1:
            raise ConfigError(f'budgets must be positive byte counts, got {self.budgets}')
        if self.k is not None and self.k < 1:
            raise ConfigError(f'k must be at least 1, got {self.k}')
        if not self.schemes or not set(self.schemes) <= set(SCHEMES):
            raise ConfigError(f'schemes must be drawn from {", ".join(SCHEMES)}, got {self.schemes}')
        if any(not 0 < q < 1 for q in self.quantiles):
            raise ConfigError(f'quantiles must lie strictly between 0 and 1, got {self.quantiles}')
        if self.dataset not in DATASETS:
            raise ConfigError(f'dataset must be one of {", ".join(DATASETS)}, got {self.dataset!r}')
        if self.dataset == 'grid' and not Path(self.grid).is_file():
            raise ConfigError(f'grid file {self.grid} not found')
        if self.density <= 0 or self.mean_degree <= 0:
            raise ConfigError('density and mean degree must be positive')
        if self.initial_power <= 0 or self.cost_per_byte < 0:
            raise ConfigError('initial power must be positive and cost per byte non-negative')
        if not 1 <= self.buckets <= self.sigma:
            raise ConfigError(f'bucket count must lie in [1, {self.sigma}], got {self.buckets}')
        if self.jobs < 1:
            raise ConfigError(f'jobs must be at least 1, got {self.jobs}')
        if any(size < 0 for size in self.message_sizes):
            raise ConfigError(f'message sizes must be non-negative, got {self.message_sizes}')
        if any(not 0 <= level <= 1 for level in self.power_levels):
            raise ConfigError(f'power levels must lie in [0, 1], got {self.power_levels}')
        self.budget_ks()
        return self

    def budget_ks(self):
        """(budget, k) pairs: an explicit k applies to every budget."""
        return [(budget, self.k or budget_to_k(budget, self.sigma, self.nodes)) for budget in self.budgets]


# key in settings / config file -> (RunConfig field, parser)
CONFIG_KEYS = {
    'NODES': ('nodes', int),
    'SIGMA': ('sigma', int),
    'BUDGETS': ('budgets', _int_list),
    'SEEDS': ('seeds', _int_list),
    'QUANTILES': ('quantiles', _float_list),
    'DENSITY': ('density', float),
    'MEAN_DEGREE': ('mean_degree', float),
    'MAX_REGENERATIONS': ('max_regenerations', int),
    'INITIAL_POWER': ('initial_power', float),
    'COST_PER_BYTE': ('cost_per_byte', float),
    'HISTOGRAM_BUCKETS': ('buckets', int),
    'GRID_FILE': ('grid', Path),
    'K': ('k', _optional_int),
    'DATASET': ('dataset', str),
    'SCHEMES': ('schemes', _str_list),
    'JOBS': ('jobs', int),
    'MESSAGE_SIZES': ('message_sizes', _int_list),
    'POWER_LEVELS': ('power_levels', _float_list),
}

# command-line option dest -> config key
OPTION_KEYS = {
    'nodes': 'NODES', 'sigma': 'SIGMA', 'budget': 'BUDGETS', 'seeds': 'SEEDS', 'quantiles': 'QUANTILES',
    'density': 'DENSITY', 'mean_degree': 'MEAN_DEGREE', 'buckets': 'HISTOGRAM_BUCKETS', 'grid': 'GRID_FILE',
    'k': 'K', 'dataset': 'DATASET', 'schemes': 'SCHEMES', 'jobs': 'JOBS',
    'message_sizes': 'MESSAGE_SIZES', 'power_levels': 'POWER_LEVELS',
}


def _apply(values, source, layer):
    for key, raw in layer.items():
        key = key.upper().replace('-', '_')
        if key not in CONFIG_KEYS:
            raise ConfigError(f'unknown setting {key} in {source}')
        name, parse = CONFIG_KEYS[key]
        try:
            values[name] = parse(raw)
        except (TypeError, ValueError):
            raise ConfigError(f'bad value {raw!r} for {key} in {source}') from None


def load_run_config(options=None, config_file=None, **defaults):
    """
    Resolve a RunConfig: settings.SENSORNET, then `defaults` for the calling
    command, then the key=value config file, then the non-empty `options`.
    """
    values = {}
    known = {key: value for key, value in settings.SENSORNET.items() if key in CONFIG_KEYS}
    _apply(values, 'settings', known)
    _apply(values, 'command defaults', defaults)
    if config_file:
        path = Path(config_file)
        if not path.is_file():
            raise ConfigError(f'config file {path} not found')
        _apply(values, str(path), dotenv_values(path))
    flags = {OPTION_KEYS[dest]: value for dest, value in (options or {}).items()
             if dest in OPTION_KEYS and value is not None}
    _apply(values, 'command line', flags)
    try:
        config = RunConfig(**values)
    except TypeError as e:
        raise ConfigError(f'incomplete run configuration: {e}') from None
    return config.validate()


def add_run_arguments(parser):
    parser.add_argument('--nodes', type=int, help='Sensors in the network, base station included')
    parser.add_argument('--sigma', type=int, help='Largest reading value')
    parser.add_argument('--budget', help='Message budget in bytes; a comma-separated list sweeps budgets')
    parser.add_argument('--k', type=int, help='Compression factor; overrides the budget conversion')
    parser.add_argument('--dataset', choices=DATASETS, help='Where readings come from')
    parser.add_argument('--grid', help='Elevation grid file for --dataset grid')
    parser.add_argument('--seeds', help='Comma-separated topology seeds')
    parser.add_argument('--schemes', help=f'Comma-separated subset of {",".join(SCHEMES)}')
    parser.add_argument('--quantiles', help='Comma-separated quantile fractions to score')
    parser.add_argument('--density', type=float, help='Sensors per unit area')
    parser.add_argument('--mean-degree', type=float, help='Target neighbors per sensor; sets the radio range')
    parser.add_argument('--jobs', type=int, help='Seeds simulated in parallel')
    parser.add_argument('--message-sizes', help='Comma-separated byte sizes; counts sensors sending more')
    parser.add_argument('--power-levels', help='Comma-separated residual power fractions; counts sensors below')
    parser.add_argument('--config', help='key=value file overriding settings; flags override it')
    parser.add_argument('--out', help='Write CSV here instead of stdout')


@dataclass(frozen=True)
class ResultRow:
    seed: object
    scheme: str
    n: int
    sigma: int
    budget_bytes: int
    k: int
    metric: str
    value: float

    def as_csv(self):
        return [self.seed, self.scheme, self.n, self.sigma, self.budget_bytes, self.k, self.metric,
                format_value(self.value)]


@dataclass(frozen=True)
class HistogramRow:
    seed: int
    n: int
    sigma: int
    budget_bytes: int
    k: int
    bucket: int
    low: int
    high: int
    approx: int
    exact: int

    def as_csv(self):
        return [getattr(self, column.name) for column in fields(self)]


def format_value(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), '.10g')


def _network(config, seed):
    topology = generate_topology(config.nodes, config.density, seed=seed,
                                 max_regenerations=config.max_regenerations, mean_degree=config.mean_degree)
    tree = bfs_tree(topology)
    if config.dataset == 'grid':
        readings = terrain_readings(load_grid(config.grid, config.sigma), topology)
    else:
        readings = uniform_readings(config.nodes, config.sigma, seed)
    return topology, tree, readings


def experiment_metrics(report, config, budget, regenerations, distinct):
    """(metric, value) pairs for one aggregation run, in CSV order."""
    errors = report.quantile_errors((0.5, *config.quantiles))
    power = residual_power(report, config.initial_power, config.cost_per_byte)
    metrics = [('median_error', errors[0.5])]
    metrics += [(f'error_q{q:g}', errors[q]) for q in config.quantiles]
    metrics += [
        ('theta', report.theta),
        ('max_bytes', report.max_bytes),
        ('total_bytes', report.total_bytes),
        ('nodes_over_cap', report.nodes_over(budget)),
        *[(f'nodes_over_{size}', count) for size, count in message_size_ccdf(report, config.message_sizes)],
        ('residual_min', power.minimum),
        ('residual_p01', power.percentile(1)),
        ('residual_p05', power.percentile(5)),
        ('residual_p50', power.percentile(50)),
        *[(f'residual_cdf_{level:g}', count) for level, count in power.cdf(config.power_levels)],
        ('lifetime_queries', queries_until_exhaustion(report, config.initial_power, config.cost_per_byte)),
        ('regenerations', regenerations),
        ('distinct_values', distinct),
    ]
    return metrics


@dataclass
class SeedResult:
    seed: int
    rows: dict
    digests: dict


def simulate_seed(config, seed):
    """Every budget and scheme over one seed's network; rows keyed by budget."""
    topology, tree, readings = _network(config, seed)
    distinct = distinct_count(value for node, value in enumerate(readings) if node != tree.root)
    rows, digests = {}, {}
    for budget, k in config.budget_ks():
        digest_config = DigestConfig(sigma=config.sigma, k=k)
        rows[budget] = []
        for scheme in config.schemes:
            report = run_aggregation(tree, readings, digest_config, scheme, node_count=config.nodes)
            rows[budget] += [
                ResultRow(seed, scheme, config.nodes, config.sigma, budget, k, metric, value)
                for metric, value in experiment_metrics(report, config, budget, topology.regenerations, distinct)
            ]
            if scheme == QDIGEST:
                digests[budget] = encode(report.summary)
    logger.info('seed %s done: %d budgets x %d schemes over %d sensors (tree depth %d)',
                seed, len(config.budgets), len(config.schemes), config.nodes, tree.depth)
    return SeedResult(seed=seed, rows=rows, digests=digests)


def _per_seed(function, config):
    if config.jobs > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, len(config.seeds))) as pool:
            return list(pool.map(function, repeat(config), config.seeds))
    return [function(config, seed) for seed in config.seeds]


def mean_rows(rows):
    """One row per (scheme, metric) averaging the value over seeds, in first-seen order."""
    grouped = {}
    for row in rows:
        grouped.setdefault((row.scheme, row.metric), []).append(row)
    means = []
    for group in grouped.values():
        means.append(replace(group[0], seed=MEAN_SEED, value=float(np.mean([row.value for row in group]))))
    return means


def run_simulation(config):
    """
    Rows grouped by budget; within a budget by seed then scheme, followed by the
    mean rows of each scheme. Returns (rows, {(seed, budget): encoded root digest}).
    """
    results = _per_seed(simulate_seed, config)
    rows, digests = [], {}
    for budget in config.budgets:
        block = [row for result in results for row in result.rows[budget]]
        rows += block + mean_rows(block)
        for result in results:
            if budget in result.digests:
                digests[result.seed, budget] = result.digests[budget]
    return rows, digests


def histogram_seed(config, seed):
    topology, tree, readings = _network(config, seed)
    rows = []
    for budget, k in config.budget_ks():
        report = run_aggregation(tree, readings, DigestConfig(sigma=config.sigma, k=k), QDIGEST,
                                 node_count=config.nodes)
        for bucket, (low, high, estimate) in enumerate(histogram(report.summary, config.buckets)):
            rows.append(HistogramRow(seed, config.nodes, config.sigma, budget, k, bucket, low, high,
                                     estimate, exact_range(report.oracle, low, high)))
    return rows


def run_histogram(config):
    """Equi-width bucket counts from the base-station digest next to the exact counts."""
    return [row for rows in _per_seed(histogram_seed, config) for row in rows]


def write_csv(rows, columns, stream):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row.as_csv())
    logger.info('wrote %d rows', len(rows))
