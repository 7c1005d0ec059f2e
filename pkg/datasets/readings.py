# datasets/readings.py
import logging

import numpy as np

logger = logging.getLogger(__name__)


def uniform_readings(n, sigma, seed=0):
    """n independent uniform integers in [1, sigma]; the same seed gives the same list."""
    if n < 1:
        raise ValueError(f'need at least one reading, got {n}')
    rng = np.random.default_rng(seed)
    return rng.integers(1, sigma, size=n, endpoint=True).tolist()


def distinct_count(readings):
    return len(set(readings))


def write_readings(readings, stream):
    """One integer per line, in sensor order."""
    for value in readings:
        stream.write(f'{value}\n')
    logger.debug('wrote %d readings', len(readings))
