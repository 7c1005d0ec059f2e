# datasets/terrain.py
"""
Terrain-correlated readings: every sensor reports the elevation of the grid
cell it stands on, so nearby sensors report similar values.

Grid files are plain text. The first line holds "width height"; each of the
next `height` lines holds `width` integer elevations separated by whitespace.
Blank lines and lines starting with '#' are skipped.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import GridParseError

logger = logging.getLogger(__name__)


def rescale(elevations, sigma):
    """Map raw elevations linearly onto [1, sigma], lowest to 1 and highest to sigma."""
    # python ints: (raw - low) * (sigma - 1) outgrows int64 on wide elevation ranges
    raw = np.asarray(elevations, dtype=np.int64).astype(object)
    low, high = int(raw.min()), int(raw.max())
    if low == high:
        return np.ones(raw.shape, dtype=np.int64)
    span = high - low
    return (1 + ((raw - low) * (sigma - 1) + span // 2) // span).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ElevationGrid:
    """
    Row-major elevations already rescaled into [1, sigma]. `raw_min` and
    `raw_max` record the source range the scaling was derived from.
    """
    width: int
    height: int
    elevations: np.ndarray
    sigma: int
    raw_min: int
    raw_max: int

    @classmethod
    def from_elevations(cls, raw, sigma):
        raw = np.asarray(raw, dtype=np.int64)
        height, width = raw.shape
        return cls(width=width, height=height, elevations=rescale(raw, sigma), sigma=sigma,
                   raw_min=int(raw.min()), raw_max=int(raw.max()))

    def cell(self, x, y):
        return int(self.elevations[y, x])

    def __eq__(self, other):
        if not isinstance(other, ElevationGrid):
            return NotImplemented
        return self.sigma == other.sigma and np.array_equal(self.elevations, other.elevations)

    __hash__ = None


def parse_grid(text, sigma):
    header = None
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        try:
            fields = [int(token) for token in stripped.split()]
        except ValueError:
            raise GridParseError(number, f'non-integer field in {stripped[:40]!r}') from None
        if header is None:
            if len(fields) != 2 or min(fields) < 1:
                raise GridParseError(number, 'header must be two positive integers "width height"')
            header = fields
            continue
        width, height = header
        if len(rows) == height:
            raise GridParseError(number, f'more than the {height} rows the header declares')
        if len(fields) != width:
            raise GridParseError(number, f'expected {width} elevations, found {len(fields)}')
        rows.append(fields)

    if header is None:
        raise GridParseError(1, 'empty grid file')
    if len(rows) != header[1]:
        raise GridParseError(number + 1, f'expected {header[1]} rows, found {len(rows)}')
    return ElevationGrid.from_elevations(rows, sigma)


def load_grid(path, sigma):
    path = Path(path)
    grid = parse_grid(path.read_text(), sigma)
    logger.info('loaded %dx%d grid from %s (raw elevations %d..%d)',
                grid.width, grid.height, path, grid.raw_min, grid.raw_max)
    return grid


def terrain_readings(grid, topology):
    """
    Stretch the grid over the sensor field and read the cell under each sensor.
    Positions map to cells by flooring; the far edges fall into the last row and column.
    """
    scaled = np.floor(topology.positions / topology.side * (grid.width, grid.height)).astype(np.int64)
    columns = np.clip(scaled[:, 0], 0, grid.width - 1)
    rows = np.clip(scaled[:, 1], 0, grid.height - 1)
    return grid.elevations[rows, columns].tolist()


def two_plateau_elevations(width=64, height=64, low=1000, high=3000):
    """
    Synthetic terrain with two flat regions joined by a ramp, plus a small
    deterministic ripple. Sampled readings pile up in two peaks.
    """
    rows = np.arange(height)[:, None]
    columns = np.arange(width)[None, :]
    ramp_start, ramp_end = width * 2 // 5, width * 3 // 5
    ramp = low + (high - low) * (columns - ramp_start) // max(ramp_end - ramp_start, 1)
    base = np.where(columns < ramp_start, low, np.where(columns >= ramp_end, high, ramp))
    return base + (7 * rows + 13 * columns) % 41


def two_plateau_grid(sigma, width=64, height=64, low=1000, high=3000):
    return ElevationGrid.from_elevations(two_plateau_elevations(width, height, low, high), sigma)


def format_grid(raw):
    raw = np.asarray(raw)
    lines = [f'{raw.shape[1]} {raw.shape[0]}']
    lines.extend(' '.join(str(value) for value in row) for row in raw.tolist())
    return '\n'.join(lines) + '\n'
