import io
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from datasets.exceptions import GridParseError
from datasets.readings import uniform_readings, write_readings
from datasets.terrain import load_grid, terrain_readings
from netsim.exceptions import SimulationError
from netsim.topology import generate_topology


class Command(BaseCommand):
    help = 'Print the reading of every sensor, one integer per line in sensor order.'

    def add_arguments(self, parser):
        defaults = settings.SENSORNET
        parser.add_argument('--nodes', type=int, default=defaults['NODES'], help='Sensors in the network')
        parser.add_argument('--sigma', type=int, default=defaults['SIGMA'], help='Largest reading value')
        parser.add_argument('--seed', type=int, default=1, help='Seed for readings and placement')
        parser.add_argument('--dataset', choices=('uniform', 'grid'), default='uniform')
        parser.add_argument('--grid', default=str(defaults['GRID_FILE']), help='Elevation grid for --dataset grid')
        parser.add_argument('--out', help='Write the readings here instead of stdout')

    def handle(self, *args, **options):
        if options['nodes'] < 1:
            raise CommandError('--nodes must be positive')
        if options['sigma'] < 2:
            raise CommandError('--sigma must be at least 2')
        try:
            if options['dataset'] == 'grid':
                defaults = settings.SENSORNET
                grid = load_grid(options['grid'], options['sigma'])
                topology = generate_topology(options['nodes'], defaults['DENSITY'], seed=options['seed'],
                                             max_regenerations=defaults['MAX_REGENERATIONS'],
                                             mean_degree=defaults['MEAN_DEGREE'])
                readings = terrain_readings(grid, topology)
            else:
                readings = uniform_readings(options['nodes'], options['sigma'], options['seed'])
        except (GridParseError, SimulationError) as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f'cannot read grid: {e}')

        buffer = io.StringIO()
        write_readings(readings, buffer)
        if options['out']:
            Path(options['out']).write_text(buffer.getvalue())
        else:
            self.stdout.write(buffer.getvalue(), ending='')
