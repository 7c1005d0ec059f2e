import io
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from datasets.exceptions import GridParseError
from digests.exceptions import DigestError
from netsim.exceptions import SimulationError
from netsim.experiments import HISTOGRAM_COLUMNS, add_run_arguments, load_run_config, run_histogram, write_csv


class Command(BaseCommand):
    help = ('Compare the equi-width histogram read off the base-station q-digest with the exact '
            'bucket counts; terrain readings by default.')

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument('--buckets', type=int, help='Number of equal-width buckets over [1, sigma]')

    def handle(self, *args, **options):
        try:
            config = load_run_config(options, options['config'], dataset='grid', schemes='qdigest')
            rows = run_histogram(config)
        except (SimulationError, DigestError, GridParseError) as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f'cannot read input: {e}')

        buffer = io.StringIO()
        write_csv(rows, HISTOGRAM_COLUMNS, buffer)
        if options['out']:
            Path(options['out']).write_text(buffer.getvalue())
        else:
            self.stdout.write(buffer.getvalue(), ending='')
