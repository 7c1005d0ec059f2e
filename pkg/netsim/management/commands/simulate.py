import io
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from datasets.exceptions import GridParseError
from digests.exceptions import DigestError
from netsim.exceptions import SimulationError
from netsim.experiments import CSV_COLUMNS, add_run_arguments, load_run_config, run_simulation, write_csv
from netsim.models import ExperimentRow

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = ('Aggregate sensor readings up a routing tree with q-digests and with exact lists, '
            'and print one CSV row per (seed, scheme, budget, metric).')

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument('--record', action='store_true', help='Also store every row in the database')
        parser.add_argument('--digest-out', metavar='DIR',
                            help='Save the base-station digest of each seed and budget into DIR')

    def handle(self, *args, **options):
        try:
            config = load_run_config(options, options['config'])
            rows, digests = run_simulation(config)
        except (SimulationError, DigestError, GridParseError) as e:
            raise CommandError(str(e))
        except OSError as e:
            raise CommandError(f'cannot read input: {e}')

        if options['digest_out']:
            directory = Path(options['digest_out'])
            directory.mkdir(parents=True, exist_ok=True)
            for (seed, budget), data in digests.items():
                (directory / f'seed{seed}_budget{budget}.qd').write_bytes(data)
            logger.info('%d digests written to %s', len(digests), directory)

        if options['record']:
            with transaction.atomic():
                ExperimentRow.objects.bulk_create(ExperimentRow.from_result(row) for row in rows)
            logger.info('recorded %d rows', len(rows))

        buffer = io.StringIO()
        write_csv(rows, CSV_COLUMNS, buffer)
        if options['out']:
            Path(options['out']).write_text(buffer.getvalue())
        else:
            self.stdout.write(buffer.getvalue(), ending='')
