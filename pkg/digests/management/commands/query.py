import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from digests.codec import decode
from digests.exceptions import DigestDecodeError, DigestError
from digests.query_service import answer_queries

logger = logging.getLogger(__name__)


def _range(text):
    low, sep, high = text.partition(',')
    if not sep:
        raise ValueError(f'range {text!r} is not LOW,HIGH')
    return int(low), int(high)


class Command(BaseCommand):
    help = 'Answer quantile, rank, range and consensus queries from a saved digest encoding; prints JSON.'

    def add_arguments(self, parser):
        parser.add_argument('digest_file', help='File holding one encoded digest (as written by simulate --digest-out)')
        parser.add_argument('--quantile', action='append', type=float, default=[], metavar='Q',
                            help='Quantile fraction in (0, 1); repeatable')
        parser.add_argument('--rank', action='append', type=int, default=[], metavar='X',
                            help='Value whose rank (readings below it) to estimate; repeatable')
        parser.add_argument('--range', action='append', type=_range, default=[], metavar='LOW,HIGH',
                            help='Closed value range to count; repeatable')
        parser.add_argument('--consensus', action='append', type=float, default=[], metavar='S',
                            help='Report values held by more than S*n sensors; repeatable')
        parser.add_argument('--k', type=int, help='Compression factor the digest was built with')
        parser.add_argument('--out', help='Write the JSON here instead of stdout')

    def handle(self, *args, **options):
        path = Path(options['digest_file'])
        try:
            data = path.read_bytes()
        except OSError as e:
            raise CommandError(f'cannot read {path}: {e.strerror}')

        if options['k'] is not None and options['k'] < 1:
            raise CommandError('--k must be at least 1')
        try:
            digest = decode(data, k=options['k'])
        except DigestDecodeError as e:
            raise CommandError(f'{path} does not hold a digest: {e}')

        try:
            document = answer_queries(
                digest,
                quantiles=options['quantile'],
                ranks=options['rank'],
                ranges=options['range'],
                consensus=options['consensus'],
            )
        except DigestError as e:
            raise CommandError(str(e))

        text = json.dumps(document, indent=2)
        if options['out']:
            Path(options['out']).write_text(text + '\n')
            logger.info('query answers written to %s', options['out'])
        else:
            self.stdout.write(text)
