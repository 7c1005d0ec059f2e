# digests/codec.py
"""
Canonical binary encoding of a digest, as sent from a sensor to its parent.

Layout (big-endian):

    magic      1 byte   0x51 ('Q')
    version    1 byte   0x01
    log2 sigma 1 byte
    n          8 bytes  unsigned
    tuples     4 bytes  unsigned
    payload    <node id, count> tuples in ascending id order, each packed as
               log2(2 sigma) id bits then bit_length(n) count bits, most
               significant bit first, zero padded to a whole byte at the end.
"""
import logging
import struct

from .digest import DigestConfig, QDigest
from .exceptions import DigestDecodeError

logger = logging.getLogger(__name__)

MAGIC = 0x51
VERSION = 0x01
HEADER = struct.Struct('>BBBQI')
MAX_HEIGHT = 62


def id_bits(height):
    """Bits per node id: ceil(log2(2 sigma)) for a tree of the given height."""
    return height + 1


def count_bits(n):
    """Bits per count: ceil(log2(n + 1)), so a single bucket holding all n readings fits."""
    return n.bit_length()


def payload_size(height, n, tuples):
    return (tuples * (id_bits(height) + count_bits(n)) + 7) // 8


def encoded_size(digest):
    """Length of encode(digest) without building the bytes."""
    return HEADER.size + payload_size(digest.config.height, digest.n, len(digest))


def encode(digest):
    config = digest.config
    width = id_bits(config.height) + count_bits(digest.n)
    shift = count_bits(digest.n)

    items = digest.items()
    packed = 0
    for node_id, count in items:
        packed = (packed << width) | (node_id << shift) | count
    total_bits = width * len(items)
    padding = -total_bits % 8
    payload = (packed << padding).to_bytes((total_bits + padding) // 8, 'big')

    header = HEADER.pack(MAGIC, VERSION, config.height, digest.n, len(items))
    return header + payload


def decode(data, k=None):
    """
    Rebuild a digest from `encode` output.

    The encoding does not carry k. Without one, the smallest k a digest of this
    size could have been compressed with (tuples <= 3k) is assumed, which keeps
    error budgets on the safe side.
    """
    data = bytes(data)
    if len(data) < HEADER.size:
        raise DigestDecodeError('header', len(data), f'truncated: {len(data)} of {HEADER.size} bytes')
    magic, version, height, n, tuples = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DigestDecodeError('magic', 0, f'expected 0x{MAGIC:02x}, found 0x{magic:02x}')
    if version != VERSION:
        raise DigestDecodeError('version', 1, f'unsupported format version {version}')
    if not 1 <= height <= MAX_HEIGHT:
        raise DigestDecodeError('sigma', 2, f'log2 sigma {height} outside [1, {MAX_HEIGHT}]')

    capacity = 1 << height
    max_node_id = 2 * capacity - 1
    if tuples > max_node_id:
        raise DigestDecodeError('tuple_count', 11, f'{tuples} tuples exceed the {max_node_id} tree nodes')

    expected = payload_size(height, n, tuples)
    payload = data[HEADER.size:]
    if len(payload) < expected:
        raise DigestDecodeError('payload', len(data), f'truncated: {len(payload)} of {expected} payload bytes')
    if len(payload) > expected:
        raise DigestDecodeError('payload', HEADER.size + expected, f'{len(payload) - expected} trailing bytes')

    shift = count_bits(n)
    width = id_bits(height) + shift
    total_bits = width * tuples
    padding = -total_bits % 8
    packed = int.from_bytes(payload, 'big')
    if packed & ((1 << padding) - 1):
        raise DigestDecodeError('padding', len(data) - 1, 'nonzero padding bits')
    packed >>= padding

    tuple_mask = (1 << width) - 1
    count_mask = (1 << shift) - 1
    buckets = {}
    previous = 0
    total = 0
    for index in range(tuples):
        offset = HEADER.size + index * width // 8
        chunk = (packed >> ((tuples - 1 - index) * width)) & tuple_mask
        node_id, count = chunk >> shift, chunk & count_mask
        if not 1 <= node_id <= max_node_id:
            raise DigestDecodeError('node_id', offset, f'id {node_id} outside [1, {max_node_id}]')
        if node_id == previous:
            raise DigestDecodeError('node_id', offset, f'duplicate id {node_id}')
        if node_id < previous:
            raise DigestDecodeError('node_id', offset, f'id {node_id} out of ascending order')
        if count == 0:
            raise DigestDecodeError('count', offset, f'zero count stored for node {node_id}')
        buckets[node_id] = count
        previous = node_id
        total += count
    if total != n:
        raise DigestDecodeError('n', 3, f'tuple counts sum to {total}, header says {n}')

    if k is None:
        k = max(1, -(-tuples // 3))
    logger.debug('decoded %d tuples, sigma=%d n=%d k=%d', tuples, capacity, n, k)
    return QDigest._trusted(DigestConfig(sigma=capacity, k=k), buckets, n)
