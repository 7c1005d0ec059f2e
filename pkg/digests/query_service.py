# digests/query_service.py
"""
Answer a batch of queries against one digest and shape the result as the JSON
document shared by `manage.py query` and the query endpoint.
"""
import logging

from . import queries

logger = logging.getLogger(__name__)


def answer_queries(digest, quantiles=(), ranks=(), ranges=(), consensus=()):
    config = digest.config
    report = queries.confidence_factor(digest)
    document = {
        'sigma': config.sigma,
        'k': config.k,
        'n': digest.n,
        'tuples': len(digest),
        'epsilon': float(config.epsilon),
        'error_budget': queries.error_budget(digest),
        'theta': float(report.theta),
        'theta_fraction': str(report.theta),
        'max_rank_error': float(report.max_rank_error),
    }

    if quantiles:
        answers = queries.quantiles(digest, list(quantiles))
        document['quantiles'] = [{'q': q, 'value': answer.value} for q, answer in zip(quantiles, answers)]
    if ranks:
        document['ranks'] = [{'value': x, 'rank': queries.inverse_quantile(digest, x).rank} for x in ranks]
    if ranges:
        document['ranges'] = [
            {'low': low, 'high': high, 'count': queries.range_count(digest, low, high).rank}
            for low, high in ranges
        ]
    if consensus:
        document['consensus'] = [
            {'s': s, 'values': [{'value': value, 'count': count} for value, count in queries.consensus(digest, s)]}
            for s in consensus
        ]

    logger.debug('answered %d quantile, %d rank, %d range and %d consensus queries on n=%d',
                 len(quantiles), len(ranks), len(ranges), len(consensus), digest.n)
    return document
