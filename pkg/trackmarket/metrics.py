#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Per-entity prevalence, prominence and integration shares.

Prominence weights every first party by the reciprocal of its rank, so an
entity on the most popular site counts as much as one on the second and
third most popular sites together.
"""

import math
import logging
import functools
import fractions
import collections

import trackmarket.format
import trackmarket.exception as te
from .kb import Level
from .ingest import Platform

LOGGER = logging.getLogger('trackmarket.metrics')

COLUMNS = ("entity_id", "display_name", "prevalence", "prominence", "ish", "prowish",
           "prevalence_rank", "prominence_rank", "rank_change")
EXACT_TOLERANCE = 1e-9


def rank_weight(rank, exponent=1.0):
    """
    Audience weight of a first party with the given rank.

    The default exponent gives the reciprocal rank; other exponents model a
    different Zipf-like popularity decay.
    """
    if exponent == 1.0:
        return 1.0 / rank
    return float(rank) ** -exponent


def harmonic(n):
    return math.fsum(1.0 / k for k in range(1, n + 1))


def prominence(matrix, entity_id, exponent=1.0):
    """
    Sum of the rank weights of all first parties an entity is present on.
    """
    edges = matrix.edges(entity_id)
    return math.fsum(rank_weight(edge.rank, exponent) for edge in edges)


def exact_prominence(matrix, entity_id):
    """
    Reciprocal-rank prominence as an exact fraction.
    """
    return sum((fractions.Fraction(1, edge.rank) for edge in matrix.edges(entity_id)), fractions.Fraction(0))


class EntityMetrics:

    __slots__ = COLUMNS

    def __init__(self, entity_id, display_name, prevalence, prominence, ish, prowish,
                 prevalence_rank, prominence_rank):
        self.entity_id = entity_id
        self.display_name = display_name
        self.prevalence = prevalence
        self.prominence = prominence
        self.ish = ish
        self.prowish = prowish
        self.prevalence_rank = prevalence_rank
        self.prominence_rank = prominence_rank
        self.rank_change = prevalence_rank - prominence_rank

    def __getitem__(self, key):
        return getattr(self, key)

    def to_dict(self):
        return collections.OrderedDict((column, getattr(self, column)) for column in COLUMNS)

    def __repr__(self):
        return "<{}: prevalence {} #{}, prominence {} #{}>".format(
                self.entity_id, self.prevalence, self.prevalence_rank,
                trackmarket.format.sig9(self.prominence), self.prominence_rank)


class MetricsTable:
    """
    Metrics of all entities of one market, sorted by prominence.
    """

    def __init__(self, platform, level, rows, corpus_size=None):
        self.platform = Platform(platform)
        self.level = Level(level)
        self.corpus_size = corpus_size
        self.rows = sorted(rows, key=lambda row: (row.prominence_rank, row.entity_id))
        self._index = {row.entity_id: row for row in self.rows}

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __contains__(self, entity_id):
        return entity_id in self._index

    def row(self, entity_id):
        try:
            return self._index[entity_id]
        except KeyError:
            raise te.TmLookupException("entity", entity_id)

    @property
    def entity_ids(self):
        return sorted(self._index)

    def top(self, count):
        """
        The `count` most prominent rows; all rows if `count` is `None`.
        """
        if count is None:
            return list(self.rows)
        if count < 1:
            raise te.TmParameterException("top", count, "must be at least 1")
        return self.rows[:count]

    def write(self, stream, fmt="csv", top=None):
        title = "{} tracker entities at {} level, {} first parties".format(
                self.platform, self.level, self.corpus_size)
        trackmarket.format.write_rows(stream, fmt, COLUMNS, self.top(top), title=title)

    def write_csv(self, stream, top=None):
        self.write(stream, "csv", top)

    def write_jsonl(self, stream, top=None):
        self.write(stream, "jsonl", top)

    def __repr__(self):
        return "MetricsTable({}, {}, {} entities)".format(self.platform, self.level, len(self.rows))


def _ranks(values, exact=None):
    # Descending metric, ties broken by ascending entity id. Floats closer
    # than the rounding error of a sum are compared with `exact` instead.
    value = functools.lru_cache(maxsize=None)(exact) if exact is not None else None

    def compare(a, b):
        x, y = values[a], values[b]
        if exact is not None and math.isclose(x, y, rel_tol=EXACT_TOLERANCE):
            x, y = value(a), value(b)
        if x != y:
            return -1 if x > y else 1
        return (a > b) - (a < b)

    order = sorted(values, key=functools.cmp_to_key(compare))
    return {entity_id: rank for rank, entity_id in enumerate(order, start=1)}


def compute_metrics(matrix, kb=None, exponent=1.0):
    """
    Compute prevalence, prominence, ISH, PROWISH and ranks of all entities.

    Args:
        matrix -- `PresenceMatrix`, usually after the coverage threshold.
        kb -- Optional `KnowledgeBase` providing display names.
        exponent -- Rank weight exponent, see `rank_weight`.

    Raises:
        TmEmptyMarketException if the matrix has no entities.
    """
    if not len(matrix):
        raise te.TmEmptyMarketException("{} market at {} level has no entities".format(
                matrix.platform, matrix.level))

    prevalences = {entity_id: matrix.prevalence(entity_id) for entity_id in matrix.entity_ids}
    prominences = {entity_id: prominence(matrix, entity_id, exponent) for entity_id in matrix.entity_ids}
    total_prevalence = sum(prevalences.values())
    total_prominence = math.fsum(prominences.values())

    prevalence_ranks = _ranks(prevalences)
    exact = functools.partial(exact_prominence, matrix) if exponent == 1.0 else None
    prominence_ranks = _ranks(prominences, exact)

    rows = []
    for entity_id in matrix.entity_ids:
        name = kb[entity_id].display_name if kb is not None and entity_id in kb else entity_id
        rows.append(EntityMetrics(entity_id, name,
                                  prevalences[entity_id], prominences[entity_id],
                                  prevalences[entity_id] / total_prevalence,
                                  prominences[entity_id] / total_prominence,
                                  prevalence_ranks[entity_id], prominence_ranks[entity_id]))
    return MetricsTable(matrix.platform, matrix.level, rows, matrix.corpus_size)


class RankMovementReport:

    COLUMNS = ("entity_id", "prevalence_rank", "prominence_rank", "rank_change")

    def __init__(self, rows, fraction_demoted, fraction_promoted):
        self.rows = rows
        self.fraction_demoted = fraction_demoted
        self.fraction_promoted = fraction_promoted


def rank_movement_report(table, top_n):
    """
    Rank movement of the `top_n` most prevalent entities.

    The report also holds the fraction of all entities whose prominence rank
    is worse than their prevalence rank (negative rank change), and the
    fraction that moves up.
    """
    if isinstance(top_n, bool) or not isinstance(top_n, int) or top_n < 1:
        raise te.TmParameterException("top_n", top_n, "must be a positive integer")
    if not len(table):
        raise te.TmEmptyMarketException("metrics table is empty")
    by_prevalence = sorted(table.rows, key=lambda row: row.prevalence_rank)[:top_n]
    rows = [(row.entity_id, row.prevalence_rank, row.prominence_rank, row.rank_change)
            for row in by_prevalence]
    demoted = sum(1 for row in table.rows if row.rank_change < 0)
    promoted = sum(1 for row in table.rows if row.rank_change > 0)
    return RankMovementReport(rows, demoted / len(table), promoted / len(table))
