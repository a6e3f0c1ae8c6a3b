#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Join of observation corpora with the knowledge base.

The result is a bipartite presence matrix between tracker entities and
first parties, the input of all metrics.
"""

import csv
import enum
import logging
import fractions
import collections

import trackmarket.utils as tu
import trackmarket.exception as te
from .kb import Level
from .ingest import Platform

LOGGER = logging.getLogger('trackmarket.attribution')

DEFAULT_MIN_COVERAGE = 0.005

Edge = collections.namedtuple("Edge", ["first_party_id", "rank"])


@enum.unique
class ThresholdStage(enum.Enum):
    ENTITY = "entity"
    PRE_CONSOLIDATION = "pre-consolidation"

    def __str__(self):
        return self.value


class AttributedRecord:
    """
    The tracker entities found on one first party.
    """

    def __init__(self, first_party_id, rank, entities, non_trackers=None, unmatched=None):
        self.first_party_id = first_party_id
        self.rank = rank
        self.entities = frozenset(entities)
        self.non_trackers = frozenset(non_trackers or ())
        self.unmatched = frozenset(unmatched or ())

    def __repr__(self):
        return "<{} #{}: {}>".format(self.first_party_id, self.rank, ", ".join(sorted(self.entities)))


class PresenceMatrix:
    """
    Presence of tracker entities on the first parties of one corpus.
    """

    def __init__(self, platform, level, first_parties, presence, unattributed=None, non_trackers=None):
        self._platform = Platform(platform)
        self._level = Level(level)
        self._first_parties = dict(first_parties)
        if not self._first_parties:
            raise te.TmEmptyCorpusException(self._platform)
        self._presence = {entity_id: frozenset(Edge(*edge) for edge in edges)
                          for entity_id, edges in presence.items() if edges}
        self._unattributed = collections.Counter(unattributed or {})
        self._non_trackers = collections.Counter(non_trackers or {})

        for entity_id, edges in self._presence.items():
            for edge in edges:
                if self._first_parties.get(edge.first_party_id) != edge.rank:
                    raise ValueError("Edge {} of '{}' is not part of the corpus".format(edge, entity_id))

    @property
    def platform(self):
        return self._platform

    @property
    def level(self):
        return self._level

    @property
    def corpus_size(self):
        return len(self._first_parties)

    @property
    def max_rank(self):
        return max(self._first_parties.values())

    @property
    def first_parties(self):
        return self._first_parties

    @property
    def presence(self):
        return self._presence

    @property
    def unattributed(self):
        return self._unattributed

    @property
    def non_trackers(self):
        return self._non_trackers

    @property
    def entity_ids(self):
        return sorted(self._presence)

    def __len__(self):
        return len(self._presence)

    def __contains__(self, entity_id):
        return entity_id in self._presence

    def edges(self, entity_id):
        try:
            return self._presence[entity_id]
        except KeyError:
            raise te.TmLookupException("entity", entity_id)

    def prevalence(self, entity_id):
        return len(self.edges(entity_id))

    def entities_of(self, first_party_id):
        """
        The set of entities present on one first party.
        """
        if first_party_id not in self._first_parties:
            raise te.TmLookupException("first party", first_party_id)
        return frozenset(entity_id for entity_id, edges in self._presence.items()
                         if any(e.first_party_id == first_party_id for e in edges))

    def _derive(self, presence, level=None):
        return PresenceMatrix(self._platform, self._level if level is None else level,
                              self._first_parties, presence, self._unattributed, self._non_trackers)

    def coverage(self):
        """
        Summary of how much of the observed third-party evidence the
        knowledge base attributed to tracker entities.
        """
        attributed = sum(len(edges) for edges in self._presence.values())
        return collections.OrderedDict([
            ("entities", len(self._presence)),
            ("edges", attributed),
            ("non_tracker_occurrences", sum(self._non_trackers.values())),
            ("unattributed_occurrences", sum(self._unattributed.values())),
            ("unattributed_distinct", len(self._unattributed)),
        ])

    def write(self, stream):
        """
        Write all edges as CSV rows `entity_id,first_party_id,rank`.
        """
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["entity_id", "first_party_id", "rank"])
        for entity_id in self.entity_ids:
            for edge in sorted(self._presence[entity_id], key=lambda e: (e.rank, e.first_party_id)):
                writer.writerow([entity_id, edge.first_party_id, edge.rank])

    def __eq__(self, other):
        if not isinstance(other, PresenceMatrix):
            return NotImplemented
        return (self._platform, self._level, self._first_parties, self._presence) == \
               (other._platform, other._level, other._first_parties, other._presence)

    def __repr__(self):
        return "PresenceMatrix({}, {}, {} first parties, {} entities)".format(
                self._platform, self._level, self.corpus_size, len(self._presence))


def _match_host(kb, host):
    # Hosts are normally registrable domains already. Longer hosts written by
    # other tools are matched on their parent domains.
    labels = host.split(".")
    for start in range(0, max(1, len(labels) - 1)):
        entity_id = kb.match_host(".".join(labels[start:]))
        if entity_id is not None:
            return entity_id
    return None


def attribute_record(record, kb, level=Level.SUBSIDIARY):
    """
    Resolve the hosts and libraries of one first party to tracker entities.

    Host and library evidence are combined, so each entity appears at most
    once. Matches of non-tracker entities are reported separately. At parent
    level every entity is replaced by its ultimate parent.
    """
    level = Level(level)
    matched, non_trackers, unmatched = set(), set(), set()

    evidence = [(host, _match_host(kb, host)) for host in sorted(record.third_party_hosts)]
    evidence += [(library, kb.match_library(library)) for library in sorted(record.third_party_libraries)]
    for key, entity_id in evidence:
        if entity_id is None:
            unmatched.add(key)
        elif not kb[entity_id].is_tracker:
            non_trackers.add(entity_id)
        else:
            matched.add(entity_id)

    if level == Level.PARENT:
        matched = {kb.ultimate_parent(entity_id) for entity_id in matched}
    return AttributedRecord(record.first_party_id, record.rank, matched, non_trackers, unmatched)


def _platform_of(corpus):
    platforms = {record.platform for record in corpus}
    if len(platforms) > 1:
        raise te.TmParameterException("corpus", ", ".join(sorted(str(p) for p in platforms)),
                                      "mixes platforms")
    return next(iter(platforms))


def build_presence(corpus, kb, level=Level.SUBSIDIARY, jobs=1):
    """
    Build the presence matrix of a validated corpus.

    Args:
        corpus -- List of `ObservationRecord` of one platform.
        kb -- `KnowledgeBase`.
        level -- `Level.SUBSIDIARY` or `Level.PARENT`.
        jobs -- Number of attribution threads.

    Raises:
        TmEmptyCorpusException if the corpus has no records.
    """
    corpus = list(corpus)
    if not corpus:
        raise te.TmEmptyCorpusException("unknown")
    platform = _platform_of(corpus)
    level = Level(level)

    attributed = tu.ordered_map(lambda r: attribute_record(r, kb, level), corpus, jobs)

    presence = collections.defaultdict(set)
    unattributed = collections.Counter()
    non_trackers = collections.Counter()
    for record in attributed:
        for entity_id in record.entities:
            presence[entity_id].add(Edge(record.first_party_id, record.rank))
        unattributed.update(record.unmatched)
        non_trackers.update(record.non_trackers)

    matrix = PresenceMatrix(platform, level, {r.first_party_id: r.rank for r in corpus},
                            presence, unattributed, non_trackers)
    LOGGER.info("%s: %d entities at %s level, %d unattributed hosts/libraries",
                platform, len(matrix), level, len(unattributed))
    return matrix


def consolidate(matrix, kb):
    """
    Collapse a subsidiary-level matrix to ultimate parents.

    Each parent's presence set is the union of the presence sets of its
    tree, so a first party with two subsidiaries of one parent counts once.
    """
    if matrix.level == Level.PARENT:
        return matrix
    presence = collections.defaultdict(set)
    for entity_id, edges in matrix.presence.items():
        presence[kb.ultimate_parent(entity_id)] |= edges
    return matrix._derive(presence, Level.PARENT)


def _exact_fraction(value):
    # Decimal input such as 0.005 is meant exactly, not as its binary neighbour
    return fractions.Fraction(repr(float(value)))


def apply_coverage_threshold(matrix, min_fraction=DEFAULT_MIN_COVERAGE):
    """
    Drop entities present on fewer than `min_fraction` of all first parties.

    An entity exactly at the threshold is kept.
    """
    if isinstance(min_fraction, bool) or not 0 <= min_fraction <= 1:
        raise te.TmParameterException("min_fraction", min_fraction, "must be in [0, 1]")
    cutoff = _exact_fraction(min_fraction) * matrix.corpus_size
    kept = {entity_id: edges for entity_id, edges in matrix.presence.items() if len(edges) >= cutoff}
    dropped = len(matrix.presence) - len(kept)
    if dropped:
        LOGGER.debug("%s: coverage threshold %s drops %d entities", matrix.platform, min_fraction, dropped)
    return matrix._derive(kept)


def market_matrix(matrix, kb, level, min_fraction=DEFAULT_MIN_COVERAGE, stage=ThresholdStage.ENTITY):
    """
    Presence matrix of the market analyzed at `level`.

    The coverage threshold applies to the entities of the analysis level, or
    to subsidiaries before consolidation with `ThresholdStage.PRE_CONSOLIDATION`.
    """
    level, stage = Level(level), ThresholdStage(stage)
    if level == Level.SUBSIDIARY:
        if matrix.level != Level.SUBSIDIARY:
            raise te.TmLevelMismatchException(matrix.level, level)
        return apply_coverage_threshold(matrix, min_fraction)
    if stage == ThresholdStage.PRE_CONSOLIDATION:
        return consolidate(apply_coverage_threshold(matrix, min_fraction), kb)
    return apply_coverage_threshold(consolidate(matrix, kb), min_fraction)
