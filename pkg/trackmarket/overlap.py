#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Web and mobile versions of the same service: pair identification, tracker
overlap and the comparison of two detection methods on one set of first
parties.
"""

import csv
import enum
import logging
import collections

import trackmarket.utils as tu
import trackmarket.exception as te
from .kb import Level
from .ingest import registrable_domain, normalize_host
from .attribution import attribute_record

LOGGER = logging.getLogger('trackmarket.overlap')

PAIR_COLUMNS = ("web_first_party_id", "mobile_first_party_id", "provenance")
OVERLAP_COLUMNS = ("web_first_party_id", "mobile_first_party_id", "provenance",
                   "web_entities", "mobile_entities", "intersection", "union",
                   "web_only", "mobile_only", "rate")
COMPARISON_COLUMNS = ("first_party_id", "a_only", "b_only", "both")
SHARED_COLUMNS = ("entity_id", "display_name", "web_prevalence", "web_prevalence_rank",
                  "mobile_prevalence", "mobile_prevalence_rank")


@enum.unique
class Provenance(enum.Enum):
    HEURISTIC = "heuristic"
    CURATED = "curated"

    def __str__(self):
        return self.value


def candidate_domain(package_name):
    """
    Guess the website of an app by reversing the first two package labels.

        >>> candidate_domain("com.spotify.music")
        'spotify.com'
    """
    labels = package_name.strip().split(".") if isinstance(package_name, str) else []
    if len(labels) < 2 or not all(labels[:2]):
        raise te.TmPackageNameException(package_name)
    return "{}.{}".format(labels[1], labels[0]).lower()


class ServicePair:

    def __init__(self, web_first_party_id, mobile_first_party_id, provenance=Provenance.CURATED):
        self.web_first_party_id = web_first_party_id
        self.mobile_first_party_id = mobile_first_party_id
        self.provenance = Provenance(provenance)

    def _key(self):
        return (self.web_first_party_id, self.mobile_first_party_id)

    def to_row(self):
        return collections.OrderedDict([
            ("web_first_party_id", self.web_first_party_id),
            ("mobile_first_party_id", self.mobile_first_party_id),
            ("provenance", self.provenance.value),
        ])

    def __eq__(self, other):
        if not isinstance(other, ServicePair):
            return NotImplemented
        return (self._key(), self.provenance) == (other._key(), other.provenance)

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "ServicePair({} <-> {}, {})".format(
                self.web_first_party_id, self.mobile_first_party_id, self.provenance)


def _site_domain(first_party_id, rules):
    if rules is not None:
        return registrable_domain(first_party_id, rules)
    return ".".join(normalize_host(first_party_id).split(".")[-2:])


def propose_pairs(web_corpus, mobile_corpus, rules=None):
    """
    Pair every app with the website whose registrable domain matches the
    reversed package name.

    Ambiguous matches are all kept for human curation. The result is sorted
    and does not depend on the order of the corpora.
    """
    sites = collections.defaultdict(list)
    for record in web_corpus:
        try:
            sites[_site_domain(record.first_party_id, rules)].append(record.first_party_id)
        except te.TmHostnameException as error:
            LOGGER.warning("Skipping website '%s': %s", record.first_party_id, error)

    pairs = set()
    for record in mobile_corpus:
        try:
            domain = candidate_domain(record.first_party_id)
        except te.TmPackageNameException as error:
            LOGGER.warning("Skipping app: %s", error)
            continue
        for site in sites.get(domain, []):
            pairs.add(ServicePair(site, record.first_party_id, Provenance.HEURISTIC))

    pairs = sorted(pairs, key=ServicePair._key)
    LOGGER.info("Proposed %d web/mobile pairs", len(pairs))
    return pairs


def load_pairs(path):
    """
    Load a curated pairs file, a CSV with the columns `web_first_party_id`
    and `mobile_first_party_id`.
    """
    pairs = collections.OrderedDict()
    try:
        with open(path, encoding="utf-8", newline="") as pairfile:
            reader = csv.DictReader(pairfile)
            missing = [c for c in PAIR_COLUMNS[:2] if c not in (reader.fieldnames or [])]
            if missing:
                raise te.TmRecordException(path, 1, "missing column(s) {}!".format(", ".join(missing)))
            for row in reader:
                web, mobile = (row[c].strip() if row[c] else "" for c in PAIR_COLUMNS[:2])
                if not web and not mobile:
                    continue
                if not web or not mobile:
                    raise te.TmRecordException(path, reader.line_num, "incomplete pair!")
                pair = ServicePair(web, mobile, Provenance.CURATED)
                if pair._key() in pairs:
                    LOGGER.warning("%s:%d: duplicate pair %s <-> %s", path, reader.line_num, web, mobile)
                    continue
                pairs[pair._key()] = pair
    except OSError as error:
        raise te.TmRecordException(path, 0, "cannot be read! {}".format(error.strerror))
    except UnicodeDecodeError as error:
        raise te.TmRecordException(path, 0, "not UTF-8! {}".format(error))
    return list(pairs.values())


def write_pairs(pairs, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(PAIR_COLUMNS)
    for pair in pairs:
        writer.writerow([pair.web_first_party_id, pair.mobile_first_party_id, pair.provenance.value])


def _check_levels(web_matrix, mobile_matrix, level):
    if web_matrix.level != mobile_matrix.level:
        raise te.TmLevelMismatchException(web_matrix.level, mobile_matrix.level)
    if level is not None and Level(level) != web_matrix.level:
        raise te.TmLevelMismatchException(web_matrix.level, Level(level))


def _pair_sets(pair, web_matrix, mobile_matrix):
    if pair.web_first_party_id not in web_matrix.first_parties:
        raise te.TmPairException(pair, "website is not part of the web corpus!")
    if pair.mobile_first_party_id not in mobile_matrix.first_parties:
        raise te.TmPairException(pair, "app is not part of the mobile corpus!")
    return (web_matrix.entities_of(pair.web_first_party_id),
            mobile_matrix.entities_of(pair.mobile_first_party_id))


def jaccard(left, right):
    """
    Intersection over union of two sets, `None` if both are empty.
    """
    union = len(left | right)
    if not union:
        return None
    return len(left & right) / union


def overlap_rate(pair, web_matrix, mobile_matrix, level=None):
    """
    Share of trackers found on both the app and the website of a pair.

    Returns:
        The Jaccard index of both tracker sets, or `None` if no trackers
        were observed on either side.
    """
    _check_levels(web_matrix, mobile_matrix, level)
    web, mobile = _pair_sets(pair, web_matrix, mobile_matrix)
    return jaccard(web, mobile)


class PairOverlap:

    def __init__(self, pair, web, mobile):
        self.pair = pair
        self.web_entities = len(web)
        self.mobile_entities = len(mobile)
        self.intersection = len(web & mobile)
        self.union = len(web | mobile)
        self.web_only = len(web - mobile)
        self.mobile_only = len(mobile - web)
        self.rate = jaccard(web, mobile)

    def to_row(self):
        row = self.pair.to_row()
        for column in OVERLAP_COLUMNS[3:]:
            row[column] = getattr(self, column)
        return row


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else None


class OverlapReport:
    """
    Per-pair tracker overlap and its means.

    Pairs without any tracker on either side have no rate; they are counted
    in `excluded` and left out of `mean_rate`, but enter the count means.
    """

    def __init__(self, level, per_pair):
        self.level = Level(level)
        self.per_pair = list(per_pair)
        rated = [p.rate for p in self.per_pair if p.rate is not None]
        self.excluded = len(self.per_pair) - len(rated)
        self.mean_rate = _mean(rated)
        self.mean_web_only = _mean(p.web_only for p in self.per_pair)
        self.mean_mobile_only = _mean(p.mobile_only for p in self.per_pair)
        self.mean_intersection = _mean(p.intersection for p in self.per_pair)

    def summary(self):
        return collections.OrderedDict([
            ("web_first_party_id", "mean"),
            ("mobile_first_party_id", ""),
            ("provenance", ""),
            ("web_entities", _mean(p.web_entities for p in self.per_pair)),
            ("mobile_entities", _mean(p.mobile_entities for p in self.per_pair)),
            ("intersection", self.mean_intersection),
            ("union", _mean(p.union for p in self.per_pair)),
            ("web_only", self.mean_web_only),
            ("mobile_only", self.mean_mobile_only),
            ("rate", self.mean_rate),
        ])

    def rows(self):
        return [p.to_row() for p in self.per_pair] + [self.summary()]


def overlap_report(pairs, web_matrix, mobile_matrix, level=None, jobs=1):
    """
    Overlap of all pairs. Every unresolvable pair is reported at once.
    """
    _check_levels(web_matrix, mobile_matrix, level)

    def measure(pair):
        try:
            return PairOverlap(pair, *_pair_sets(pair, web_matrix, mobile_matrix)), None
        except te.TmPairException as error:
            return None, error

    results = tu.ordered_map(measure, pairs, jobs)
    errors = [error for _, error in results if error is not None]
    if len(errors) == 1:
        raise errors[0]
    if errors:
        raise te.TmAggregateException(errors)

    report = OverlapReport(web_matrix.level, [overlap for overlap, _ in results])
    if report.excluded:
        LOGGER.warning("%d pair(s) without any tracker are excluded from the mean rate", report.excluded)
    return report


class RecallComparison:
    """
    Mean number of entities found by only one of two detection methods, and
    by both, per first party.
    """

    def __init__(self, level, rows):
        self.level = Level(level)
        self.rows = list(rows)
        self.mean_a_minus_b = _mean(r["a_only"] for r in self.rows)
        self.mean_b_minus_a = _mean(r["b_only"] for r in self.rows)
        self.mean_intersection = _mean(r["both"] for r in self.rows)

    def summary(self):
        return collections.OrderedDict([
            ("first_party_id", "mean"),
            ("a_only", self.mean_a_minus_b),
            ("b_only", self.mean_b_minus_a),
            ("both", self.mean_intersection),
        ])


def compare_methods(corpus_a, corpus_b, kb, level=Level.PARENT):
    """
    Compare two corpora of the same first parties, recorded with different
    detection methods.

    Only first parties present in both corpora are compared.

    Raises:
        TmParameterException if the corpora share no first party.
    """
    level = Level(level)
    records_a = {r.first_party_id: r for r in corpus_a}
    records_b = {r.first_party_id: r for r in corpus_b}
    common = sorted(set(records_a) & set(records_b))
    if not common:
        raise te.TmParameterException("corpora", "{} / {} first parties".format(
                len(records_a), len(records_b)), "no first party in common!")
    if len(common) != len(records_a) or len(common) != len(records_b):
        LOGGER.warning("Comparing only the %d first parties present in both corpora (%d / %d)",
                       len(common), len(records_a), len(records_b))

    rows = []
    for first_party_id in common:
        a = attribute_record(records_a[first_party_id], kb, level).entities
        b = attribute_record(records_b[first_party_id], kb, level).entities
        rows.append(collections.OrderedDict([
            ("first_party_id", first_party_id),
            ("a_only", len(a - b)),
            ("b_only", len(b - a)),
            ("both", len(a & b)),
        ]))
    return RecallComparison(level, rows)


def shared_entities(web_table, mobile_table):
    """
    Entities present in both the web and the mobile market, with their
    prevalence ranks on each platform.
    """
    if web_table.level != mobile_table.level:
        raise te.TmLevelMismatchException(web_table.level, mobile_table.level)
    rows = []
    for entity_id in sorted(set(web_table.entity_ids) & set(mobile_table.entity_ids)):
        web, mobile = web_table.row(entity_id), mobile_table.row(entity_id)
        rows.append(collections.OrderedDict([
            ("entity_id", entity_id),
            ("display_name", web.display_name),
            ("web_prevalence", web.prevalence),
            ("web_prevalence_rank", web.prevalence_rank),
            ("mobile_prevalence", mobile.prevalence),
            ("mobile_prevalence_rank", mobile.prevalence_rank),
        ]))
    rows.sort(key=lambda r: (r["web_prevalence_rank"], r["mobile_prevalence_rank"], r["entity_id"]))
    return rows
