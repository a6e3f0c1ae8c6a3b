#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Parsing of detection exports into normalized observation records.

Web crawl exports list every host contacted while loading a site, app
analysis exports list library packages and URL strings found in the code.
Both are reduced to the third-party hosts and libraries of one first party.
"""

import re
import enum
import json
import logging
import collections
import urllib.parse

from publicsuffixlist import PublicSuffixList

import trackmarket.utils as tu
import trackmarket.exception as te

LOGGER = logging.getLogger('trackmarket.ingest')

_LABEL = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]{0,61}[a-z0-9_])?$")
_PACKAGE_LABEL = re.compile(r"^[A-Za-z0-9_$-]+$")


@enum.unique
class Platform(enum.Enum):
    WEB = "web"
    MOBILE = "mobile"

    def __str__(self):
        return self.value


def normalize_host(host):
    """
    Case-fold a hostname, strip a trailing dot and check its syntax.

    Raises:
        TmHostnameException if the host has empty labels or illegal characters.
    """
    if not isinstance(host, str):
        raise te.TmHostnameException(host, "not a string")
    normalized = host.strip().lower()
    if normalized.endswith("."):
        normalized = normalized[:-1]
    if not normalized:
        raise te.TmHostnameException(host, "empty hostname")
    if len(normalized) > 253:
        raise te.TmHostnameException(host, "longer than 253 characters")
    for label in normalized.split("."):
        if not label:
            raise te.TmHostnameException(host, "empty label")
        if not _LABEL.match(label):
            raise te.TmHostnameException(host, "illegal label '{}'".format(label))
    return normalized


def _split_package(package):
    if not isinstance(package, str):
        return None
    labels = package.strip().split(".")
    if any(not _PACKAGE_LABEL.match(label) for label in labels):
        return None
    return labels


class SuffixRuleSet:
    """
    Public-suffix rules in the publicsuffix.org list format.

    Rules may carry the `*.` wildcard and `!` exception markers, and may be
    written in Unicode; hosts match them in punycode form. Lookups
    follow the public-suffix algorithm, with the implicit `*` rule making
    unknown suffixes fall back to the last two labels.
    """

    def __init__(self, rules, source="<memory>"):
        self.source = source
        self._rules = frozenset(rule.strip().lower() for rule in rules if rule.strip())
        if not self._rules:
            raise te.TmSuffixRulesException(source, "rule set is empty!")
        for rule in sorted(self._rules):
            if not self.is_valid_rule(rule):
                raise te.TmSuffixRulesException(source, "invalid rule '{}'!".format(rule))
        self._psl = PublicSuffixList(source=sorted(self._rules), accept_unknown=True)

    @staticmethod
    def is_valid_rule(rule):
        if rule.startswith("!"):
            rule = rule[1:]
        if rule.startswith("*."):
            rule = rule[2:]
        if not rule:
            return False
        # Internationalized rules are checked in their punycode form
        try:
            rule = rule.encode("idna").decode("ascii")
        except UnicodeError:
            return False
        return all(_LABEL.match(label) for label in rule.split("."))

    @property
    def rules(self):
        return self._rules

    def private_suffix(self, host):
        return self._psl.privatesuffix(host)

    def __len__(self):
        return len(self._rules)

    def __repr__(self):
        return "SuffixRuleSet({}, {} rules)".format(self.source, len(self._rules))

    @staticmethod
    def from_lines(lines, source="<memory>"):
        rules = []
        for line in lines:
            # Rules end at the first whitespace, comments start with `//`
            line = line.strip()
            if not line or line.startswith("//"):
                continue
            rules.append(line.split()[0])
        return SuffixRuleSet(rules, source)


def load_suffix_rules(path):
    """
    Load public-suffix rules from a file in the public-suffix-list format.
    """
    try:
        with open(path, encoding="utf-8") as rulefile:
            return SuffixRuleSet.from_lines(rulefile, source=path)
    except OSError as error:
        raise te.TmSuffixRulesException(path, "cannot be read! {}".format(error.strerror))


def registrable_domain(host, rules):
    """
    Return the registrable domain (public suffix plus one label) of a host.

    A host that is itself a public suffix is returned unchanged.
    """
    host = normalize_host(host)
    return rules.private_suffix(host) or host


class RawWebRecord:

    def __init__(self, site_identifier, rank, request_hosts=None):
        if not isinstance(site_identifier, str) or not site_identifier.strip():
            raise ValueError("site_identifier must be a non-empty string")
        self.site_identifier = site_identifier
        self.rank = _check_rank(rank)
        self.request_hosts = tuple(tu.listify(request_hosts))

    @staticmethod
    def from_dict(data):
        return RawWebRecord(data["site_identifier"], data["rank"], data.get("request_hosts", []))


class RawAppRecord:

    def __init__(self, package_name, rank, library_packages=None, url_strings=None):
        labels = _split_package(package_name)
        if labels is None or len(labels) < 2:
            raise ValueError("package_name '{}' needs at least two labels".format(package_name))
        self.package_name = package_name.strip()
        self.rank = _check_rank(rank)
        self.library_packages = tuple(tu.listify(library_packages))
        self.url_strings = tuple(tu.listify(url_strings))

    @staticmethod
    def from_dict(data):
        return RawAppRecord(data["package_name"], data["rank"],
                            data.get("library_packages", []), data.get("url_strings", []))


def _check_rank(rank):
    if isinstance(rank, bool) or not isinstance(rank, int):
        raise ValueError("rank '{}' must be an integer".format(rank))
    if rank < 1:
        raise ValueError("rank {} must be positive".format(rank))
    return rank


class ObservationRecord:
    """
    One first party with its popularity rank and observed third parties.
    """
    FIELDS = ("first_party_id", "platform", "rank", "third_party_hosts", "third_party_libraries")

    __slots__ = ("_first_party_id", "_platform", "_rank", "_hosts", "_libraries")

    def __init__(self, first_party_id, platform, rank, third_party_hosts=None,
                 third_party_libraries=None):
        if not isinstance(first_party_id, str) or not first_party_id:
            raise ValueError("first_party_id must be a non-empty string")
        self._first_party_id = first_party_id
        self._platform = Platform(platform)
        self._rank = _check_rank(rank)
        self._hosts = frozenset(tu.listify(third_party_hosts))
        self._libraries = frozenset(tu.listify(third_party_libraries))

    @property
    def first_party_id(self):
        return self._first_party_id

    @property
    def platform(self):
        return self._platform

    @property
    def rank(self):
        return self._rank

    @property
    def third_party_hosts(self):
        return self._hosts

    @property
    def third_party_libraries(self):
        return self._libraries

    def to_dict(self):
        return collections.OrderedDict([
            ("first_party_id", self._first_party_id),
            ("platform", self._platform.value),
            ("rank", self._rank),
            ("third_party_hosts", sorted(self._hosts)),
            ("third_party_libraries", sorted(self._libraries)),
        ])

    @staticmethod
    def from_dict(data):
        return ObservationRecord(data["first_party_id"], data["platform"], data["rank"],
                                 data.get("third_party_hosts", []),
                                 data.get("third_party_libraries", []))

    def __eq__(self, other):
        if not isinstance(other, ObservationRecord):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self._first_party_id, self._platform, self._rank))

    def __repr__(self):
        return "<{}({}) #{}: {} hosts, {} libraries>".format(
                self._platform.value, self._first_party_id, self._rank,
                len(self._hosts), len(self._libraries))


def _warn(warnings, message, *args):
    message = message % args
    LOGGER.warning(message)
    if warnings is not None:
        warnings.append(message)


def filter_first_party(record, rules, warnings=None, collapse=False):
    """
    Remove all hosts of the first party itself from a web record.

    Args:
        record -- `RawWebRecord` or an already normalized `ObservationRecord`.
        rules -- `SuffixRuleSet` deciding the registrable domains.
        warnings -- Optional list collecting messages for skipped hosts.
        collapse -- Replace each remaining host by its registrable domain.

    Raises:
        TmHostnameException if the site identifier itself is malformed.
    """
    if isinstance(record, ObservationRecord):
        site, hosts = record.first_party_id, record.third_party_hosts
    else:
        site, hosts = record.site_identifier, record.request_hosts
    own_domain = registrable_domain(site, rules)

    third_parties = set()
    for host in hosts:
        try:
            normalized = normalize_host(host)
            domain = registrable_domain(normalized, rules)
        except te.TmHostnameException as error:
            _warn(warnings, "%s: skipping host: %s", site, error)
            continue
        if domain != own_domain:
            third_parties.add(domain if collapse else normalized)

    libraries = record.third_party_libraries if isinstance(record, ObservationRecord) else None
    return ObservationRecord(normalize_host(site), Platform.WEB, record.rank,
                             third_parties, libraries)


def url_host(url):
    """
    Extract the host of an HTTP(S) URL string, or `None` if it has none.
    """
    try:
        parts = urllib.parse.urlsplit(url.strip())
        if parts.scheme.lower() not in {"http", "https"}:
            return None
        return parts.hostname
    except (ValueError, AttributeError):
        return None


def _fallback_domain(host):
    return ".".join(host.split(".")[-2:])


def normalize_app(record, rules=None, warnings=None):
    """
    Normalize an app analysis record.

    Library packages are de-duplicated. URL strings are reduced to the
    registrable domains of their hosts, dropping the app's own domain as
    derived by reversing the package name. Without suffix rules the last two
    labels of a host are used.
    """
    from trackmarket.overlap import candidate_domain

    own_domain = candidate_domain(record.package_name).lower()
    hosts = set()
    for url in record.url_strings:
        host = url_host(url) if isinstance(url, str) else None
        if host is None:
            _warn(warnings, "%s: skipping unparseable URL '%s'", record.package_name, url)
            continue
        try:
            host = normalize_host(host)
            domain = registrable_domain(host, rules) if rules is not None else _fallback_domain(host)
        except te.TmHostnameException as error:
            _warn(warnings, "%s: skipping URL '%s': %s", record.package_name, url, error)
            continue
        if domain != own_domain:
            hosts.add(domain)

    libraries = set()
    for package in record.library_packages:
        labels = _split_package(package)
        if labels is None:
            _warn(warnings, "%s: skipping malformed library '%s'", record.package_name, package)
            continue
        libraries.add(".".join(labels))

    return ObservationRecord(record.package_name, Platform.MOBILE, record.rank, hosts, libraries)


def _check_unique(path, records):
    by_id = collections.defaultdict(list)
    by_rank = collections.defaultdict(list)
    for record in records:
        by_id[record.first_party_id].append(record.first_party_id)
        by_rank[record.rank].append(record.first_party_id)

    exceptions = []
    duplicate_ids = {key: ids for key, ids in by_id.items() if len(ids) > 1}
    if duplicate_ids:
        exceptions.append(te.TmCorpusDuplicateException(path, "first_party_id", duplicate_ids))
    duplicate_ranks = {key: ids for key, ids in by_rank.items() if len(ids) > 1}
    if duplicate_ranks:
        exceptions.append(te.TmCorpusDuplicateException(path, "rank", duplicate_ranks))

    if len(exceptions) == 1:
        raise exceptions[0]
    if exceptions:
        raise te.TmAggregateException(exceptions)


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as corpus:
            return [(lineno, line) for lineno, line in enumerate(corpus, start=1) if line.strip()]
    except OSError as error:
        raise te.TmRecordException(path, 0, "cannot be read! {}".format(error.strerror))
    except UnicodeDecodeError as error:
        raise te.TmRecordException(path, 0, "not UTF-8! {}".format(error))


def _parse_lines(path, lines, parse, jobs):
    def parse_line(item):
        lineno, line = item
        warnings = []
        try:
            data = json.loads(line)
            if not isinstance(data, dict):
                raise ValueError("expected an object")
            return parse(data, warnings), warnings, None
        except te.TmHostnameException as error:
            return None, warnings, te.TmRecordException(path, lineno, str(error))
        except (ValueError, KeyError, TypeError) as error:
            reason = "missing field {}".format(error) if isinstance(error, KeyError) else str(error)
            return None, warnings, te.TmRecordException(path, lineno, reason)

    return tu.ordered_map(parse_line, lines, jobs)


def _collect(path, results, warnings):
    records = []
    for record, record_warnings, error in results:
        if error is not None:
            raise error
        if warnings is not None:
            warnings.extend(record_warnings)
        records.append(record)
    _check_unique(path, records)
    return records


def load_corpus(path, platform, rules, warnings=None, jobs=1):
    """
    Load a raw detection export and normalize all records.

    Web records are filtered against their own registrable domain and
    collapsed to registrable domains; app records go through
    `normalize_app`.

    Args:
        path -- JSON-lines file with one raw record per line.
        platform -- `Platform` or its string value.
        rules -- `SuffixRuleSet`.
        warnings -- Optional list collecting per-host warnings.
        jobs -- Number of parser threads. The output order never depends on it.

    Returns:
        List of `ObservationRecord` in file order.
    """
    platform = Platform(platform)
    if platform == Platform.WEB:
        parse = lambda data, w: filter_first_party(RawWebRecord.from_dict(data), rules, w, collapse=True)
    else:
        parse = lambda data, w: normalize_app(RawAppRecord.from_dict(data), rules, w)

    lines = _read_lines(path)
    records = _collect(path, _parse_lines(path, lines, parse, jobs), warnings)
    LOGGER.info("Loaded %d %s records from '%s'", len(records), platform, path)
    return records


def load_observations(path, platform=None, jobs=1):
    """
    Load a normalized observation file as written by `write_observations`.
    """
    lines = _read_lines(path)
    records = _collect(path, _parse_lines(path, lines, lambda d, w: ObservationRecord.from_dict(d), jobs), None)

    platforms = collections.OrderedDict()
    for (lineno, _), record in zip(lines, records):
        platforms.setdefault(record.platform, lineno)
    if platform is not None:
        platform = Platform(platform)
        platforms.setdefault(platform, 0)
        platforms.move_to_end(platform, last=False)
    if len(platforms) > 1:
        first, second = list(platforms.items())[:2]
        raise te.TmRecordException(path, second[1], "platform '{}' mixed with '{}'!".format(
                second[0], first[0]))
    return records


def write_observations(records, stream):
    for record in records:
        stream.write(json.dumps(record.to_dict(), ensure_ascii=False))
        stream.write("\n")
