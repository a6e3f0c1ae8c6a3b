#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Market concentration: Herfindahl-Hirschman indices, regulatory
classification, merger what-ifs and combined web and mobile markets.
"""

import enum
import json
import math
import logging
import collections

import trackmarket.exception as te
from .kb import Level
from .ingest import Platform
from .attribution import market_matrix, ThresholdStage
from .metrics import compute_metrics

LOGGER = logging.getLogger('trackmarket.market')

SHARE_TOLERANCE = 1e-9

# Regulatory thresholds
HIGHLY_COMPETITIVE = 0.01
UNCONCENTRATED = 0.15
MODERATE = 0.25
EU_THRESHOLD = 0.1
US_THRESHOLD = 0.25
EU_DELTA = 0.025

SCENARIO_COLUMNS = ("parent", "subsidiaries", "platform", "weight",
                    "hhi_actual", "hhi_counterfactual", "delta", "eu_concern")
PROPOSAL_COLUMNS = ("acquirer", "targets", "platform", "weight",
                    "hhi_before", "hhi_after", "delta", "eu_concern")
GRID_COLUMNS = ("market", "level", "firms",
                "ish_hhi", "ish_classification", "ish_eu_flag", "ish_us_flag",
                "prowish_hhi", "prowish_classification", "prowish_eu_flag", "prowish_us_flag")


@enum.unique
class Weight(enum.Enum):
    ISH = "ish"
    PROWISH = "prowish"

    def __str__(self):
        return self.value


@enum.unique
class Classification(enum.Enum):
    HIGHLY_COMPETITIVE = "highly_competitive"
    UNCONCENTRATED = "unconcentrated"
    MODERATE = "moderate"
    HIGHLY_CONCENTRATED = "highly_concentrated"

    def __str__(self):
        return self.value


def classify(value):
    if value < HIGHLY_COMPETITIVE:
        return Classification.HIGHLY_COMPETITIVE
    if value < UNCONCENTRATED:
        return Classification.UNCONCENTRATED
    if value <= MODERATE:
        return Classification.MODERATE
    return Classification.HIGHLY_CONCENTRATED


class MarketShares:
    """
    Market shares of N firms, measured by integration or prominence.
    """

    def __init__(self, weight, level, shares, market="market"):
        self.weight = Weight(weight)
        self.level = Level(level)
        self.market = market
        self.shares = collections.OrderedDict(sorted(shares.items()))
        for entity_id, share in self.shares.items():
            if not 0 < share <= 1:
                raise te.TmParameterException("share of " + entity_id, share, "must be in (0, 1]")
        total = math.fsum(self.shares.values())
        if abs(total - 1) > SHARE_TOLERANCE:
            raise te.TmSharesException(total)

    @property
    def N(self):
        return len(self.shares)

    def __len__(self):
        return len(self.shares)

    def __getitem__(self, entity_id):
        return self.shares[entity_id]

    def __repr__(self):
        return "MarketShares({}, {}, {}, N={})".format(self.market, self.weight, self.level, self.N)


class ConcentrationReport:

    def __init__(self, hhi, n, weight=None, level=None, market=None):
        self.hhi = hhi
        self.n = n
        self.weight = weight
        self.level = level
        self.market = market
        self.classification = classify(hhi)
        self.eu_flag = hhi > EU_THRESHOLD
        self.us_flag = hhi > US_THRESHOLD

    def __repr__(self):
        return "ConcentrationReport({}, {}, hhi={:.9g}, {})".format(
                self.market, self.weight, self.hhi, self.classification)


def hhi(shares):
    """
    Herfindahl-Hirschman index: the sum of squared market shares.
    """
    if not isinstance(shares, MarketShares):
        raise te.TmParameterException("shares", type(shares).__name__, "expected MarketShares")
    value = math.fsum(share * share for share in shares.shares.values())
    return ConcentrationReport(value, shares.N, shares.weight, shares.level, shares.market)


def market_shares(table, weight):
    """
    Project the ISH or PROWISH column of a metrics table.
    """
    weight = Weight(weight)
    if not len(table):
        raise te.TmEmptyMarketException("{} table at {} level has no entities".format(
                table.platform, table.level))
    shares = {row.entity_id: getattr(row, weight.value) for row in table}
    return MarketShares(weight, table.level, shares, market=str(table.platform))


def _normalized(values, weight, level, market):
    total = math.fsum(values.values())
    return MarketShares(weight, level, {e: v / total for e, v in values.items()}, market)


def combined_values(web, mobile):
    """
    Prevalence and prominence of each entity summed over both platforms.

    Returns:
        Ordered mapping entity id -> (prevalence, prominence).
    """
    if web.level != mobile.level:
        raise te.TmLevelMismatchException(web.level, mobile.level)
    values = collections.OrderedDict()
    for entity_id in sorted(set(web.entity_ids) | set(mobile.entity_ids)):
        rows = [t.row(entity_id) for t in (web, mobile) if entity_id in t]
        values[entity_id] = (sum(r.prevalence for r in rows),
                             math.fsum(r.prominence for r in rows))
    return values


def combine_markets(web, mobile):
    """
    Shares of the combined web and mobile market.

    Ranks stay platform-local inside prominence, the values of firms present
    on both platforms are summed and the shares renormalized over the union.

    Returns:
        Mapping `Weight` -> `MarketShares`.
    """
    values = combined_values(web, mobile)
    if not values:
        raise te.TmEmptyMarketException("combined market has no entities")
    return {
        Weight.ISH: _normalized({e: v[0] for e, v in values.items()}, Weight.ISH, web.level, "combined"),
        Weight.PROWISH: _normalized({e: v[1] for e, v in values.items()}, Weight.PROWISH, web.level, "combined"),
    }


def concentration_ratio(shares, k):
    """
    Combined share of the `k` largest firms.
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise te.TmParameterException("k", k, "must be a positive integer")
    largest = sorted(shares.shares.values(), reverse=True)[:k]
    return math.fsum(largest)


def group_share(shares, entity_ids):
    """
    Combined share of a named group of firms.
    """
    total = []
    for entity_id in sorted(set(entity_ids)):
        if entity_id not in shares.shares:
            LOGGER.warning("Group member '%s' is not part of the %s market", entity_id, shares.market)
            continue
        total.append(shares.shares[entity_id])
    return math.fsum(total)


def market_hhi(matrix, kb, weight, min_fraction=0.0, stage=ThresholdStage.ENTITY, exponent=1.0):
    """
    Parent-level HHI of a subsidiary-level matrix under the ownership of `kb`.
    """
    table = compute_metrics(market_matrix(matrix, kb, Level.PARENT, min_fraction, stage), kb, exponent)
    return hhi(market_shares(table, weight)).hhi


class MergerScenario:
    """
    Effect of an acquisition: the actual market against a market in which
    the subsidiaries were never owned by the parent.

    The optional label is a year, or a list with one year per subsidiary.
    """

    def __init__(self, parent_id, subsidiary_ids, hhi_actual, hhi_counterfactual,
                 weight, platform, label=None):
        self.parent_id = parent_id
        self.subsidiary_ids = list(subsidiary_ids)
        self.hhi_actual = hhi_actual
        self.hhi_counterfactual = hhi_counterfactual
        self.delta = hhi_actual - hhi_counterfactual
        self.eu_concern = self.delta > EU_DELTA and hhi_actual > EU_THRESHOLD
        self.weight = Weight(weight)
        self.platform = platform
        self.label = label

    def to_row(self):
        if isinstance(self.label, (list, tuple)):
            subsidiaries = ";".join("{} ({})".format(subsidiary_id, label)
                                    for subsidiary_id, label in zip(self.subsidiary_ids, self.label))
        else:
            subsidiaries = ";".join(self.subsidiary_ids)
            if self.label is not None:
                subsidiaries += " ({})".format(self.label)
        return collections.OrderedDict([
            ("parent", self.parent_id),
            ("subsidiaries", subsidiaries),
            ("platform", str(self.platform)),
            ("weight", self.weight.value),
            ("hhi_actual", self.hhi_actual),
            ("hhi_counterfactual", self.hhi_counterfactual),
            ("delta", self.delta),
            ("eu_concern", self.eu_concern),
        ])

    def __repr__(self):
        return "MergerScenario({} - {}: delta={:.9g})".format(
                self.parent_id, ",".join(self.subsidiary_ids), self.delta)


class MergerProposal:
    """
    Effect of a hypothetical acquisition between currently independent firms.
    """

    def __init__(self, acquirer_id, target_ids, hhi_before, hhi_after, weight, platform):
        self.acquirer_id = acquirer_id
        self.target_ids = list(target_ids)
        self.hhi_before = hhi_before
        self.hhi_after = hhi_after
        self.delta = hhi_after - hhi_before
        self.eu_concern = self.delta > EU_DELTA and hhi_after > EU_THRESHOLD
        self.weight = Weight(weight)
        self.platform = platform

    def to_row(self):
        return collections.OrderedDict([
            ("acquirer", self.acquirer_id),
            ("targets", ";".join(self.target_ids)),
            ("platform", str(self.platform)),
            ("weight", self.weight.value),
            ("hhi_before", self.hhi_before),
            ("hhi_after", self.hhi_after),
            ("delta", self.delta),
            ("eu_concern", self.eu_concern),
        ])


def _check_subsidiary_level(matrix):
    if matrix.level != Level.SUBSIDIARY:
        raise te.TmLevelMismatchException(matrix.level, Level.SUBSIDIARY)


def _warn_absent(matrix, owner_id, entity_ids):
    for entity_id in entity_ids:
        if entity_id not in matrix:
            LOGGER.warning("'%s' (with '%s') is not present in the %s market, it contributes nothing",
                           entity_id, owner_id, matrix.platform)


def simulate_demerger(matrix, kb, parent_id, subsidiary_ids, weight,
                      min_fraction=0.0, stage=ThresholdStage.ENTITY, exponent=1.0, label=None):
    """
    HHI change caused by a parent owning the given subsidiaries.

    The counterfactual severs the parent link of each subsidiary, so it
    becomes its own root with its own subtree, and re-runs consolidation,
    coverage threshold and share computation from the subsidiary-level
    matrix.

    Raises:
        TmScenarioException if a subsidiary is not owned by the parent.
    """
    _check_subsidiary_level(matrix)
    kb[parent_id]
    for subsidiary_id in subsidiary_ids:
        if subsidiary_id not in kb:
            raise te.TmScenarioException(parent_id, subsidiary_id, "unknown entity!")
        if not kb.is_owned_by(subsidiary_id, parent_id):
            raise te.TmScenarioException(parent_id, subsidiary_id, "not owned by the parent!")
    _warn_absent(matrix, parent_id, subsidiary_ids)

    actual = market_hhi(matrix, kb, weight, min_fraction, stage, exponent)
    if subsidiary_ids:
        counterfactual = market_hhi(matrix, kb.detached(subsidiary_ids), weight,
                                    min_fraction, stage, exponent)
    else:
        counterfactual = actual
    return MergerScenario(parent_id, subsidiary_ids, actual, counterfactual, weight,
                          matrix.platform, label)


def simulate_merger(matrix, kb, acquirer_id, target_ids, weight,
                    min_fraction=0.0, stage=ThresholdStage.ENTITY, exponent=1.0):
    """
    HHI change if the acquirer took over the given target firms.
    """
    _check_subsidiary_level(matrix)
    kb[acquirer_id]
    for target_id in target_ids:
        if target_id not in kb:
            raise te.TmScenarioException(acquirer_id, target_id, "unknown entity!")
        if target_id == acquirer_id or kb.is_owned_by(target_id, acquirer_id):
            raise te.TmScenarioException(acquirer_id, target_id, "already owned by the acquirer!")
        if kb.is_owned_by(acquirer_id, target_id):
            raise te.TmScenarioException(acquirer_id, target_id, "owns the acquirer!")
    _warn_absent(matrix, acquirer_id, target_ids)

    before = market_hhi(matrix, kb, weight, min_fraction, stage, exponent)
    after = market_hhi(matrix, kb.attached(acquirer_id, target_ids), weight,
                       min_fraction, stage, exponent) if target_ids else before
    return MergerProposal(acquirer_id, target_ids, before, after, weight, matrix.platform)


def grid_columns(top_k=None, group=None):
    columns = list(GRID_COLUMNS)
    if top_k is not None:
        columns += ["ish_cr", "prowish_cr"]
    if group:
        columns += ["ish_group", "prowish_group"]
    return tuple(columns)


def concentration_row(market, level, ish_shares, prowish_shares, top_k=None, group=None):
    ish_report, prowish_report = hhi(ish_shares), hhi(prowish_shares)
    row = collections.OrderedDict([
        ("market", market),
        ("level", str(level)),
        ("firms", ish_shares.N),
        ("ish_hhi", ish_report.hhi),
        ("ish_classification", str(ish_report.classification)),
        ("ish_eu_flag", ish_report.eu_flag),
        ("ish_us_flag", ish_report.us_flag),
        ("prowish_hhi", prowish_report.hhi),
        ("prowish_classification", str(prowish_report.classification)),
        ("prowish_eu_flag", prowish_report.eu_flag),
        ("prowish_us_flag", prowish_report.us_flag),
    ])
    if top_k is not None:
        row["ish_cr"] = concentration_ratio(ish_shares, top_k)
        row["prowish_cr"] = concentration_ratio(prowish_shares, top_k)
    if group:
        row["ish_group"] = group_share(ish_shares, group)
        row["prowish_group"] = group_share(prowish_shares, group)
    return row


def concentration_grid(web_tables=None, mobile_tables=None, combine=True, top_k=None, group=None):
    """
    HHI grid over markets and analysis levels.

    Args:
        web_tables, mobile_tables -- Mappings `Level` -> `MetricsTable`.
        combine -- Add combined-market rows when both platforms are given.
        top_k -- Add the concentration ratio of the `top_k` largest firms.
        group -- Add the combined share of these entity ids.

    Returns:
        List of rows with the columns `grid_columns(top_k, group)`.
    """
    rows = []
    for market, tables in (("web", web_tables), ("mobile", mobile_tables)):
        for level in [l for l in Level if l in (tables or {})]:
            table = tables[level]
            rows.append(concentration_row(market, level, market_shares(table, Weight.ISH),
                                          market_shares(table, Weight.PROWISH), top_k, group))
    if combine and web_tables and mobile_tables:
        for level in [l for l in Level if l in web_tables and l in mobile_tables]:
            shares = combine_markets(web_tables[level], mobile_tables[level])
            rows.append(concentration_row("combined", level, shares[Weight.ISH],
                                          shares[Weight.PROWISH], top_k, group))
    return rows


ScenarioSpec = collections.namedtuple("ScenarioSpec", ["parent_id", "subsidiary_ids", "platform"])


def load_scenarios(path):
    """
    Load de-merger scenarios, one JSON object per line with the keys
    `parent_id`, `subsidiary_ids` and `platform`.
    """
    scenarios = []
    try:
        with open(path, encoding="utf-8") as scenariofile:
            for lineno, line in enumerate(scenariofile, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                    subsidiaries = data["subsidiary_ids"]
                    if not isinstance(subsidiaries, list) or \
                            not all(isinstance(s, str) for s in subsidiaries):
                        raise ValueError("'subsidiary_ids' must be a list of strings")
                    scenarios.append(ScenarioSpec(str(data["parent_id"]), subsidiaries,
                                                  Platform(data["platform"])))
                except KeyError as error:
                    raise te.TmRecordException(path, lineno, "missing field {}".format(error))
                except (ValueError, TypeError) as error:
                    raise te.TmRecordException(path, lineno, str(error))
    except OSError as error:
        raise te.TmRecordException(path, 0, "cannot be read! {}".format(error.strerror))
    except UnicodeDecodeError as error:
        raise te.TmRecordException(path, 0, "not UTF-8! {}".format(error))
    return scenarios
