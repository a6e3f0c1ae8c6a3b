#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import os
import sys
import unittest

# Hack to support the usage of `coverage`
sys.path.append(os.path.abspath("."))
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import oracle
import trackmarket.exception as te
from trackmarket.kb import Level
from trackmarket.attribution import market_matrix, consolidate, ThresholdStage
from trackmarket.metrics import compute_metrics
from trackmarket.market import Weight, hhi, market_shares, market_hhi, combine_markets, \
        simulate_demerger

SEEDS = range(200)
TOLERANCE = 1e-12


class OracleTest(unittest.TestCase):
    """
    Random small markets recomputed by exhaustive summation with fractions.
    """

    def _cases(self):
        for seed in SEEDS:
            corpus, parents = oracle.random_case(seed)
            yield seed, corpus, parents, oracle.to_matrix(corpus), oracle.to_kb(parents)

    def test_should_match_metrics(self):
        for seed, corpus, parents, matrix, kb in self._cases():
            for level in Level:
                present = oracle.market(corpus, parents, level == Level.PARENT)
                if not present:
                    continue
                expected = oracle.metrics(corpus, present)
                table = compute_metrics(market_matrix(matrix, kb, level, 0.0))
                self.assertEqual(sorted(expected), table.entity_ids, seed)
                for entity_id, (prevalence, prominence, ish, prowish) in expected.items():
                    row = table.row(entity_id)
                    self.assertEqual(prevalence, row.prevalence, seed)
                    self.assertAlmostEqual(float(prominence), row.prominence, delta=TOLERANCE)
                    self.assertAlmostEqual(float(ish), row.ish, delta=TOLERANCE)
                    self.assertAlmostEqual(float(prowish), row.prowish, delta=TOLERANCE)

    def test_should_match_presence(self):
        for seed, corpus, parents, matrix, kb in self._cases():
            present = oracle.presence(corpus, parents, True)
            consolidated = consolidate(matrix, kb)
            self.assertEqual(sorted(present), consolidated.entity_ids, seed)
            for entity_id, first_parties in present.items():
                self.assertEqual(first_parties, {e.first_party_id for e in consolidated.edges(entity_id)})

    def test_should_match_thresholds(self):
        for seed, corpus, parents, matrix, kb in self._cases():
            for fraction in (0.25, 0.5):
                for stage in ThresholdStage:
                    expected = oracle.market(corpus, parents, True, fraction,
                                             stage == ThresholdStage.PRE_CONSOLIDATION)
                    actual = market_matrix(matrix, kb, Level.PARENT, fraction, stage)
                    self.assertEqual(sorted(expected), actual.entity_ids, seed)

    def test_should_match_hhi(self):
        for seed, corpus, parents, matrix, kb in self._cases():
            if not oracle.market(corpus, parents, True):
                with self.assertRaises(te.TmEmptyMarketException):
                    market_hhi(matrix, kb, Weight.ISH)
                continue
            ish, prowish = oracle.market_hhi(corpus, parents)
            self.assertAlmostEqual(float(ish), market_hhi(matrix, kb, Weight.ISH), delta=TOLERANCE)
            self.assertAlmostEqual(float(prowish), market_hhi(matrix, kb, Weight.PROWISH), delta=TOLERANCE)

    def test_should_match_combined_markets(self):
        for seed in SEEDS:
            web_corpus, parents = oracle.random_case(seed)
            mobile_corpus, _ = oracle.random_case(seed + 1000)
            # The mobile corpus is drawn over the same entity ids where possible
            mobile_corpus = {"com.app{}".format(i): (rank, {e for e in entities if e in parents})
                             for i, (rank, entities) in enumerate(mobile_corpus.values())}
            kb = oracle.to_kb(parents)
            web = consolidate(oracle.to_matrix(web_corpus, "web"), kb)
            mobile = consolidate(oracle.to_matrix(mobile_corpus, "mobile"), kb)
            if not len(web) or not len(mobile):
                continue
            combined = combine_markets(compute_metrics(web), compute_metrics(mobile))
            ish, prowish = oracle.combined(web_corpus, mobile_corpus, parents, True)
            self.assertAlmostEqual(float(ish), hhi(combined[Weight.ISH]).hhi, delta=TOLERANCE)
            self.assertAlmostEqual(float(prowish), hhi(combined[Weight.PROWISH]).hhi, delta=TOLERANCE)

    def test_should_match_demergers(self):
        checked = 0
        for seed, corpus, parents, matrix, kb in self._cases():
            if not oracle.market(corpus, parents, True):
                continue
            for parent_id in sorted(set(parents.values()) - {None}):
                subsidiaries = sorted(e for e, p in parents.items() if p == parent_id)
                expected = oracle.demerger(corpus, parents, parent_id, subsidiaries)
                for weight, value in zip(Weight, expected):
                    scenario = simulate_demerger(matrix, kb, parent_id, subsidiaries, weight)
                    self.assertAlmostEqual(float(value), scenario.delta, delta=TOLERANCE)
                    checked += 1
        self.assertGreater(checked, 0)

    def test_should_reproduce_shares_of_tables(self):
        for seed, corpus, parents, matrix, kb in self._cases():
            if not len(matrix):
                continue
            table = compute_metrics(matrix)
            for weight in Weight:
                shares = market_shares(table, weight)
                self.assertAlmostEqual(1.0, sum(shares.shares.values()), delta=1e-9)


if __name__ == '__main__':
    unittest.main()
