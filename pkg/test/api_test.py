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
import testfixtures

# Hack to support the usage of `coverage`
sys.path.append(os.path.abspath("."))
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import oracle
import trackmarket
import trackmarket.exception as te
from trackmarket.kb import Level
from trackmarket.ingest import Platform, write_observations
from trackmarket.market import Weight

TOLERANCE = 1e-12


def subsidiary_hhi(corpus, parents):
    table = oracle.metrics(corpus, oracle.market(corpus, parents, False))
    return oracle.hhi(v[2] for v in table.values()), oracle.hhi(v[3] for v in table.values())


class ApiTest(unittest.TestCase):

    def _get_path(self, path):
        return os.path.join(os.path.dirname(os.path.realpath(__file__)), "resources", path)

    def setUp(self):
        self.tempdir = testfixtures.TempDirectory()
        self.analysis = trackmarket.api.Analysis(cwd=self._get_path("demo"))
        self.warnings = {}
        self.paths = {}
        for platform in Platform:
            warnings = []
            records = self.analysis.ingest(self._get_path(os.path.join("demo", "{}_raw.jsonl".format(platform))),
                                           platform, warnings)
            path = os.path.join(self.tempdir.path, "{}.jsonl".format(platform))
            with open(path, "w", encoding="utf-8") as observationfile:
                write_observations(records, observationfile)
            self.assertEqual(platform, self.analysis.add_observations(path))
            self.warnings[platform] = warnings
            self.paths[platform] = path
        self.web, self.mobile = oracle.demo_web(), oracle.demo_mobile()

    def tearDown(self):
        self.tempdir.cleanup()

    def test_should_load_configuration(self):
        self.assertEqual(self._get_path("demo"), self.analysis.cwd)
        self.assertEqual(self._get_path(os.path.join("demo", "kb.json")), self.analysis.config.kb)
        self.assertEqual(0.0, self.analysis.config.min_coverage)
        self.assertIsNone(self.analysis.level)
        self.assertEqual(Weight.PROWISH, self.analysis.weight)

        analysis = trackmarket.api.Analysis(cwd=self._get_path("demo"), weight="ish", level="parent")
        self.assertEqual(Weight.ISH, analysis.weight)
        self.assertEqual(Level.PARENT, analysis.level)

        analysis = trackmarket.api.Analysis(config=self._get_path(os.path.join("demo", "trackmarket.xml")))
        self.assertEqual(self._get_path("demo"), analysis.cwd)

        with self.assertRaises(te.TmConfigNotFoundException):
            trackmarket.api.Analysis(config=self._get_path("nowhere.xml"))

    def test_should_fall_back_without_configuration(self):
        analysis = trackmarket.api.Analysis(cwd=self.tempdir.path)
        self.assertIsNone(analysis.file_config)
        self.assertEqual([], analysis.platforms)
        self.assertIn("google", analysis.kb)
        with self.assertRaises(te.TmConfigPathException):
            analysis.rules
        with self.assertRaises(te.TmConfigPathException):
            analysis.concentration()

    def test_should_ingest_demo_exports(self):
        self.assertEqual(1, len(self.warnings[Platform.WEB]))
        self.assertIn("bad..host", self.warnings[Platform.WEB][0])
        self.assertNotIn("\033", self.warnings[Platform.WEB][0])
        self.assertEqual(1, len(self.warnings[Platform.MOBILE]))
        self.assertEqual(24, len(self.analysis.observations("web")))
        self.assertEqual(16, len(self.analysis.observations("mobile")))
        self.assertEqual([Platform.WEB, Platform.MOBILE], self.analysis.platforms)

        record = self.analysis.observations("web")[0]
        self.assertEqual("www.site01.com", record.first_party_id)
        self.assertNotIn("site01.com", record.third_party_hosts)

    def test_should_compute_metrics(self):
        table = self.analysis.metrics("web", Level.SUBSIDIARY)
        self.assertEqual(16, table.row("google").prevalence)
        self.assertEqual(8, table.row("doubleclick").prevalence)
        self.assertNotIn("cloudflare", table.entity_ids)

        for platform, corpus in ((Platform.WEB, self.web), (Platform.MOBILE, self.mobile)):
            for level in Level:
                table = self.analysis.metrics(platform, level)
                expected = oracle.metrics(corpus, oracle.market(corpus, oracle.DEMO_PARENTS,
                                                                level == Level.PARENT))
                self.assertEqual(sorted(expected), table.entity_ids)
                for entity_id, (prevalence, prominence, ish, prowish) in expected.items():
                    row = table.row(entity_id)
                    self.assertEqual(prevalence, row.prevalence)
                    self.assertAlmostEqual(float(prominence), row.prominence, delta=TOLERANCE)
                    self.assertAlmostEqual(float(prowish), row.prowish, delta=TOLERANCE)

    def test_should_report_unattributed_evidence(self):
        presence = self.analysis.presence("web")
        self.assertEqual(Level.SUBSIDIARY, presence.level)
        self.assertEqual(Level.PARENT, self.analysis.presence("web", Level.PARENT).level)
        self.assertNotIn("unknowntracker.io", presence.entity_ids)

    def test_should_compute_concentration_grid(self):
        rows = self.analysis.concentration()
        self.assertEqual([("web", "subsidiary"), ("web", "parent"), ("mobile", "subsidiary"),
                          ("mobile", "parent"), ("combined", "subsidiary"), ("combined", "parent")],
                         [(r["market"], r["level"]) for r in rows])

        expected = [subsidiary_hhi(self.web, oracle.DEMO_PARENTS),
                    oracle.market_hhi(self.web, oracle.DEMO_PARENTS),
                    subsidiary_hhi(self.mobile, oracle.DEMO_PARENTS),
                    oracle.market_hhi(self.mobile, oracle.DEMO_PARENTS),
                    oracle.combined(self.web, self.mobile, oracle.DEMO_PARENTS, False),
                    oracle.combined(self.web, self.mobile, oracle.DEMO_PARENTS, True)]
        for row, (ish, prowish) in zip(rows, expected):
            self.assertAlmostEqual(float(ish), row["ish_hhi"], delta=TOLERANCE)
            self.assertAlmostEqual(float(prowish), row["prowish_hhi"], delta=TOLERANCE)

        rows = self.analysis.concentration(["web"], top_k=2, group=["google", "facebook"])
        self.assertEqual(2, len(rows))
        self.assertIn("ish_cr", rows[0])
        self.assertIn("prowish_group", rows[0])

        analysis = trackmarket.api.Analysis(cwd=self._get_path("demo"), level="parent")
        analysis.add_observations(self.paths[Platform.WEB])
        analysis.add_observations(self.paths[Platform.MOBILE])
        self.assertEqual(3, len(analysis.concentration()))
        self.assertEqual(2, len(analysis.concentration(combine=False)))

    def test_should_simulate_demergers(self):
        scenario = self.analysis.demerger("google", ["doubleclick"], "web")
        expected = oracle.demerger(self.web, oracle.DEMO_PARENTS, "google", ["doubleclick"])
        self.assertAlmostEqual(float(expected[1]), scenario.delta, delta=TOLERANCE)
        self.assertEqual(Platform.WEB, scenario.platform)

        scenarios = self.analysis.demergers([("twitter", ["mopub"], "mobile")], Weight.ISH)
        expected = oracle.demerger(self.mobile, oracle.DEMO_PARENTS, "twitter", ["mopub"])
        self.assertAlmostEqual(float(expected[0]), scenarios[0].delta, delta=TOLERANCE)

        with self.assertRaises(te.TmScenarioException):
            self.analysis.demerger("google", ["mopub"], "web")

    def test_should_simulate_recorded_acquisitions(self):
        with testfixtures.LogCapture():
            scenarios = self.analysis.acquisition_demergers()
        self.assertEqual(10, len(scenarios))
        # Sorted by parent, then year
        self.assertEqual([("adobe", ["demdex"], 2011), ("facebook", ["liverail"], 2014),
                          ("google", ["doubleclick"], 2007), ("google", ["admob"], 2009),
                          ("twitter", ["mopub"], 2013)],
                         [(s.parent_id, s.subsidiary_ids, s.label) for s in scenarios[:5]])
        self.assertTrue(all(s.platform == Platform.WEB for s in scenarios[:5]))
        self.assertEqual(5, len(self.analysis.acquisition_demergers(["mobile"])))

        with testfixtures.LogCapture():
            grouped = self.analysis.acquisition_demergers(["web"], grouped=True)
        self.assertEqual(["adobe", "facebook", "google", "twitter"], [s.parent_id for s in grouped])
        google = grouped[2]
        self.assertEqual(["doubleclick", "admob"], google.subsidiary_ids)
        self.assertEqual("doubleclick (2007);admob (2009)", google.to_row()["subsidiaries"])
        expected = oracle.demerger(self.web, oracle.DEMO_PARENTS, "google", ["doubleclick", "admob"])
        self.assertAlmostEqual(float(expected[1]), google.delta, delta=TOLERANCE)

        # admob never appears on the web
        admob = [s for s in scenarios if s.subsidiary_ids == ["admob"] and s.platform == Platform.WEB]
        self.assertAlmostEqual(0.0, admob[0].delta, delta=TOLERANCE)

    def test_should_simulate_mergers(self):
        proposal = self.analysis.merger("facebook", ["twitter"], "mobile", Weight.ISH)
        merged = dict(oracle.DEMO_PARENTS, twitter="facebook")
        before = oracle.market_hhi(self.mobile, oracle.DEMO_PARENTS)[0]
        after = oracle.market_hhi(self.mobile, merged)[0]
        self.assertAlmostEqual(float(before), proposal.hhi_before, delta=TOLERANCE)
        self.assertAlmostEqual(float(after), proposal.hhi_after, delta=TOLERANCE)
        self.assertGreater(proposal.delta, 0)

        with self.assertRaises(te.TmScenarioException):
            self.analysis.merger("google", ["doubleclick"], "web")

    def test_should_report_overlap(self):
        with testfixtures.LogCapture() as log:
            pairs = self.analysis.pairs()
        self.assertIn("heuristic pairs", str(log))
        self.assertEqual(12, len(pairs))
        self.assertEqual(pairs, self.analysis.propose_pairs())

        report = self.analysis.overlap()
        rates = []
        for j in range(1, 13):
            web = {oracle.root(e, oracle.DEMO_PARENTS) for e in self.web["www.site{:02d}.com".format(j)][1]}
            mobile = {oracle.root(e, oracle.DEMO_PARENTS)
                      for e in self.mobile["com.site{:02d}.android".format(j)][1]}
            rates.append(len(web & mobile) / len(web | mobile))
        self.assertEqual(0, report.excluded)
        self.assertAlmostEqual(sum(rates) / len(rates), report.mean_rate, delta=TOLERANCE)

        curated = trackmarket.api.Analysis(cwd=self._get_path("demo"),
                                           pairs=self._get_path(os.path.join("demo", "pairs.csv")))
        curated.add_observations(self.paths[Platform.WEB])
        curated.add_observations(self.paths[Platform.MOBILE])
        self.assertAlmostEqual(report.mean_rate, curated.overlap().mean_rate, delta=TOLERANCE)

    def test_should_compare_and_share(self):
        comparison = self.analysis.compare(self.paths[Platform.MOBILE], self.paths[Platform.MOBILE])
        self.assertEqual(0, comparison.mean_a_minus_b)
        self.assertEqual(0, comparison.mean_b_minus_a)
        self.assertEqual(16, len(comparison.rows))

        rows = self.analysis.shared()
        self.assertEqual({"google", "facebook", "twitter"}, {r["entity_id"] for r in rows})
        self.assertEqual("google", rows[0]["entity_id"])


if __name__ == '__main__':
    unittest.main()
