#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import io
import os
import sys
import json
import unittest
import testfixtures

# Hack to support the usage of `coverage`
sys.path.append(os.path.abspath("."))

import trackmarket.exception as te
from trackmarket.ingest import Platform, SuffixRuleSet, RawWebRecord, RawAppRecord, \
        ObservationRecord, normalize_host, registrable_domain, filter_first_party, \
        normalize_app, load_suffix_rules, load_corpus, load_observations, write_observations


class IngestTest(unittest.TestCase):

    def _get_path(self, filename):
        return os.path.join(os.path.dirname(os.path.realpath(__file__)), "resources", filename)

    def setUp(self):
        self.rules = load_suffix_rules(self._get_path("public_suffix_list.dat"))

    def _write(self, path, lines):
        with open(path, "w", encoding="utf-8") as corpus:
            for line in lines:
                corpus.write(line if isinstance(line, str) else json.dumps(line))
                corpus.write("\n")
        return path

    def test_should_normalize_hosts(self):
        self.assertEqual("www.example.com", normalize_host("WWW.Example.COM."))
        with self.assertRaises(te.TmHostnameException):
            normalize_host("bad..host")
        with self.assertRaises(te.TmHostnameException):
            normalize_host("spaces are.com")
        with self.assertRaises(te.TmHostnameException):
            normalize_host("")

    def test_should_compute_registrable_domains(self):
        self.assertEqual("example.com", registrable_domain("a.b.example.com", self.rules))
        self.assertEqual("bbc.co.uk", registrable_domain("news.bbc.co.uk", self.rules))
        self.assertEqual("project.github.io", registrable_domain("www.project.github.io", self.rules))
        # Wildcard and exception rules
        self.assertEqual("shop.example.ck", registrable_domain("www.shop.example.ck", self.rules))
        self.assertEqual("www.ck", registrable_domain("www.ck", self.rules))
        # A public suffix itself stays unchanged
        self.assertEqual("co.uk", registrable_domain("co.uk", self.rules))

    def test_should_load_suffix_rules(self):
        self.assertIn("co.uk", self.rules.rules)
        self.assertIn("!www.ck", self.rules.rules)
        self.assertNotIn("// ===BEGIN ICANN DOMAINS===", self.rules.rules)

        with self.assertRaises(te.TmSuffixRulesException) as cm:
            load_suffix_rules(self._get_path("missing.dat"))
        self.assertIn("missing.dat", str(cm.exception))

        with self.assertRaises(te.TmSuffixRulesException):
            SuffixRuleSet.from_lines(["// nothing but comments"])
        with self.assertRaises(te.TmSuffixRulesException):
            SuffixRuleSet.from_lines(["com", "bad..rule"])

    def test_should_load_unicode_suffix_rules(self):
        rules = SuffixRuleSet.from_lines(["// excerpt", "com", "co.uk", "cn", "公司.cn", "网络.cn",
                                          "no", "andøy.no", "*.kawasaki.jp", "!city.kawasaki.jp"])
        self.assertIn("公司.cn", rules.rules)
        suffix = "公司.cn".encode("idna").decode("ascii")
        self.assertEqual("shop." + suffix, registrable_domain("www.shop." + suffix, rules))
        suffix = "andøy.no".encode("idna").decode("ascii")
        self.assertEqual("kommune." + suffix, registrable_domain("www.kommune." + suffix, rules))
        self.assertEqual("example.cn", registrable_domain("a.example.cn", rules))

        with self.assertRaises(te.TmSuffixRulesException):
            SuffixRuleSet.from_lines(["com", "公司..cn"])

    def test_should_be_idempotent(self):
        for host in ("a.b.example.com", "news.bbc.co.uk", "www.shop.example.ck", "co.uk"):
            domain = registrable_domain(host, self.rules)
            self.assertEqual(domain, registrable_domain(domain, self.rules))

        record = RawWebRecord("www.example.com", 5, ["cdn.example.com", "a.tracker.net",
                                                     "b.tracker.net", "ads.other.co.uk"])
        for collapse in (False, True):
            once = filter_first_party(record, self.rules, collapse=collapse)
            self.assertEqual(once, filter_first_party(once, self.rules, collapse=collapse))

    def test_should_filter_first_party_hosts(self):
        record = RawWebRecord("example.com", 1, ["example.com", "cdn.example.com",
                                                 "ads.example.com", "tracker.net"])
        observation = filter_first_party(record, self.rules)
        self.assertEqual({"tracker.net"}, observation.third_party_hosts)
        self.assertEqual(Platform.WEB, observation.platform)

        record = RawWebRecord("news.example.co.uk", 1, ["static.example.co.uk", "ads.tracker.co.uk"])
        observation = filter_first_party(record, self.rules)
        self.assertEqual({"ads.tracker.co.uk"}, observation.third_party_hosts)

        record = RawWebRecord("site.com", 2, ["site.com"])
        self.assertEqual(frozenset(), filter_first_party(record, self.rules).third_party_hosts)

    def test_should_collapse_and_skip_hosts(self):
        warnings = []
        record = RawWebRecord("www.site.com", 3, ["a.tracker.net", "b.tracker.net", "bad..host"])
        observation = filter_first_party(record, self.rules, warnings, collapse=True)
        self.assertEqual({"tracker.net"}, observation.third_party_hosts)
        self.assertEqual("www.site.com", observation.first_party_id)
        self.assertEqual(1, len(warnings))
        self.assertIn("bad..host", warnings[0])

    def test_should_normalize_apps(self):
        warnings = []
        record = RawAppRecord("com.example.app", 4,
                              ["com.facebook.ads", "com.facebook.ads", "com.flurry.sdk"],
                              ["https://api.example.com/v1", "http://x.tracker.net/p", "no url"])
        observation = normalize_app(record, self.rules, warnings)
        self.assertEqual(Platform.MOBILE, observation.platform)
        self.assertEqual("com.example.app", observation.first_party_id)
        self.assertEqual({"com.facebook.ads", "com.flurry.sdk"}, observation.third_party_libraries)
        self.assertEqual({"tracker.net"}, observation.third_party_hosts)
        self.assertEqual(1, len(warnings))

        with self.assertRaises(ValueError):
            RawAppRecord("single", 1)

    def test_should_reject_bad_ranks(self):
        for rank in (0, -1, 1.5, True, "1"):
            with self.assertRaises(ValueError):
                ObservationRecord("a.com", "web", rank)

    @testfixtures.tempdir()
    def test_should_load_web_corpus(self, tempdir):
        path = self._write(os.path.join(tempdir.path, "web.jsonl"), [
            {"site_identifier": "a.com", "rank": 1, "request_hosts": ["x.tracker.net", "cdn.a.com"]},
            {"site_identifier": "b.com", "rank": 2, "request_hosts": []},
            {"site_identifier": "c.com", "rank": 3, "request_hosts": ["ads.other.org"]},
        ])
        for jobs in (1, 4):
            records = load_corpus(path, "web", self.rules, jobs=jobs)
            self.assertEqual(["a.com", "b.com", "c.com"], [r.first_party_id for r in records])
            self.assertEqual({"tracker.net"}, records[0].third_party_hosts)
            self.assertEqual({"other.org"}, records[2].third_party_hosts)

    @testfixtures.tempdir()
    def test_should_load_identical_bytes_identically(self, tempdir):
        lines = [{"site_identifier": "www.s{}.com".format(rank), "rank": rank,
                  "request_hosts": ["x{}.tracker.net".format(rank % 3), "cdn.s{}.com".format(rank),
                                    "ads.other.org"]} for rank in range(1, 40)]
        first = self._write(os.path.join(tempdir.path, "first.jsonl"), lines)
        second = self._write(os.path.join(tempdir.path, "second.jsonl"), lines)

        outputs = []
        for path, jobs in ((first, 1), (second, 4), (first, 3)):
            stream = io.StringIO()
            write_observations(load_corpus(path, "web", self.rules, jobs=jobs), stream)
            outputs.append(stream.getvalue())
        self.assertEqual(1, len(set(outputs)))

    @testfixtures.tempdir()
    def test_should_report_duplicates(self, tempdir):
        path = self._write(os.path.join(tempdir.path, "web.jsonl"), [
            {"site_identifier": "a.com", "rank": 1},
            {"site_identifier": "b.com", "rank": 1},
        ])
        with self.assertRaises(te.TmCorpusDuplicateException) as cm:
            load_corpus(path, "web", self.rules)
        self.assertIn("a.com", str(cm.exception))
        self.assertIn("b.com", str(cm.exception))

        path = self._write(os.path.join(tempdir.path, "both.jsonl"), [
            {"site_identifier": "a.com", "rank": 1},
            {"site_identifier": "a.com", "rank": 1},
        ])
        with self.assertRaises(te.TmAggregateException):
            load_corpus(path, "web", self.rules)

    @testfixtures.tempdir()
    def test_should_report_malformed_lines(self, tempdir):
        path = self._write(os.path.join(tempdir.path, "web.jsonl"), [
            {"site_identifier": "a.com", "rank": 1},
            "{not json",
        ])
        with self.assertRaises(te.TmRecordException) as cm:
            load_corpus(path, "web", self.rules)
        self.assertEqual(2, cm.exception.lineno)

        path = self._write(os.path.join(tempdir.path, "norank.jsonl"), [{"site_identifier": "a.com"}])
        with self.assertRaises(te.TmRecordException) as cm:
            load_corpus(path, "web", self.rules)
        self.assertIn("rank", str(cm.exception))

        path = self._write(os.path.join(tempdir.path, "badsite.jsonl"), [{"site_identifier": "a..com", "rank": 1}])
        with self.assertRaises(te.TmRecordException):
            load_corpus(path, "web", self.rules)

    @testfixtures.tempdir()
    def test_should_write_and_load_observations(self, tempdir):
        records = [ObservationRecord("a.com", "web", 2, ["z.net", "b.net"]),
                   ObservationRecord("b.com", "web", 1)]
        stream = io.StringIO()
        write_observations(records, stream)
        first = json.loads(stream.getvalue().splitlines()[0])
        self.assertEqual(["first_party_id", "platform", "rank", "third_party_hosts",
                          "third_party_libraries"], list(first))
        self.assertEqual(["b.net", "z.net"], first["third_party_hosts"])

        path = os.path.join(tempdir.path, "obs.jsonl")
        with open(path, "w", encoding="utf-8") as obs:
            obs.write(stream.getvalue())
        self.assertEqual(records, load_observations(path))

        with self.assertRaises(te.TmRecordException):
            load_observations(path, "mobile")

    @testfixtures.tempdir()
    def test_should_reject_mixed_platforms(self, tempdir):
        path = self._write(os.path.join(tempdir.path, "mixed.jsonl"), [
            {"first_party_id": "a.com", "platform": "web", "rank": 1},
            {"first_party_id": "com.a.app", "platform": "mobile", "rank": 2},
        ])
        with self.assertRaises(te.TmRecordException) as cm:
            load_observations(path)
        self.assertEqual(2, cm.exception.lineno)


if __name__ == '__main__':
    unittest.main()
