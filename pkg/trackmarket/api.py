#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
API for scripts running trackmarket analyses directly.
"""

import os
import logging

import trackmarket.exception as te
from trackmarket.config import ConfigNode, RunConfig, DEFAULT_CONFIG_NAME
from trackmarket.ingest import Platform, load_corpus, load_observations, load_suffix_rules
from trackmarket.kb import Level, load_kb, load_starter_kb
from trackmarket.attribution import build_presence, consolidate, market_matrix, ThresholdStage
from trackmarket.metrics import compute_metrics
from trackmarket.market import Weight, concentration_grid, simulate_demerger, simulate_merger
from trackmarket.overlap import load_pairs, propose_pairs, overlap_report, compare_methods, \
                                shared_entities

LOGGER = logging.getLogger('trackmarket.api')


class Analysis:

    def __init__(self, cwd=None, config=None, **flags):
        """
        Analysis instance to invoke trackmarket operations.

        Args:
            cwd -- Current working directly. If specified trackmarket will
                search for a configuration file in this folder.
            config -- Path to a configuration file.
            flags -- Settings overriding the configuration file, see
                `RunConfig.DEFAULTS`. `corpora` maps platforms to
                observation files.
        """
        if cwd is None:
            cwd = os.getcwd() if config is None else os.path.dirname(os.path.abspath(config))
        self.cwd = os.path.abspath(cwd)

        # The default file name is optional, any other one is not
        if config == DEFAULT_CONFIG_NAME:
            config = os.path.join(self.cwd, config)
            if not os.path.exists(config):
                config = None
        if config is None:
            file_config = ConfigNode.from_path(self.cwd)
        else:
            file_config = ConfigNode.from_file(config)

        self.file_config = file_config
        self.config = RunConfig.build(None if file_config is None else file_config.flatten(), **flags)
        LOGGER.debug("%s", self.config)

        self._kb = None
        self._rules = None
        self._corpora = {}
        self._presence = {}

    @property
    def kb(self):
        if self._kb is None:
            if self.config.kb is None:
                LOGGER.info("No knowledge base given, using the starter knowledge base")
                self._kb = load_starter_kb()
            else:
                self._kb = load_kb(self.config.kb)
        return self._kb

    @property
    def rules(self):
        if self._rules is None:
            self._rules = load_suffix_rules(self.config.require("suffix_rules"))
        return self._rules

    @property
    def level(self):
        return None if self.config.level is None else Level(self.config.level)

    @property
    def weight(self):
        return Weight(self.config.weight)

    @property
    def stage(self):
        return ThresholdStage(self.config.threshold_stage)

    def ingest(self, path, platform, warnings=None):
        """
        Normalize a raw detection export.

        Returns:
            List of `ObservationRecord`.
        """
        return load_corpus(path, platform, self.rules, warnings, self.config.jobs)

    def add_observations(self, path, platform=None):
        """
        Load an observation file and use it as the corpus of its platform.

        Returns:
            The `Platform` of the file.
        """
        records = load_observations(path, platform, self.config.jobs)
        if not records:
            raise te.TmEmptyCorpusException("unknown" if platform is None else platform)
        platform = records[0].platform
        self._corpora[platform] = records
        self._presence.pop(platform, None)
        return platform

    @property
    def platforms(self):
        """
        All platforms with a loaded or configured corpus.
        """
        return [p for p in Platform if p in self._corpora or p in self.config.corpora]

    def observations(self, platform):
        platform = Platform(platform)
        if platform not in self._corpora:
            path = self.config.corpus(platform)
            records = load_observations(path, platform, self.config.jobs)
            if not records:
                raise te.TmEmptyCorpusException(platform)
            self._corpora[platform] = records
        return self._corpora[platform]

    def presence(self, platform, level=Level.SUBSIDIARY):
        """
        Presence matrix of a corpus without coverage threshold.
        """
        platform = Platform(platform)
        if platform not in self._presence:
            self._presence[platform] = build_presence(self.observations(platform), self.kb,
                                                      Level.SUBSIDIARY, self.config.jobs)
        matrix = self._presence[platform]
        return consolidate(matrix, self.kb) if Level(level) == Level.PARENT else matrix

    def market(self, platform, level):
        return market_matrix(self.presence(platform), self.kb, level,
                             self.config.min_coverage, self.stage)

    def metrics(self, platform, level):
        return compute_metrics(self.market(platform, level), self.kb, self.config.exponent)

    def concentration(self, platforms=None, combine=True, top_k=None, group=None):
        """
        HHI grid of the given platforms at both analysis levels, or only at
        the configured level.
        """
        platforms = self.platforms if platforms is None else [Platform(p) for p in platforms]
        if not platforms:
            raise te.TmConfigPathException("corpus", None)
        levels = list(Level) if self.level is None else [self.level]
        tables = {p: {level: self.metrics(p, level) for level in levels} for p in platforms}
        return concentration_grid(tables.get(Platform.WEB), tables.get(Platform.MOBILE), combine,
                                  top_k, group)

    def _simulation_args(self):
        return dict(min_fraction=self.config.min_coverage, stage=self.stage,
                    exponent=self.config.exponent)

    def demerger(self, parent_id, subsidiary_ids, platform, weight=None, label=None):
        return simulate_demerger(self.presence(platform), self.kb, parent_id, subsidiary_ids,
                                 self.weight if weight is None else weight, label=label,
                                 **self._simulation_args())

    def demergers(self, scenarios, weight=None):
        """
        Run a batch of `(parent_id, subsidiary_ids, platform)` scenarios.
        """
        return [self.demerger(parent_id, subsidiary_ids, platform, weight)
                for parent_id, subsidiary_ids, platform in scenarios]

    def acquisition_demergers(self, platforms=None, weight=None, grouped=False):
        """
        One de-merger scenario per acquisition recorded in the knowledge base,
        or per acquiring parent if `grouped`.
        """
        platforms = self.platforms if platforms is None else [Platform(p) for p in platforms]
        return [self.demerger(parent_id, targets, platform, weight, label=years)
                for platform in platforms
                for parent_id, targets, years in self.kb.acquisition_scenarios(grouped)]

    def merger(self, acquirer_id, target_ids, platform, weight=None):
        return simulate_merger(self.presence(platform), self.kb, acquirer_id, target_ids,
                               self.weight if weight is None else weight,
                               **self._simulation_args())

    def pairs(self):
        """
        Curated pairs if a pairs file is configured, heuristic pairs otherwise.
        """
        if self.config.pairs is not None:
            return load_pairs(self.config.pairs)
        LOGGER.info("No curated pairs given, using heuristic pairs")
        return self.propose_pairs()

    def propose_pairs(self):
        rules = self.rules if self.config.suffix_rules is not None else None
        return propose_pairs(self.observations(Platform.WEB), self.observations(Platform.MOBILE), rules)

    def overlap(self, level=None):
        level = Level(level or self.level or Level.PARENT)
        return overlap_report(self.pairs(), self.market(Platform.WEB, level),
                              self.market(Platform.MOBILE, level), level, self.config.jobs)

    def compare(self, path_a, path_b, level=None):
        corpus_a = load_observations(path_a, jobs=self.config.jobs)
        corpus_b = load_observations(path_b, jobs=self.config.jobs)
        return compare_methods(corpus_a, corpus_b, self.kb, Level(level or self.level or Level.PARENT))

    def shared(self, level=None):
        level = Level(level or self.level or Level.PARENT)
        return shared_entities(self.metrics(Platform.WEB, level), self.metrics(Platform.MOBILE, level))
