#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import logging.config
from collections import defaultdict

LEVELS = ["WARNING", "INFO", "DEBUG"]


class CallCounter(logging.Handler):
    """
    Counts the records of each level since the last `reset`.
    """
    levels = defaultdict(int)

    def emit(self, record):
        CallCounter.levels[record.levelname] += 1

    @classmethod
    def reset(cls):
        cls.levels.clear()

    @classmethod
    def warnings(cls):
        return cls.levels["WARNING"] + cls.levels["ERROR"]


def configure_logger(verbosity):
    """
    Route all records to stderr, so data written to stdout stays clean.

    Verbosity 0 shows warnings, 1 adds coverage and progress messages, 2
    and above add debug output.
    """
    level = LEVELS[min(verbosity, len(LEVELS) - 1)]
    # Replaces the root handlers, also the counter of a previous run
    logging.config.dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'full': {
                'format': '[%(levelname)s] %(name)s: %(message)s'
            },
        },
        'handlers': {
            'stderr': {
                'class': 'logging.StreamHandler',
                'formatter': 'full',
                'stream': 'ext://sys.stderr',
            },
            'counter': {
                '()': CallCounter,
            },
        },
        'root': {
            'handlers': ['stderr', 'counter'],
            'level': level,
        },
    })
