#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import sys
import contextlib
import concurrent.futures


def _listify(obj):
    if obj is None:
        return list()
    if isinstance(obj, (list, tuple, set, frozenset, range)):
        return list(obj)
    if hasattr(obj, "__iter__") and not hasattr(obj, "__getitem__"):
        return list(obj)
    return [obj, ]


def listify(*objs):
    """
    Convert arguments to list if they are not already a list.
    """
    return [l for o in objs for l in _listify(o)]


def ordered_map(function, items, jobs=1):
    """
    Apply a function to all items, optionally on a thread pool.

    The results are always returned in input order, independent of the
    number of jobs.
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [function(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(function, items))


@contextlib.contextmanager
def open_output(path=None):
    """
    Open the output path for writing, or use stdout if no path is given.
    """
    if path is None or path == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as stream:
        yield stream
