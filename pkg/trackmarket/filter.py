#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import numbers

import trackmarket.format


def pad(text, min_width):
    """
    Fill the text with spaces at the end until the minimal width is reached.
    """
    text = str(text)
    return text + " " * max(0, min_width - len(text))


def rpad(text, min_width):
    text = str(text)
    return " " * max(0, min_width - len(text)) + text


def width(rows, key, minimum=0):
    """
    Widest rendering of a column, used to align text tables.
    """
    return max([minimum] + [len(trackmarket.format.sig9(row[key])) for row in rows])


def _is_number(value):
    return isinstance(value, numbers.Number) and not isinstance(value, bool)


def align(rows, columns):
    """
    Render rows as aligned text lines, a header line first.

    Numbers are right-aligned, everything else left-aligned.
    """
    widths = [width(rows, column, len(column)) for column in columns]
    lines = ["  ".join(pad(c, w) for c, w in zip(columns, widths)).rstrip()]
    for row in rows:
        cells = []
        for column, column_width in zip(columns, widths):
            value = row[column]
            text = trackmarket.format.sig9(value)
            cells.append(rpad(text, column_width) if _is_number(value) else pad(text, column_width))
        lines.append("  ".join(cells).rstrip())
    return lines


DEFAULT_FILTERS = {
    'tm.align': align,
}
