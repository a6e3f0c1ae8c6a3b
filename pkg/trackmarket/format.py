#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Rendering of analysis results: fixed-precision numbers, CSV and JSON-lines
writers and Jinja2 text tables.
"""

import os
import csv
import json

import jinja2

import trackmarket.filter

# Only the command line turns styles on
PLAIN = True
SIGNIFICANT_DIGITS = 9
RESOURCES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "resources")

ANSI = {
    "bold": "\033[1m",
    "no_bold": "\033[22m",
}


def bold(text):
    if PLAIN:
        # The terminal does not support styles
        return text
    return ANSI["bold"] + text + ANSI["no_bold"]


def sig9(value):
    """
    Format a number with nine significant digits.

    Integers and booleans are printed as they are, so that counts stay exact.
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = "{:.{}g}".format(value, SIGNIFICANT_DIGITS)
        return "0" if text == "-0" else text
    if value is None:
        return ""
    return str(value)


def _plain_value(value):
    if isinstance(value, float):
        # Round-trip through the fixed text form to keep JSON stable
        return float(sig9(value))
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    return value


def write_csv(stream, columns, rows):
    """
    Write rows as CSV with a fixed column order and `\\n` line endings.

    Args:
        stream -- Text stream to write to.
        columns -- Column names, also used as keys into each row mapping.
        rows -- Iterable of mappings.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([sig9(row[column]) for column in columns])


def write_jsonl(stream, columns, rows):
    for row in rows:
        record = {column: _plain_value(row[column]) for column in columns}
        stream.write(json.dumps(record, ensure_ascii=False))
        stream.write("\n")


def write_rows(stream, fmt, columns, rows, template="table.txt.in", **substitutions):
    """
    Write rows in one of the supported output formats.

    The `table` format renders `template` from the resources folder and
    falls back to CSV if no template is given.
    """
    rows = list(rows)
    substitutions.setdefault("title", "")
    substitutions.setdefault("footer", [])
    if fmt == "jsonl":
        write_jsonl(stream, columns, rows)
    elif fmt == "table" and template is not None:
        stream.write(render(template, columns=columns, rows=rows, **substitutions))
    else:
        write_csv(stream, columns, rows)


def _environment():
    environment = jinja2.Environment(loader=jinja2.FileSystemLoader(RESOURCES),
                                     undefined=jinja2.StrictUndefined,
                                     keep_trailing_newline=True,
                                     trim_blocks=True,
                                     lstrip_blocks=True)
    environment.filters.update(trackmarket.filter.DEFAULT_FILTERS)
    return environment


def render(template, **substitutions):
    """
    Render a Jinja2 template from the resources folder.
    """
    return _environment().get_template(template).render(substitutions)
