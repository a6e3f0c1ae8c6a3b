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
import re
import pkgutil
import logging
from os.path import realpath, join
from pathlib import Path

import lxml.etree
import anytree

import trackmarket.exception as te
from .kb import Level
from .ingest import Platform
from .attribution import DEFAULT_MIN_COVERAGE, ThresholdStage

LOGGER = logging.getLogger('trackmarket.config')
DEFAULT_CONFIG_NAME = "trackmarket.xml"

# Keys holding paths, resolved against the directory of their file
PATH_KEYS = ("kb", "suffix_rules", "pairs", "out")
FORMATS = ("csv", "jsonl", "table")
WEIGHTS = ("ish", "prowish")
ENV_VARIABLE = re.compile(r"\$\{(.*?)\}")


class ConfigNode(anytree.AnyNode):
    """
    One configuration file. Files named by `<extends>` become children, and
    files found farther up the directory tree hang below the deepest node,
    so every node overrides all nodes below it.
    """

    def __init__(self, parent=None):
        anytree.AnyNode.__init__(self, parent)

        self._values = {}
        self._corpora = {}
        self.filename = Path()

    @property
    def values(self):
        """
        Mapping key -> (value, source filename).
        """
        return self._values

    @property
    def corpora(self):
        """
        Mapping `Platform` -> (path, source filename).
        """
        return self._corpora

    def _merge(self, values, corpora):
        # Later <extends> override earlier ones, the file itself overrides both
        for child in self.children:
            child._merge(values, corpora)
        values.update(self._values)
        corpora.update(self._corpora)

    def flatten(self):
        """
        Merge the whole chain into a single node without children.
        """
        config = ConfigNode()
        config.filename = self.root.filename
        self.root._merge(config._values, config._corpora)
        return config

    @property
    def last(self):
        """
        The deepest node in pre-order, the file with the lowest priority.
        """
        descendants = self.root.descendants
        return descendants[-1] if descendants else self.root

    @staticmethod
    def from_path(startpath=None, name=DEFAULT_CONFIG_NAME):
        """
        Search the starting folder and all its parents for configuration
        files and chain them, the closest file first.

        Returns:
            `ConfigNode` of the closest file, `None` if there is none.
        """
        start = Path(os.path.abspath(startpath)) if startpath else Path.cwd()
        if not start.is_dir():
            return None

        found = [ConfigNode.from_file(folder / name)
                 for folder in [start] + list(start.parents)
                 if (folder / name).is_file()]
        if not found:
            return None
        for farther in found[1:]:
            farther.parent = found[0].last
        return found[0]

    @staticmethod
    def from_file(configfile, parent=None):
        """
        Load a configuration file together with the files it extends.

        Args:
            configfile -- Path to the configuration file.
            parent -- Configuration extending this file.

        Raises:
            TmConfigNotFoundException if the file or an extended file is missing.
            TmConfigException if the file is not valid.
        """
        filename = realpath(str(configfile))
        if not os.path.exists(filename):
            raise te.TmConfigNotFoundException(filename)
        folder = os.path.dirname(filename)

        xmlroot = ConfigNode._parse(filename)
        ConfigNode._substitute_env(filename, xmlroot, os.environ)

        config = ConfigNode(parent)
        config.filename = filename
        LOGGER.debug("Parse configuration '%s'", os.path.relpath(filename))

        for node in xmlroot:
            if not isinstance(node.tag, str):
                continue
            text = (node.text or "").strip()
            if node.tag == "extends":
                extended = ConfigNode._resolve(text, folder)
                if not os.path.exists(extended):
                    raise te.TmConfigNotFoundException(extended, filename)
                ConfigNode.from_file(extended, config)
            elif node.tag == "corpus":
                platform = Platform(node.get("platform"))
                config._corpora[platform] = (ConfigNode._resolve(text, folder), filename)
            else:
                key = node.tag.replace("-", "_")
                value = ConfigNode._resolve(text, folder) if key in PATH_KEYS else text
                config._values[key] = (value, filename)

        return config

    @staticmethod
    def _parse(filename):
        schema = lxml.etree.XMLSchema(lxml.etree.fromstring(
                pkgutil.get_data('trackmarket', 'resources/configuration.xsd')))
        try:
            xmlroot = lxml.etree.parse(filename)
            schema.assertValid(xmlroot)
        except OSError as error:
            raise te.TmConfigException(filename, ": {}".format(error))
        except (lxml.etree.DocumentInvalid, lxml.etree.XMLSyntaxError) as error:
            # pylint: disable=no-member
            raise te.TmConfigException(filename, ": Validation failed!\n\n{}".format(error))
        return xmlroot.getroot()

    @staticmethod
    def _substitute_env(filename, xmlroot, env):
        for node in xmlroot.iter(tag=lxml.etree.Element):
            if not node.text or "$" not in node.text:
                continue

            def lookup(match, node=node):
                value = env.get(match.group(1))
                if not value:
                    raise te.TmConfigSubstitutionException(
                            filename, lxml.etree.tostring(node).decode("utf-8"), match.group(1))
                return value
            node.text = ENV_VARIABLE.sub(lookup, node.text)

    @staticmethod
    def _resolve(path, folder):
        return realpath(join(folder, os.path.expanduser(path)))


class RunConfig:
    """
    Effective settings of one command: defaults, overridden by the
    configuration file, overridden by command-line flags.
    """

    DEFAULTS = {
        "kb": None,
        "suffix_rules": None,
        "pairs": None,
        "out": None,
        "level": None,
        "weight": "prowish",
        "min_coverage": DEFAULT_MIN_COVERAGE,
        "threshold_stage": ThresholdStage.ENTITY.value,
        "exponent": 1.0,
        "format": "csv",
        "top": None,
        "jobs": 1,
    }

    def __init__(self):
        self.corpora = {}
        self.sources = {}
        for key, value in self.DEFAULTS.items():
            setattr(self, key, value)
            self.sources[key] = "default"

    @staticmethod
    def build(config=None, **flags):
        """
        Merge a flattened `ConfigNode` and command-line flags.

        Flags with the value `None` are ignored. The `corpora` flag maps
        platforms to paths.
        """
        runconfig = RunConfig()
        if config is not None:
            for key, (value, source) in config.values.items():
                runconfig._set(key, value, source)
            for platform, (path, source) in config.corpora.items():
                runconfig.corpora[platform] = path
                runconfig.sources["corpus:" + platform.value] = source

        for key, value in flags.items():
            if value is None:
                continue
            if key == "corpora":
                for platform, path in value.items():
                    runconfig.corpora[Platform(platform)] = path
                    runconfig.sources["corpus:" + Platform(platform).value] = "command-line"
            else:
                runconfig._set(key, value, "command-line")

        runconfig.validate()
        return runconfig

    def _set(self, key, value, source):
        if key not in self.DEFAULTS:
            raise te.TmConfigValueException(key, value, sorted(self.DEFAULTS), source)
        setattr(self, key, value)
        self.sources[key] = source

    def _convert(self, key, converter, allowed):
        value = getattr(self, key)
        if value is None or not isinstance(value, str):
            return
        try:
            setattr(self, key, converter(value))
        except ValueError:
            raise te.TmConfigValueException(key, value, allowed, self.sources[key])

    def _choice(self, key, allowed):
        value = getattr(self, key)
        if value is not None and str(value) not in allowed:
            raise te.TmConfigValueException(key, value, allowed, self.sources[key])

    def validate(self):
        self._convert("min_coverage", float, ["a fraction in [0, 1]"])
        self._convert("exponent", float, ["a positive number"])
        self._convert("top", int, ["an integer >= 1"])
        self._convert("jobs", int, ["an integer >= 1"])

        self._choice("level", [l.value for l in Level])
        self._choice("weight", WEIGHTS)
        self._choice("threshold_stage", [s.value for s in ThresholdStage])
        self._choice("format", FORMATS)

        if not 0 <= self.min_coverage <= 1:
            raise te.TmConfigValueException("min_coverage", self.min_coverage,
                                            ["a fraction in [0, 1]"], self.sources["min_coverage"])
        if not self.exponent > 0:
            raise te.TmConfigValueException("exponent", self.exponent,
                                            ["a positive number"], self.sources["exponent"])
        for key in ("top", "jobs"):
            value = getattr(self, key)
            if value is not None and value < 1:
                raise te.TmConfigValueException(key, value, ["an integer >= 1"], self.sources[key])

        for key in ("kb", "suffix_rules", "pairs"):
            path = getattr(self, key)
            if path is not None and not os.path.exists(path):
                raise te.TmConfigPathException(key, path, self.sources[key])
        for platform, path in self.corpora.items():
            if not os.path.exists(path):
                raise te.TmConfigPathException("corpus", path, self.sources["corpus:" + platform.value])
        return self

    def require(self, key):
        """
        The value of a setting that the current command cannot do without.
        """
        value = getattr(self, key)
        if value is None:
            raise te.TmConfigPathException(key, None)
        return value

    def corpus(self, platform):
        path = self.corpora.get(Platform(platform))
        if path is None:
            raise te.TmConfigPathException("corpus", None)
        return path

    def __repr__(self):
        return "RunConfig({})".format(", ".join("{}={}".format(k, getattr(self, k))
                                               for k in sorted(self.DEFAULTS)))
