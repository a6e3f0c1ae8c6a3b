#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import os.path

import trackmarket.format


# ============================== HELPER FUNCTIONS =============================
def _hl(name, plain=False):
    if plain: return str(name);
    return trackmarket.format.bold(str(name))

def _rel(filename):
    return os.path.relpath(str(filename))

def _bp(values):
    return "".join("    - {}\n".format(_hl(v)) for v in values)


# ============================== BASE EXCEPTIONS ==============================
class TmException(Exception):
    """Base class for exceptions thrown by trackmarket."""
    exit_code = 2

    def __init__(self, message):
        super().__init__(message)

class TmArgumentException(TmException):
    pass

class TmAggregateException(TmException):
    """Collection of multiple exceptions."""
    def __init__(self, exceptions, suffix=None):
        msg = "\nERROR: ".join(str(exc) for exc in exceptions)
        if suffix is not None:
            msg += suffix
        super().__init__(msg)
        self.exceptions = exceptions

class TmParameterException(TmException):
    def __init__(self, name, value, reason):
        super().__init__("Parameter '{}' = {} is invalid: {}".format(_hl(name), _hl(value), reason))
        self.name = name
        self.value = value


# ========================== CONFIGURATION EXCEPTIONS =========================
class TmConfigException(TmException):
    def __init__(self, filename, message):
        message = "Configuration({}){}".format(_hl(_rel(filename)), message)
        super().__init__(message)
        self.filename = filename

class TmConfigSubstitutionException(TmConfigException):
    def __init__(self, filename, node, key):
        message = (": Unable to resolve '${{{}}}'!\n\n"
            "    {}\n\n"
            "Hint: Check if the variable exists in your shell environment.\n"
            .format(_hl(key), node.strip()))
        super().__init__(filename, message)

class TmConfigNotFoundException(TmConfigException):
    def __init__(self, filename, parent=None):
        if parent is None:
            message = (" not found!\n"
                "Hint: Check your command line call:\n\n"
                "    trackmarket -c {} metrics\n"
                .format(_hl(_rel(filename))))
        else:
            message = (" not found!\n"
                "Hint: Check your configuration paths in '{}':\n\n"
                "    <extends>{}</extends>\n"
                .format(_hl(_rel(parent)), _hl(_rel(filename))))
        super().__init__(filename, message)

class TmConfigPathException(TmConfigException):
    def __init__(self, key, path, source="command-line"):
        if path is None:
            message = (": no '{}' given!\n"
                "Hint: Pass it on the command line or add it to your configuration file:\n\n"
                "    <{tag}>path/to/file</{tag}>\n"
                .format(_hl(key), tag=key.replace("_", "-")))
        else:
            message = (": '{}' path '{}' does not exist!\n"
                .format(_hl(key), _hl(path)))
        super().__init__(source, message)
        self.key = key
        self.path = path

class TmConfigValueException(TmConfigException):
    def __init__(self, key, value, allowed, source="command-line"):
        message = (": '{}' value '{}' is invalid!\nHint: Allowed values are:\n\n{}"
                   .format(_hl(key), _hl(value), _bp(allowed)))
        super().__init__(source, message)
        self.key = key
        self.value = value


# ============================== INGEST EXCEPTIONS ============================
class TmHostnameException(TmException):
    def __init__(self, host, reason):
        super().__init__("Malformed hostname '{}': {}".format(_hl(host), reason))
        self.host = host

class TmSuffixRulesException(TmException):
    def __init__(self, path, reason):
        super().__init__("Suffix rules({}): {}".format(_hl(_rel(path)), reason))
        self.path = path

class TmRecordException(TmException):
    def __init__(self, path, lineno, reason):
        super().__init__("Corpus({}:{}): {}".format(_hl(_rel(path)), _hl(lineno), reason))
        self.path = path
        self.lineno = lineno

class TmCorpusDuplicateException(TmException):
    def __init__(self, path, field, offenders):
        lines = ["{} = {}: {}".format(field, value, ", ".join(sorted(ids)))
                 for value, ids in sorted(offenders.items(), key=lambda i: str(i[0]))]
        super().__init__("Corpus({}): duplicate {}!\nHint: These records conflict:\n\n{}"
                         .format(_hl(_rel(path)), _hl(field), _bp(lines)))
        self.field = field
        self.offenders = offenders


# ========================= KNOWLEDGE BASE EXCEPTIONS =========================
class TmKbException(TmException):
    def __init__(self, source, message):
        super().__init__("KnowledgeBase({}): {}".format(_hl(source), message))
        self.source = source

class TmKbLookupException(TmKbException):
    def __init__(self, source, entity_id):
        super().__init__(source, "unknown entity '{}'!".format(_hl(entity_id)))
        self.entity_id = entity_id

class TmKbCycleException(TmKbException):
    def __init__(self, source, cycle):
        super().__init__(source, "parent links form a cycle!\n\n    {}\n"
                         .format(" -> ".join(_hl(c) for c in cycle)))
        self.cycle = cycle

class TmKbDanglingParentException(TmKbException):
    def __init__(self, source, entity_id, parent_id):
        super().__init__(source, "entity '{}' names unknown parent '{}'!"
                         .format(_hl(entity_id), _hl(parent_id)))
        self.entity_id = entity_id
        self.parent_id = parent_id

class TmKbDuplicateClaimException(TmKbException):
    def __init__(self, source, kind, claim, owners):
        super().__init__(source, "{} '{}' is claimed by multiple entities!\n"
                         "Hint: Found these owners:\n\n{}"
                         .format(kind, _hl(claim), _bp(sorted(owners))))
        self.claim = claim
        self.owners = sorted(owners)

class TmKbDuplicateEntityException(TmKbException):
    def __init__(self, source, entity_id):
        super().__init__(source, "entity id '{}' is defined twice!".format(_hl(entity_id)))
        self.entity_id = entity_id

class TmKbAcquisitionException(TmKbException):
    def __init__(self, source, entity_id, target_id, reason):
        super().__init__(source, "acquisition of '{}' by '{}' is invalid: {}"
                         .format(_hl(target_id), _hl(entity_id), reason))
        self.entity_id = entity_id
        self.target_id = target_id


# ======================= ANALYSIS AND MARKET EXCEPTIONS ======================
class TmLookupException(TmException):
    def __init__(self, what, key):
        super().__init__("Unknown {} '{}'!".format(what, _hl(key)))
        self.key = key

class TmEmptyCorpusException(TmException):
    def __init__(self, platform):
        super().__init__("Corpus for platform '{}' is empty!".format(_hl(platform)))

class TmEmptyMarketException(TmException):
    exit_code = 3

    def __init__(self, reason):
        super().__init__("No market to analyze: {}".format(reason))

class TmSharesException(TmException):
    def __init__(self, total):
        super().__init__("Market shares sum to {}, expected 1!".format(_hl(repr(total))))
        self.total = total

class TmLevelMismatchException(TmException):
    def __init__(self, left, right):
        super().__init__("Cannot combine analysis levels '{}' and '{}'!"
                         .format(_hl(left), _hl(right)))

class TmScenarioException(TmException):
    def __init__(self, parent_id, entity_id, reason):
        super().__init__("Scenario for '{}' with '{}' is invalid: {}"
                         .format(_hl(parent_id), _hl(entity_id), reason))
        self.parent_id = parent_id
        self.entity_id = entity_id


# ============================= OVERLAP EXCEPTIONS ============================
class TmPackageNameException(TmException):
    def __init__(self, package):
        super().__init__("Package name '{}' needs at least two labels!".format(_hl(package)))
        self.package = package

class TmPairException(TmException):
    def __init__(self, pair, reason):
        super().__init__("Pair({} <-> {}): {}".format(
                _hl(pair.web_first_party_id), _hl(pair.mobile_first_party_id), reason))
        self.pair = pair
