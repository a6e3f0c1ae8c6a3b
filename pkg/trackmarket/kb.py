#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

"""
Knowledge base of tracker companies.

Entities form a forest through their `parent_id` links. The forest is
kept as an anytree structure, so the ultimate parent of an entity is
simply the root of its tree.
"""

import os
import re
import enum
import json
import copy
import pkgutil
import logging
import collections

import anytree

import trackmarket.exception as te

LOGGER = logging.getLogger('trackmarket.kb')

ENTITY_FIELDS = ("entity_id", "display_name", "is_tracker", "domains", "library_prefixes",
                 "parent_id", "jurisdiction", "founded", "acquisitions")


@enum.unique
class Level(enum.Enum):
    SUBSIDIARY = "subsidiary"
    PARENT = "parent"

    def __str__(self):
        return self.value


class Acquisition:

    def __init__(self, target_id, year):
        self.target_id = target_id
        self.year = year

    def to_dict(self):
        return collections.OrderedDict([("target_id", self.target_id), ("year", self.year)])

    def __repr__(self):
        return "Acquisition({}, {})".format(self.target_id, self.year)


class TrackerEntity(anytree.NodeMixin):
    """
    A company of the knowledge base.

    The anytree parent is set by the owning `KnowledgeBase` from `parent_id`.
    """

    def __init__(self, entity_id, display_name=None, is_tracker=True, domains=None,
                 library_prefixes=None, parent_id=None, jurisdiction=None, founded=None,
                 acquisitions=None):
        super().__init__()
        self.entity_id = entity_id
        self.display_name = entity_id if display_name is None else display_name
        self.is_tracker = bool(is_tracker)
        self.domains = frozenset(d.strip().lower().rstrip(".") for d in (domains or []))
        self.library_prefixes = frozenset(p.strip() for p in (library_prefixes or []))
        self.parent_id = parent_id
        self.jurisdiction = jurisdiction
        self.founded = founded
        self.acquisitions = tuple(acquisitions or [])

    @property
    def name(self):
        return self.entity_id

    def to_dict(self):
        return collections.OrderedDict([
            ("entity_id", self.entity_id),
            ("display_name", self.display_name),
            ("is_tracker", self.is_tracker),
            ("domains", sorted(self.domains)),
            ("library_prefixes", sorted(self.library_prefixes)),
            ("parent_id", self.parent_id),
            ("jurisdiction", self.jurisdiction),
            ("founded", self.founded),
            ("acquisitions", [a.to_dict() for a in self.acquisitions]),
        ])

    @staticmethod
    def from_dict(data, source="<memory>"):
        if not isinstance(data, dict):
            raise te.TmKbException(source, "entity is not an object: {}".format(data))
        unknown = sorted(set(data) - set(ENTITY_FIELDS))
        if unknown:
            LOGGER.warning("%s: entity '%s' has unknown fields: %s",
                           source, data.get("entity_id"), ", ".join(unknown))
        if not isinstance(data.get("entity_id"), str) or not data["entity_id"]:
            raise te.TmKbException(source, "entity without 'entity_id': {}".format(data))
        acquisitions = []
        for acquisition in data.get("acquisitions") or []:
            try:
                acquisitions.append(Acquisition(acquisition["target_id"], int(acquisition["year"])))
            except (KeyError, TypeError, ValueError):
                raise te.TmKbAcquisitionException(source, data["entity_id"],
                                                  acquisition, "expected {target_id, year}")
        return TrackerEntity(data["entity_id"], data.get("display_name"),
                             data.get("is_tracker", True), data.get("domains"),
                             data.get("library_prefixes"), data.get("parent_id"),
                             data.get("jurisdiction"), data.get("founded"), acquisitions)

    def __repr__(self):
        return "TrackerEntity({})".format(self.entity_id)


class KnowledgeBase:
    """
    Validated, indexed and immutable collection of tracker entities.
    """

    def __init__(self, entities, source="<memory>"):
        self.source = source
        self._entities = collections.OrderedDict()
        for entity in entities:
            if entity.entity_id in self._entities:
                raise te.TmKbDuplicateEntityException(source, entity.entity_id)
            self._entities[entity.entity_id] = entity

        self._link_parents()
        self._domain_index = self._build_index("domain", lambda e: e.domains)
        self._prefix_index = collections.OrderedDict(sorted(
                self._build_index("library prefix", lambda e: e.library_prefixes).items()))
        self._check_acquisitions()

    def _link_parents(self):
        errors = [te.TmKbDanglingParentException(self.source, entity.entity_id, entity.parent_id)
                  for entity in self._entities.values()
                  if entity.parent_id is not None and entity.parent_id not in self._entities]

        cycles = collections.OrderedDict()
        for entity in self._entities.values():
            cycle = self._find_cycle(entity)
            if cycle is not None:
                cycles.setdefault(frozenset(cycle), cycle)
        errors += [te.TmKbCycleException(self.source, cycle) for cycle in cycles.values()]

        if len(errors) == 1:
            raise errors[0]
        if errors:
            raise te.TmAggregateException(errors)

        for entity in self._entities.values():
            if entity.parent_id is not None:
                entity.parent = self._entities[entity.parent_id]

    def _find_cycle(self, entity):
        path = [entity.entity_id]
        current = entity
        while current.parent_id is not None and current.parent_id in self._entities:
            if current.parent_id in path:
                start = path.index(current.parent_id)
                return path[start:] + [current.parent_id]
            path.append(current.parent_id)
            current = self._entities[current.parent_id]
        return None

    def _build_index(self, kind, claims):
        owners = collections.defaultdict(set)
        for entity in self._entities.values():
            for claim in claims(entity):
                owners[claim].add(entity.entity_id)

        conflicts = [te.TmKbDuplicateClaimException(self.source, kind, claim, ids)
                     for claim, ids in sorted(owners.items()) if len(ids) > 1]
        if len(conflicts) == 1:
            raise conflicts[0]
        if conflicts:
            raise te.TmAggregateException(conflicts)
        return {claim: next(iter(ids)) for claim, ids in owners.items()}

    def _check_acquisitions(self):
        for entity in self._entities.values():
            for acquisition in entity.acquisitions:
                target = self._entities.get(acquisition.target_id)
                if target is None:
                    raise te.TmKbAcquisitionException(self.source, entity.entity_id,
                                                      acquisition.target_id, "unknown target!")
                if entity not in target.ancestors:
                    raise te.TmKbAcquisitionException(self.source, entity.entity_id,
                            acquisition.target_id, "target is not owned by the acquirer!")

    @property
    def entities(self):
        return self._entities

    @property
    def domain_index(self):
        return self._domain_index

    @property
    def prefix_index(self):
        return self._prefix_index

    def __len__(self):
        return len(self._entities)

    def __contains__(self, entity_id):
        return entity_id in self._entities

    def __getitem__(self, entity_id):
        try:
            return self._entities[entity_id]
        except KeyError:
            raise te.TmKbLookupException(self.source, entity_id)

    def ultimate_parent(self, entity_id):
        """
        Follow the parent links of an entity up to its root.
        """
        return self[entity_id].root.entity_id

    def subsidiaries(self, entity_id):
        """
        All entities owned directly or transitively by an entity.
        """
        return sorted(e.entity_id for e in self[entity_id].descendants)

    def is_owned_by(self, entity_id, parent_id):
        return self[parent_id] in self[entity_id].ancestors

    def match_host(self, host):
        """
        Exact lookup of a registrable domain. Returns `None` if no entity claims it.
        """
        return self._domain_index.get(host)

    def match_library(self, package):
        """
        Longest prefix match of a package name on whole-label boundaries.
        """
        labels = package.split(".")
        for length in range(len(labels), 0, -1):
            entity_id = self._prefix_index.get(".".join(labels[:length]))
            if entity_id is not None:
                return entity_id
        return None

    def _records(self):
        return [entity.to_dict() for entity in self._entities.values()]

    def detached(self, entity_ids):
        """
        Copy of this knowledge base in which the given entities have no parent.

        Acquisition records pointing at the detached entities are dropped.
        """
        entity_ids = set(entity_ids)
        for entity_id in entity_ids:
            self[entity_id]
        records = self._records()
        for record in records:
            if record["entity_id"] in entity_ids:
                record["parent_id"] = None
        for record in records:
            record["acquisitions"] = [a for a in record["acquisitions"]
                                      if self._still_owned(records, record["entity_id"], a["target_id"])]
        return KnowledgeBase.from_dict({"entities": records}, source=self.source)

    @staticmethod
    def _still_owned(records, owner, target):
        parents = {r["entity_id"]: r["parent_id"] for r in records}
        current = parents.get(target)
        while current is not None:
            if current == owner:
                return True
            current = parents.get(current)
        return False

    def attached(self, parent_id, entity_ids):
        """
        Copy of this knowledge base in which the given entities are owned by `parent_id`.
        """
        self[parent_id]
        entity_ids = set(entity_ids)
        records = self._records()
        for entity_id in entity_ids:
            self[entity_id]
        for record in records:
            if record["entity_id"] in entity_ids:
                record["parent_id"] = parent_id
        for record in records:
            record["acquisitions"] = [a for a in record["acquisitions"]
                                      if self._still_owned(records, record["entity_id"], a["target_id"])]
        return KnowledgeBase.from_dict({"entities": records}, source=self.source)

    def acquisition_scenarios(self, grouped=False):
        """
        One `(parent_id, [target_id], year)` triple per acquisition record,
        sorted by parent, then year.

        With `grouped` every parent yields a single `(parent_id, target_ids,
        years)` triple holding all its recorded acquisitions in year order.
        """
        scenarios = []
        for entity in self._entities.values():
            for acquisition in entity.acquisitions:
                scenarios.append((entity.entity_id, [acquisition.target_id], acquisition.year))
        scenarios.sort(key=lambda s: (s[0], s[2], s[1]))
        if not grouped:
            return scenarios

        groups = collections.OrderedDict()
        for parent_id, targets, year in scenarios:
            group = groups.setdefault(parent_id, (parent_id, [], []))
            group[1].extend(targets)
            group[2].append(year)
        return list(groups.values())

    def lint(self):
        """
        Check curation issues that do not invalidate the knowledge base.

        Returns:
            List of warning messages, each also logged.
        """
        messages = []
        names = collections.defaultdict(list)
        for entity in self._entities.values():
            key = re.sub(r"\s+", "", entity.display_name).casefold()
            names[key].append(entity.entity_id)
        for ids in names.values():
            if len(ids) > 1:
                messages.append("Near-duplicate display names: {}".format(", ".join(sorted(ids))))

        for entity in self._entities.values():
            if not entity.domains and not entity.library_prefixes and not entity.children:
                messages.append("Entity '{}' claims no domains or libraries".format(entity.entity_id))
            if entity.is_tracker and entity.parent is not None and not entity.root.is_tracker:
                messages.append("Tracker '{}' has non-tracker parent '{}'".format(
                        entity.entity_id, entity.root.entity_id))

        for message in messages:
            LOGGER.warning("%s: %s", self.source, message)
        return messages

    def render(self, entity_ids=None):
        """
        Render the parent forest, optionally only the trees of some entities.
        """
        if entity_ids:
            roots = sorted({self[e].root for e in entity_ids}, key=lambda e: e.entity_id)
        else:
            roots = [e for e in self._entities.values() if e.parent is None]
            roots.sort(key=lambda e: e.entity_id)

        lines = []
        for root in roots:
            for pre, _, node in anytree.RenderTree(root, style=anytree.ContRoundStyle(),
                                                   childiter=lambda c: sorted(c, key=lambda e: e.entity_id)):
                flag = "" if node.is_tracker else "  [non-tracker]"
                lines.append("{}{} ({}){}".format(pre, node.entity_id, node.display_name, flag))
        return "\n".join(lines)

    def to_dict(self):
        return {"entities": self._records()}

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as kbfile:
            json.dump(self.to_dict(), kbfile, indent=2, ensure_ascii=False)
            kbfile.write("\n")

    @staticmethod
    def from_dict(data, source="<memory>"):
        if not isinstance(data, dict) or not isinstance(data.get("entities", []), list):
            raise te.TmKbException(source, "expected an object with an 'entities' array!")
        unknown = sorted(set(data) - {"entities"})
        if unknown:
            LOGGER.warning("%s: unknown top-level fields: %s", source, ", ".join(unknown))
        entities = [TrackerEntity.from_dict(copy.deepcopy(e), source) for e in data.get("entities", [])]
        return KnowledgeBase(entities, source)


def load_kb(path):
    """
    Load, index and validate a knowledge base file.
    """
    try:
        with open(path, encoding="utf-8") as kbfile:
            data = json.load(kbfile)
    except OSError as error:
        raise te.TmKbException(path, "cannot be read! {}".format(error.strerror))
    except ValueError as error:
        raise te.TmKbException(path, "invalid JSON! {}".format(error))
    kb = KnowledgeBase.from_dict(data, source=os.path.relpath(path))
    LOGGER.info("Loaded %d entities from '%s'", len(kb), path)
    return kb


def load_starter_kb():
    """
    The knowledge base shipped with trackmarket, covering the well-known
    tracker companies and their acquisitions.
    """
    data = json.loads(pkgutil.get_data('trackmarket', 'resources/starter_kb.json').decode("utf-8"))
    return KnowledgeBase.from_dict(data, source="starter_kb.json")
