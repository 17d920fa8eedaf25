"""Vocabulary consolidation: maps, override actions, and variant noise.

A consolidation map sends every original entity id to a canonical id (or
to nothing, for removals). Consolidated vectors are the unweighted mean
of their member vectors. An override set is an ordered, append-only list
of curator actions replayed on top of a base map.

File formats:
    map CSV      ``original_id,original_name,canonical_id,canonical_name``
                 (empty canonical columns mean removal)
    catalog CSV  ``canonical_id,name,categories,vegetarian,vegan`` with
                 ``;``-joined categories
    overrides    JSON ``{"actions": [...]}`` in application order
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .corpus import DataFormatError, EmbeddingMatrix, LabelSet
from .stats import Seed

CATEGORY_TAXONOMY = (
    "Meat", "Fish", "Seafood", "Dairy", "Veg", "Fruit", "Herbs", "Spice",
    "Nuts", "Legumes", "Grain", "Fat", "Sweet", "Condiment", "Beverage",
    "Pantry", "Protein", "Produce",
)

MAX_CATEGORIES = 3


@dataclass(frozen=True)
class CanonicalEntry:
    canonical_id: int
    name: str
    categories: tuple[str, ...] = ()
    vegetarian: bool = False
    vegan: bool = False

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if len(self.categories) > MAX_CATEGORIES:
            raise ValueError(
                f"canonical {self.canonical_id}: at most {MAX_CATEGORIES} categories, "
                f"got {len(self.categories)}"
            )
        bad = [c for c in self.categories if c not in CATEGORY_TAXONOMY]
        if bad:
            raise ValueError(f"canonical {self.canonical_id}: categories outside taxonomy: {bad}")
        if self.vegan and not self.vegetarian:
            raise ValueError(f"canonical {self.canonical_id}: vegan implies vegetarian")


@dataclass(frozen=True)
class ConsolidationMap:
    """original id -> canonical id (None = removed), plus the canonical catalog."""

    assignments: dict        # original_id -> canonical_id | None
    original_names: dict     # original_id -> name
    catalog: dict            # canonical_id -> CanonicalEntry

    def __post_init__(self):
        assignments = {int(k): (None if v is None else int(v)) for k, v in self.assignments.items()}
        names = {int(k): str(v) for k, v in self.original_names.items()}
        object.__setattr__(self, "assignments", assignments)
        object.__setattr__(self, "original_names", names)
        if set(assignments) != set(names):
            raise ValueError("assignments and original_names must cover the same ids")
        dangling = sorted(
            cid for cid in assignments.values() if cid is not None and cid not in self.catalog
        )
        if dangling:
            raise ValueError(f"canonical ids missing from catalog: {dangling}")
        canon_names = [e.name for e in self.catalog.values()]
        if len(set(canon_names)) != len(canon_names):
            dupes = sorted({n for n in canon_names if canon_names.count(n) > 1})
            raise ValueError(f"duplicate canonical names: {dupes}")

    def groups(self) -> dict:
        """canonical_id -> sorted list of member original ids (no removals)."""
        out: dict[int, list[int]] = {cid: [] for cid in self.catalog}
        for oid, cid in sorted(self.assignments.items()):
            if cid is not None:
                out[cid].append(oid)
        return out

    def members(self, canonical_id: int) -> list[int]:
        return self.groups().get(int(canonical_id), [])

    def removed_ids(self) -> list[int]:
        return sorted(oid for oid, cid in self.assignments.items() if cid is None)

    def next_canonical_id(self) -> int:
        taken = set(self.catalog) | set(self.assignments)
        return max(taken, default=0) + 1


def load_consolidation_map(map_path, catalog_path=None) -> ConsolidationMap:
    map_path = Path(map_path)
    assignments: dict[int, int | None] = {}
    original_names: dict[int, str] = {}
    map_canon_names: dict[int, str] = {}
    with map_path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["original_id", "original_name", "canonical_id", "canonical_name"]:
            raise DataFormatError(f"{map_path}: line 1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataFormatError(f"{map_path}: line {lineno}: expected 4 columns, got {len(row)}")
            try:
                oid = int(row[0])
            except ValueError:
                raise DataFormatError(f"{map_path}: line {lineno}: bad original_id {row[0]!r}") from None
            if oid in assignments:
                raise DataFormatError(f"{map_path}: line {lineno}: duplicate original_id {oid}")
            original_names[oid] = row[1]
            if row[2] == "":
                assignments[oid] = None
            else:
                try:
                    cid = int(row[2])
                except ValueError:
                    raise DataFormatError(f"{map_path}: line {lineno}: bad canonical_id {row[2]!r}") from None
                assignments[oid] = cid
                prev = map_canon_names.get(cid)
                if prev is not None and prev != row[3]:
                    raise DataFormatError(
                        f"{map_path}: line {lineno}: canonical {cid} named both {prev!r} and {row[3]!r}"
                    )
                map_canon_names[cid] = row[3]
    catalog: dict[int, CanonicalEntry] = {}
    if catalog_path is not None:
        catalog_path = Path(catalog_path)
        with catalog_path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["canonical_id", "name", "categories", "vegetarian", "vegan"]:
                raise DataFormatError(f"{catalog_path}: line 1: unexpected header {header}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 5:
                    raise DataFormatError(
                        f"{catalog_path}: line {lineno}: expected 5 columns, got {len(row)}"
                    )
                try:
                    cid = int(row[0])
                except ValueError:
                    raise DataFormatError(f"{catalog_path}: line {lineno}: bad canonical_id") from None
                if cid in catalog:
                    raise DataFormatError(f"{catalog_path}: line {lineno}: duplicate canonical_id {cid}")
                cats = tuple(c for c in row[2].split(";") if c)
                flags = []
                for col in (row[3], row[4]):
                    if col not in ("true", "false"):
                        raise DataFormatError(
                            f"{catalog_path}: line {lineno}: boolean column must be true/false, got {col!r}"
                        )
                    flags.append(col == "true")
                try:
                    catalog[cid] = CanonicalEntry(cid, row[1], cats, flags[0], flags[1])
                except ValueError as exc:
                    raise DataFormatError(f"{catalog_path}: line {lineno}: {exc}") from None
        mentioned = {cid for cid in assignments.values() if cid is not None}
        for cid in mentioned:
            if cid in catalog and cid in map_canon_names and catalog[cid].name != map_canon_names[cid]:
                raise DataFormatError(
                    f"{map_path}: canonical {cid} named {map_canon_names[cid]!r} in map but "
                    f"{catalog[cid].name!r} in catalog"
                )
    else:
        catalog = {cid: CanonicalEntry(cid, name) for cid, name in map_canon_names.items()}
    return ConsolidationMap(assignments, original_names, catalog)


def save_consolidation_map(cmap: ConsolidationMap, map_path, catalog_path=None) -> None:
    with Path(map_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["original_id", "original_name", "canonical_id", "canonical_name"])
        for oid in sorted(cmap.assignments):
            cid = cmap.assignments[oid]
            if cid is None:
                writer.writerow([oid, cmap.original_names[oid], "", ""])
            else:
                writer.writerow([oid, cmap.original_names[oid], cid, cmap.catalog[cid].name])
    if catalog_path is not None:
        with Path(catalog_path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["canonical_id", "name", "categories", "vegetarian", "vegan"])
            for cid in sorted(cmap.catalog):
                e = cmap.catalog[cid]
                writer.writerow([
                    cid, e.name, ";".join(e.categories),
                    "true" if e.vegetarian else "false",
                    "true" if e.vegan else "false",
                ])


class OverrideError(ValueError):
    """Rejected override action (dangling id, name collision, bad shape)."""


VALID_ACTIONS = ("merge", "split", "rename", "remove", "recategorize")


@dataclass(frozen=True)
class OverrideSet:
    """Ordered log of curator actions; replayed verbatim, later wins."""

    actions: tuple = ()

    def __post_init__(self):
        coerced = []
        for i, action in enumerate(self.actions):
            if not isinstance(action, dict):
                raise OverrideError(f"action {i}: expected an object, got {type(action).__name__}")
            kind = action.get("action")
            if kind not in VALID_ACTIONS:
                raise OverrideError(f"action {i}: unknown action {kind!r}")
            coerced.append(dict(action))
        object.__setattr__(self, "actions", tuple(coerced))

    def __len__(self) -> int:
        return len(self.actions)

    def extended(self, more_actions) -> "OverrideSet":
        return OverrideSet(self.actions + tuple(more_actions))


def load_overrides(path) -> OverrideSet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "actions" not in doc or not isinstance(doc["actions"], list):
        raise DataFormatError(f"{path}: overrides document must be {{'actions': [...]}}")
    return OverrideSet(tuple(doc["actions"]))


def save_overrides(overrides: OverrideSet, path) -> None:
    doc = {"actions": list(overrides.actions)}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _apply_one(cmap: ConsolidationMap, action: dict, log: list) -> ConsolidationMap:
    kind = action["action"]
    assignments = dict(cmap.assignments)
    catalog = dict(cmap.catalog)
    if kind == "merge":
        try:
            sources = [int(s) for s in action["sources"]]
            target = int(action["target"])
        except (KeyError, TypeError, ValueError):
            raise OverrideError(f"merge needs integer 'sources' list and 'target': {action}") from None
        if target not in catalog:
            raise OverrideError(f"merge target {target} is not a canonical id")
        for src in sources:
            if src not in catalog:
                raise OverrideError(f"merge source {src} is not a canonical id")
            if src == target:
                raise OverrideError("merge source equals target")
        for src in sources:
            moved = [oid for oid, cid in assignments.items() if cid == src]
            for oid in moved:
                assignments[oid] = target
            del catalog[src]
            log.append(f"merge: canonical {src} ({cmap.catalog[src].name}) into {target} "
                       f"({cmap.catalog[target].name}), {len(moved)} originals moved")
    elif kind == "split":
        try:
            oid = int(action["original_id"])
        except (KeyError, TypeError, ValueError):
            raise OverrideError(f"split needs integer 'original_id': {action}") from None
        if oid not in assignments:
            raise OverrideError(f"split: unknown original id {oid}")
        if assignments[oid] is None:
            raise OverrideError(f"split: original {oid} is removed")
        old_cid = assignments[oid]
        new_cid = int(action.get("new_canonical_id", cmap.next_canonical_id()))
        if new_cid in catalog:
            raise OverrideError(f"split: canonical id {new_cid} already exists")
        new_name = action.get("new_name", cmap.original_names[oid])
        if any(e.name == new_name for e in catalog.values()):
            raise OverrideError(f"split: canonical name {new_name!r} already exists")
        old_entry = catalog[old_cid]
        catalog[new_cid] = CanonicalEntry(
            new_cid, new_name,
            tuple(action.get("categories", old_entry.categories)),
            bool(action.get("vegetarian", old_entry.vegetarian)),
            bool(action.get("vegan", old_entry.vegan)),
        )
        assignments[oid] = new_cid
        log.append(f"split: original {oid} ({cmap.original_names[oid]}) out of canonical "
                   f"{old_cid} into new canonical {new_cid} ({new_name})")
        if not any(cid == old_cid for cid in assignments.values()):
            del catalog[old_cid]
            log.append(f"split: canonical {old_cid} emptied and dropped")
    elif kind == "rename":
        try:
            cid = int(action["canonical_id"])
            new_name = str(action["new_name"])
        except (KeyError, TypeError, ValueError):
            raise OverrideError(f"rename needs 'canonical_id' and 'new_name': {action}") from None
        if cid not in catalog:
            raise OverrideError(f"rename: unknown canonical id {cid}")
        clash = [e.canonical_id for e in catalog.values() if e.name == new_name and e.canonical_id != cid]
        if clash:
            raise OverrideError(f"rename: name {new_name!r} already used by canonical {clash[0]}")
        log.append(f"rename: canonical {cid} {catalog[cid].name!r} -> {new_name!r}")
        catalog[cid] = replace(catalog[cid], name=new_name)
    elif kind == "remove":
        try:
            oid = int(action["original_id"])
        except (KeyError, TypeError, ValueError):
            raise OverrideError(f"remove needs integer 'original_id': {action}") from None
        if oid not in assignments:
            raise OverrideError(f"remove: unknown original id {oid}")
        if assignments[oid] is None:
            raise OverrideError(f"remove: original {oid} is already removed")
        old_cid = assignments[oid]
        assignments[oid] = None
        log.append(f"remove: original {oid} ({cmap.original_names[oid]}) dropped from canonical {old_cid}")
        if not any(cid == old_cid for cid in assignments.values()):
            del catalog[old_cid]
            log.append(f"remove: canonical {old_cid} emptied and dropped")
    elif kind == "recategorize":
        try:
            cid = int(action["canonical_id"])
        except (KeyError, TypeError, ValueError):
            raise OverrideError(f"recategorize needs 'canonical_id': {action}") from None
        if cid not in catalog:
            raise OverrideError(f"recategorize: unknown canonical id {cid}")
        entry = catalog[cid]
        try:
            catalog[cid] = CanonicalEntry(
                cid, entry.name,
                tuple(action.get("categories", entry.categories)),
                bool(action.get("vegetarian", entry.vegetarian)),
                bool(action.get("vegan", entry.vegan)),
            )
        except ValueError as exc:
            raise OverrideError(f"recategorize: {exc}") from None
        log.append(f"recategorize: canonical {cid} categories={catalog[cid].categories} "
                   f"vegetarian={catalog[cid].vegetarian} vegan={catalog[cid].vegan}")
    return ConsolidationMap(assignments, dict(cmap.original_names), catalog)


def apply_overrides(cmap: ConsolidationMap, overrides: OverrideSet):
    """Replay actions in order. Returns (new map, audit log lines).

    Any invalid action aborts the whole replay (the base map is unchanged);
    the error names the failing action index.
    """
    log: list[str] = []
    current = cmap
    for i, action in enumerate(overrides.actions):
        try:
            current = _apply_one(current, action, log)
        except OverrideError as exc:
            raise OverrideError(f"action {i}: {exc}") from None
    return current, log


def consolidate(matrix: EmbeddingMatrix, cmap: ConsolidationMap) -> EmbeddingMatrix:
    """Collapse originals to canonicals; each vector is the unweighted mean
    of its member vectors.

    The map must cover every matrix id exactly, and every canonical in the
    catalog must keep at least one member.
    """
    matrix_ids = set(int(i) for i in matrix.ids)
    map_ids = set(cmap.assignments)
    missing_in_matrix = sorted(map_ids - matrix_ids)
    if missing_in_matrix:
        raise ValueError(f"map originals not present in matrix: {missing_in_matrix}")
    uncovered = sorted(matrix_ids - map_ids)
    if uncovered:
        raise ValueError(f"matrix ids not covered by map: {uncovered}")
    groups = cmap.groups()
    empty = sorted(cid for cid, members in groups.items() if not members)
    if empty:
        raise ValueError(f"canonical groups empty after removals: {empty}")
    out_ids = []
    out_names = []
    out_vecs = np.empty((len(groups), matrix.dim), dtype=np.float64)
    for row, cid in enumerate(sorted(groups)):
        rows = matrix.rows_for(groups[cid])
        out_vecs[row] = matrix.vectors[rows].mean(axis=0)
        out_ids.append(cid)
        out_names.append(cmap.catalog[cid].name)
    return EmbeddingMatrix(
        ids=np.array(out_ids, dtype=np.int64), names=tuple(out_names), vectors=out_vecs
    )


@dataclass(frozen=True)
class GroupNoise:
    canonical_id: int
    name: str
    variant_count: int
    mean_cosine: float
    min_cosine: float
    member_ids: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "canonical_id": self.canonical_id,
            "name": self.name,
            "variant_count": self.variant_count,
            "mean_cosine": self.mean_cosine,
            "min_cosine": self.min_cosine,
            "member_ids": list(self.member_ids),
        }


@dataclass(frozen=True)
class VariantNoiseReport:
    entries: tuple                 # GroupNoise, ordered by variant_count desc
    baseline_mean: float           # mean cosine over random cross-group pairs
    baseline_pairs: int
    seed_master: int
    top_k: int

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "baseline_mean": self.baseline_mean,
            "baseline_pairs": self.baseline_pairs,
            "seed": self.seed_master,
            "top_k": self.top_k,
        }


BASELINE_PAIRS = 10_000


def variant_noise(matrix: EmbeddingMatrix, cmap: ConsolidationMap, top_k: int,
                  seed: Seed, baseline_pairs: int = BASELINE_PAIRS) -> VariantNoiseReport:
    """Within-group cosine stats on the most-consolidated groups.

    Groups need >= 2 variants; the report covers the top_k largest (count
    desc, canonical id asc). The baseline is the mean cosine over
    ``baseline_pairs`` seeded random pairs drawn across different groups.
    """
    groups = {cid: members for cid, members in cmap.groups().items() if len(members) >= 2}
    if not groups:
        raise ValueError("no canonical group has 2 or more variants")
    ranked = sorted(groups, key=lambda cid: (-len(groups[cid]), cid))[:top_k]

    member_rows = []
    starts = [0]
    for cid in ranked:
        member_rows.extend(matrix.rows_for(groups[cid]))
        starts.append(len(member_rows))
    unit = matrix.unit_rows(np.array(member_rows, dtype=np.int64))
    means, mins = kernels.group_pair_stats(unit, np.array(starts, dtype=np.int64))

    entries = tuple(
        GroupNoise(
            canonical_id=cid,
            name=cmap.catalog[cid].name,
            variant_count=len(groups[cid]),
            mean_cosine=float(means[i]),
            min_cosine=float(mins[i]),
            member_ids=tuple(groups[cid]),
        )
        for i, cid in enumerate(ranked)
    )

    # cross-group baseline over every mapped (non-removed) entity
    mapped = [(oid, cid) for oid, cid in sorted(cmap.assignments.items()) if cid is not None]
    all_ids = np.array([oid for oid, _ in mapped], dtype=np.int64)
    all_cids = np.array([cid for _, cid in mapped], dtype=np.int64)
    baseline = float("nan")
    drawn = 0
    if len(set(all_cids.tolist())) >= 2:
        unit_all = matrix.unit_rows(matrix.rows_for(all_ids))
        rng = seed.rng(0)
        sims = []
        while drawn < baseline_pairs:
            want = (baseline_pairs - drawn) * 2
            a = rng.integers(0, len(all_ids), size=want)
            b = rng.integers(0, len(all_ids), size=want)
            keep = all_cids[a] != all_cids[b]
            a, b = a[keep], b[keep]
            take = min(a.size, baseline_pairs - drawn)
            if take:
                sims.append(np.einsum("ij,ij->i", unit_all[a[:take]], unit_all[b[:take]]))
                drawn += take
        baseline = float(np.clip(np.concatenate(sims), -1.0, 1.0).mean())
    return VariantNoiseReport(
        entries=entries, baseline_mean=baseline, baseline_pairs=drawn,
        seed_master=seed.master, top_k=top_k,
    )


def back_project(cmap: ConsolidationMap) -> LabelSet:
    """Give every surviving original its canonical's categories as tags.

    Originals whose canonical has no categories stay untagged; removed
    originals are excluded entirely.
    """
    labels = {}
    for oid, cid in cmap.assignments.items():
        if cid is None:
            continue
        cats = cmap.catalog[cid].categories
        if cats:
            labels[oid] = frozenset(cats)
    return LabelSet(dimension="category", kind="tags", labels=labels)
