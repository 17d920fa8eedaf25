"""Workspace layout, input fingerprints, and report provenance.

A workspace is a directory:

    embeddings.tsv       raw vectors (source of truth)
    map.csv, catalog.csv consolidation map and canonical catalog
    overrides.json       curator action log, replayed on load
    labels/<dim>.json    one label file per dimension, canonical names
    cuisine_tags.json    cluster tags (optional)
    coords3d.csv         3-d layout per canonical id (optional)
    reports/             generated output, never fingerprinted

Every generated report embeds the sha256 of each input it consumed plus
the seed and parameters, and is written with sorted keys and no
timestamps so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DataFormatError, EmbeddingMatrix, LabelSet, load_embeddings, load_labels
from .culture import CuisineTags, load_cuisine_tags
from .curation import (
    ConsolidationMap,
    OverrideSet,
    apply_overrides,
    consolidate,
    load_consolidation_map,
    load_overrides,
)

REPORT_DIR_NAME = "reports"


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def workspace_manifest(directory) -> dict:
    """Relative path -> sha256 for every input file in the workspace.

    Generated reports and dotfiles are excluded; the mapping is sorted so
    its JSON form is stable.
    """
    directory = Path(directory)
    out = {}
    for path in sorted(directory.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(directory)
        if rel.parts[0] == REPORT_DIR_NAME or any(p.startswith(".") for p in rel.parts):
            continue
        out[rel.as_posix()] = sha256_file(path)
    return out


def manifest_digest(manifest: dict) -> str:
    canonical = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_report(path, body: dict, inputs: dict | None = None,
                 seed=None, params: dict | None = None) -> Path:
    """JSON report with provenance; byte-identical across identical runs."""
    doc = dict(body)
    doc["inputs"] = {
        name: {"path": str(p), "sha256": sha256_file(p)}
        for name, p in sorted((inputs or {}).items())
    }
    if seed is not None:
        doc["seed"] = seed.master if hasattr(seed, "master") else int(seed)
    if params is not None:
        doc["params"] = params
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def load_coords3d(path) -> dict:
    """id -> (x, y, z) from the layout CSV."""
    path = Path(path)
    out = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "x", "y", "z"]:
            raise DataFormatError(f"{path}: line 1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataFormatError(f"{path}: line {lineno}: expected 4 columns")
            try:
                eid = int(row[0])
                coords = (float(row[1]), float(row[2]), float(row[3]))
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: bad value") from None
            if eid in out:
                raise DataFormatError(f"{path}: line {lineno}: duplicate id {eid}")
            out[eid] = coords
    return out


@dataclass
class Workspace:
    """A loaded workspace: raw matrix, replayed map, consolidated matrix."""

    directory: Path
    raw: EmbeddingMatrix
    base_map: ConsolidationMap
    overrides: OverrideSet
    current_map: ConsolidationMap
    merged: EmbeddingMatrix
    audit: list = field(default_factory=list)

    @classmethod
    def load(cls, directory) -> "Workspace":
        directory = Path(directory)
        raw = load_embeddings(directory / "embeddings.tsv")
        catalog_path = directory / "catalog.csv"
        base_map = load_consolidation_map(
            directory / "map.csv",
            catalog_path if catalog_path.exists() else None,
        )
        overrides_path = directory / "overrides.json"
        overrides = load_overrides(overrides_path) if overrides_path.exists() else OverrideSet()
        current_map, audit = apply_overrides(base_map, overrides)
        merged = consolidate(raw, current_map)
        return cls(directory=directory, raw=raw, base_map=base_map,
                   overrides=overrides, current_map=current_map,
                   merged=merged, audit=list(audit))

    def label_dimensions(self) -> dict:
        """dimension -> LabelSet for every labels/<dim>.json file."""
        labels_dir = self.directory / "labels"
        out = {}
        if labels_dir.is_dir():
            for path in sorted(labels_dir.glob("*.json")):
                # lenient: overrides may have retired labeled names
                ls = load_labels(path, self.merged, strict=False)
                out[ls.dimension] = ls
        return out

    def cuisine(self) -> CuisineTags | None:
        path = self.directory / "cuisine_tags.json"
        if not path.exists():
            return None
        return load_cuisine_tags(path, self.merged, strict=False)

    def coords3d(self) -> dict | None:
        path = self.directory / "coords3d.csv"
        return load_coords3d(path) if path.exists() else None

    def manifest(self) -> dict:
        return workspace_manifest(self.directory)

    def report_dir(self) -> Path:
        return self.directory / REPORT_DIR_NAME
