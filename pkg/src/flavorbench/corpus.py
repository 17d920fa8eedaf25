"""Embedding corpus I/O and similarity primitives.

Core objects:
    EmbeddingMatrix  -- ids, names, and a dense float64 vector block
    LabelSet         -- one annotated dimension (ordinal/binary/numeric/...)
    PairTable        -- flat upper-triangle cosine table keyed by id pairs

File formats:
    embeddings  TSV with header ``id<TAB>name<TAB>v1..vD``; the dimension
                is read from the first data row. Names arrive normalized
                (lowercase, underscores for spaces).
    labels      JSON ``{dimension, kind, scale?, units?, labels: {name: value}}``,
                keyed by entity name, resolved against a matrix on load.
    pair table  CSV ``id_a,id_b,cosine`` with 9-digit fixed precision.

Vectors are stored exactly as given; no unit-norm assumption is made
anywhere. Cosine operations reject all-zero vectors at call time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels

LABEL_KINDS = ("ordinal", "binary", "numeric", "categorical", "tags")


class DataFormatError(ValueError):
    """Malformed input file; message carries the 1-based line number."""


def _normalized_name_ok(name: str) -> bool:
    return bool(name) and name == name.lower() and not any(c.isspace() for c in name)


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense embedding block with integer ids and unique normalized names."""

    ids: np.ndarray          # int64, shape (n,)
    names: tuple[str, ...]
    vectors: np.ndarray      # float64, shape (n, dim)

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int64)
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "names", tuple(self.names))
        n = ids.shape[0]
        if len(self.names) != n or vectors.shape[0] != n:
            raise ValueError("ids, names, and vectors must have equal length")
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if len(set(ids.tolist())) != n:
            raise ValueError("duplicate ids in embedding matrix")
        if len(set(self.names)) != n:
            raise ValueError("duplicate names in embedding matrix")
        if n and not np.isfinite(vectors).all():
            bad = self.ids[~np.isfinite(vectors).all(axis=1)]
            raise ValueError(f"non-finite vector components for ids {bad.tolist()}")
        ids.setflags(write=False)
        vectors.setflags(write=False)

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @cached_property
    def id_to_row(self) -> dict[int, int]:
        return {int(i): r for r, i in enumerate(self.ids)}

    @cached_property
    def name_to_id(self) -> dict[str, int]:
        return {nm: int(i) for nm, i in zip(self.names, self.ids)}

    def vector(self, entity_id: int) -> np.ndarray:
        try:
            return self.vectors[self.id_to_row[int(entity_id)]]
        except KeyError:
            raise KeyError(f"unknown entity id {entity_id}") from None

    def name(self, entity_id: int) -> str:
        return self.names[self.id_to_row[int(entity_id)]]

    def has_id(self, entity_id: int) -> bool:
        return int(entity_id) in self.id_to_row

    def rows_for(self, ids) -> np.ndarray:
        """Row indices for the given ids; KeyError on any unknown id."""
        mapping = self.id_to_row
        missing = [int(i) for i in ids if int(i) not in mapping]
        if missing:
            raise KeyError(f"ids not in matrix: {missing}")
        return np.array([mapping[int(i)] for i in ids], dtype=np.int64)

    def subset(self, ids) -> "EmbeddingMatrix":
        rows = self.rows_for(ids)
        return EmbeddingMatrix(
            ids=self.ids[rows],
            names=tuple(self.names[r] for r in rows),
            vectors=self.vectors[rows].copy(),
        )

    def unit_rows(self, rows=None) -> np.ndarray:
        """Unit-normalized copies of the selected rows.

        Raises ValueError naming the offending ids if any selected vector
        has zero norm.
        """
        vecs = self.vectors if rows is None else self.vectors[rows]
        sel_ids = self.ids if rows is None else self.ids[rows]
        norms = np.linalg.norm(vecs, axis=1)
        zero = norms == 0.0
        if zero.any():
            raise ValueError(
                f"zero-norm vectors not admitted to cosine operations: ids {sel_ids[zero].tolist()}"
            )
        return vecs / norms[:, None]

    def normalized(self) -> "EmbeddingMatrix":
        """Copy with every row scaled to unit norm."""
        return EmbeddingMatrix(self.ids.copy(), self.names, self.unit_rows())


def load_embeddings(path) -> EmbeddingMatrix:
    """Parse an embeddings TSV. Errors carry 1-based line numbers."""
    path = Path(path)
    ids: list[int] = []
    names: list[str] = []
    rows: list[np.ndarray] = []
    dim = None
    seen_ids: set[int] = set()
    seen_names: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise DataFormatError(f"{path}: line 1: empty or missing header")
        cols = header.rstrip("\n").split("\t")
        if cols[:2] != ["id", "name"]:
            raise DataFormatError(f"{path}: line 1: header must start with id<TAB>name")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3:
                raise DataFormatError(f"{path}: line {lineno}: expected id, name, and vector components")
            try:
                eid = int(parts[0])
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: id {parts[0]!r} is not an integer") from None
            name = parts[1]
            if not _normalized_name_ok(name):
                raise DataFormatError(
                    f"{path}: line {lineno}: name {name!r} is not normalized (lowercase, no whitespace)"
                )
            if eid in seen_ids:
                raise DataFormatError(f"{path}: line {lineno}: duplicate id {eid}")
            if name in seen_names:
                raise DataFormatError(f"{path}: line {lineno}: duplicate name {name!r}")
            try:
                vec = np.array([float(x) for x in parts[2:]], dtype=np.float64)
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: non-numeric vector component") from None
            if dim is None:
                dim = vec.shape[0]
                if dim == 0:
                    raise DataFormatError(f"{path}: line {lineno}: first data row has no vector components")
            elif vec.shape[0] != dim:
                raise DataFormatError(
                    f"{path}: line {lineno}: dimension mismatch (expected {dim}, got {vec.shape[0]})"
                )
            if not np.isfinite(vec).all():
                raise DataFormatError(f"{path}: line {lineno}: non-finite vector component")
            seen_ids.add(eid)
            seen_names.add(name)
            ids.append(eid)
            names.append(name)
            rows.append(vec)
    if dim is None:
        raise DataFormatError(f"{path}: no data rows")
    return EmbeddingMatrix(
        ids=np.array(ids, dtype=np.int64),
        names=tuple(names),
        vectors=np.vstack(rows),
    )


def save_embeddings(matrix: EmbeddingMatrix, path) -> None:
    """Write the TSV form with round-trip-safe float formatting."""
    path = Path(path)
    dim = matrix.dim
    with path.open("w", encoding="utf-8") as fh:
        fh.write("id\tname\t" + "\t".join(f"v{i + 1}" for i in range(dim)) + "\n")
        for eid, name, vec in zip(matrix.ids, matrix.names, matrix.vectors):
            fh.write(f"{int(eid)}\t{name}\t" + "\t".join(repr(float(x)) for x in vec) + "\n")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(min(1.0, max(-1.0, float(a @ b) / (na * nb))))


@dataclass(frozen=True)
class PairTable:
    """All unordered entity pairs with their cosines.

    Pairs are ordered lexicographically by (id_a, id_b) with id_a < id_b;
    ``cosines`` is the matching flat array.
    """

    ids: np.ndarray          # int64, ascending; the row universe
    cosines: np.ndarray      # float64, len C(n, 2)

    def __len__(self) -> int:
        return self.cosines.shape[0]

    def iter_rows(self):
        n = self.ids.shape[0]
        pos = 0
        for i in range(n):
            for j in range(i + 1, n):
                yield int(self.ids[i]), int(self.ids[j]), float(self.cosines[pos])
                pos += 1

    def value(self, id_a: int, id_b: int) -> float:
        if id_a == id_b:
            raise KeyError("pair table holds distinct pairs only")
        a, b = sorted((int(id_a), int(id_b)))
        n = self.ids.shape[0]
        i = int(np.searchsorted(self.ids, a))
        j = int(np.searchsorted(self.ids, b))
        if i >= n or j >= n or self.ids[i] != a or self.ids[j] != b:
            raise KeyError(f"pair ({id_a}, {id_b}) not in table")
        pos = i * n - i * (i + 1) // 2 + (j - i - 1)
        return float(self.cosines[pos])

    def save_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("id_a,id_b,cosine\n")
            for ia, ib, c in self.iter_rows():
                fh.write(f"{ia},{ib},{c:.9f}\n")


def pairwise(matrix: EmbeddingMatrix) -> PairTable:
    """Cosine for every unordered pair, ordered by ascending ids.

    n entities yield exactly n*(n-1)/2 rows. Zero-norm vectors raise with
    the offending ids.
    """
    order = np.argsort(matrix.ids, kind="stable")
    unit = matrix.unit_rows(order)
    flat = kernels.pairwise_cosine_flat(unit)
    return PairTable(ids=matrix.ids[order].copy(), cosines=flat)


def _check_tags_value(value) -> frozenset:
    if isinstance(value, (set, frozenset, list, tuple)):
        out = frozenset(str(v) for v in value)
        if len(out) != len(list(value)):
            raise ValueError(f"duplicate tags in {value!r}")
        return out
    raise ValueError(f"tags value must be a collection of strings, got {value!r}")


@dataclass(frozen=True)
class LabelSet:
    """One annotated dimension over entity ids.

    kinds and value domains:
        ordinal      value in ``scale`` (ordered tuple of level names)
        binary       "yes" | "no"
        numeric      finite float (``units`` optional)
        categorical  arbitrary single string
        tags         frozenset of strings (may be empty)
    """

    dimension: str
    kind: str
    labels: dict = field(default_factory=dict)   # id -> value
    scale: tuple[str, ...] | None = None
    units: str | None = None

    def __post_init__(self):
        if self.kind not in LABEL_KINDS:
            raise ValueError(f"unknown label kind {self.kind!r}; expected one of {LABEL_KINDS}")
        if self.kind == "ordinal":
            if not self.scale or len(self.scale) < 2:
                raise ValueError("ordinal labels need a scale with at least 2 levels")
            if len(set(self.scale)) != len(self.scale):
                raise ValueError("ordinal scale levels must be unique")
        object.__setattr__(self, "scale", tuple(self.scale) if self.scale else None)
        checked = {}
        for key, value in self.labels.items():
            eid = int(key)
            if self.kind == "ordinal":
                if value not in self.scale:
                    raise ValueError(f"id {eid}: value {value!r} not in scale {self.scale}")
            elif self.kind == "binary":
                if value not in ("yes", "no"):
                    raise ValueError(f"id {eid}: binary value must be 'yes' or 'no', got {value!r}")
            elif self.kind == "numeric":
                value = float(value)
                if not math.isfinite(value):
                    raise ValueError(f"id {eid}: numeric value must be finite")
            elif self.kind == "categorical":
                value = str(value)
            elif self.kind == "tags":
                value = _check_tags_value(value)
            checked[eid] = value
        object.__setattr__(self, "labels", checked)

    def __len__(self) -> int:
        return len(self.labels)

    def ids(self) -> list[int]:
        return sorted(self.labels)

    def rank_of(self, value) -> float:
        """Numeric rank used for correlation: scale index, yes/no as 1/0,
        or the numeric value itself."""
        if self.kind == "ordinal":
            return float(self.scale.index(value))
        if self.kind == "binary":
            return 1.0 if value == "yes" else 0.0
        if self.kind == "numeric":
            return float(value)
        raise ValueError(f"{self.kind} labels have no scalar rank")

    def log10(self, drop_nonpositive: bool = True) -> "LabelSet":
        """Numeric-only transform: log10 of values; nonpositive values are
        dropped (or rejected when drop_nonpositive=False)."""
        if self.kind != "numeric":
            raise ValueError("log10 transform applies to numeric labels only")
        out = {}
        for eid, value in self.labels.items():
            if value <= 0:
                if drop_nonpositive:
                    continue
                raise ValueError(f"id {eid}: log10 undefined for value {value}")
            out[eid] = math.log10(value)
        return LabelSet(
            dimension=f"log10_{self.dimension}",
            kind="numeric",
            labels=out,
            units=f"log10({self.units})" if self.units else None,
        )


def load_labels(path, matrix: EmbeddingMatrix, strict: bool = True) -> LabelSet:
    """Read a labels JSON document and resolve its names against ``matrix``.

    ``strict=False`` drops names the matrix no longer carries instead of
    erroring; curation overrides legitimately retire canonical names while
    the label files stay keyed to the base catalog.
    """
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    for req in ("dimension", "kind", "labels"):
        if req not in doc:
            raise DataFormatError(f"{path}: missing required field {req!r}")
    unknown = [nm for nm in doc["labels"] if nm not in matrix.name_to_id]
    if unknown and strict:
        raise DataFormatError(f"{path}: names not present in matrix: {sorted(unknown)}")
    labels = {matrix.name_to_id[nm]: v for nm, v in doc["labels"].items()
              if nm in matrix.name_to_id}
    return LabelSet(
        dimension=doc["dimension"],
        kind=doc["kind"],
        labels=labels,
        scale=tuple(doc["scale"]) if doc.get("scale") else None,
        units=doc.get("units"),
    )


def save_labels(label_set: LabelSet, path, matrix: EmbeddingMatrix) -> None:
    doc = {
        "dimension": label_set.dimension,
        "kind": label_set.kind,
        "labels": {
            matrix.name(eid): (sorted(v) if isinstance(v, frozenset) else v)
            for eid, v in sorted(label_set.labels.items())
        },
    }
    if label_set.scale:
        doc["scale"] = list(label_set.scale)
    if label_set.units:
        doc["units"] = label_set.units
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
