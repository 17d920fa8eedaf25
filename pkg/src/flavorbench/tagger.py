"""Bulk labeling of ingredient dimensions through a chat model.

A schema declares the fields a model must fill for each name in a batch,
the allowed values per field, and the prompt template. Responses come
back as a JSON array aligned with the batch; records that fail per-field
validation are rejected and retried in later rounds until every name is
covered or the round budget runs out.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import LabelSet
from .providers import ProviderError

FIELD_KINDS = ("ordinal", "binary", "categorical", "numeric_int", "tags")
DEFAULT_BATCH_SIZE = 50
DEFAULT_MAX_ROUNDS = 3

# sentinel for a model abstention on one field
NA = object()


class TaggingError(RuntimeError):
    pass


class CoverageError(TaggingError):
    """Raised when names remain unlabeled after all retry rounds."""

    def __init__(self, message: str, residual):
        super().__init__(message)
        self.residual = list(residual)


@dataclass(frozen=True)
class FieldSpec:
    """One dimension the model fills in.

    kind:
        ordinal       value from ``values`` (an ordered scale)
        binary        yes or no
        categorical   value from ``values``
        numeric_int   integer, optionally bounded by minimum/maximum
        tags          list of strings drawn from ``values``, may be empty
    """
    name: str
    kind: str
    values: tuple = ()
    minimum: int | None = None
    maximum: int | None = None
    units: str | None = None

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"field {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))
        if self.kind in ("ordinal", "categorical", "tags") and not self.values:
            raise ValueError(f"field {self.name!r}: kind {self.kind} needs values")
        if self.kind == "ordinal" and len(self.values) < 2:
            raise ValueError(f"field {self.name!r}: ordinal scale needs at least 2 levels")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"field {self.name!r}: duplicate values")
        if (self.minimum is not None and self.maximum is not None
                and self.minimum > self.maximum):
            raise ValueError(f"field {self.name!r}: minimum exceeds maximum")

    def validate(self, raw, na_values) -> tuple:
        """(value, None) on success, (None, reason) on failure.

        A raw value matching ``na_values`` comes back as the NA sentinel.
        """
        if isinstance(raw, str) and raw in na_values:
            return NA, None
        if self.kind in ("ordinal", "categorical"):
            if not isinstance(raw, str) or raw not in self.values:
                return None, f"{self.name}: {raw!r} not in {self.values}"
            return raw, None
        if self.kind == "binary":
            if raw not in ("yes", "no"):
                return None, f"{self.name}: {raw!r} is not yes/no"
            return raw, None
        if self.kind == "numeric_int":
            if isinstance(raw, bool) or not isinstance(raw, int):
                if isinstance(raw, float) and raw.is_integer():
                    raw = int(raw)
                else:
                    return None, f"{self.name}: {raw!r} is not an integer"
            if self.minimum is not None and raw < self.minimum:
                return None, f"{self.name}: {raw} below minimum {self.minimum}"
            if self.maximum is not None and raw > self.maximum:
                return None, f"{self.name}: {raw} above maximum {self.maximum}"
            return raw, None
        # tags
        if not isinstance(raw, list):
            return None, f"{self.name}: {raw!r} is not a list"
        bad = [v for v in raw if not isinstance(v, str) or v not in self.values]
        if bad:
            return None, f"{self.name}: unknown tags {bad!r}"
        return frozenset(raw), None


@dataclass(frozen=True)
class DimensionSchema:
    name: str
    prompt: str
    fields: tuple
    batch_size: int = DEFAULT_BATCH_SIZE
    na_values: tuple = ("N/A",)

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "na_values", tuple(self.na_values))
        if not self.fields:
            raise ValueError(f"schema {self.name!r}: no fields")
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValueError(f"schema {self.name!r}: duplicate field names")
        if "{batch}" not in self.prompt:
            raise ValueError(f"schema {self.name!r}: prompt lacks the {{batch}} placeholder")
        if self.batch_size < 1:
            raise ValueError(f"schema {self.name!r}: batch_size must be positive")

    def field_by_name(self, name: str) -> FieldSpec:
        for fs in self.fields:
            if fs.name == name:
                return fs
        raise KeyError(name)


def _schema_from_doc(doc: dict, origin: str) -> DimensionSchema:
    try:
        fields = tuple(
            FieldSpec(
                name=f["name"], kind=f["kind"],
                values=tuple(f.get("values", ())),
                minimum=f.get("minimum"), maximum=f.get("maximum"),
                units=f.get("units"),
            )
            for f in doc["fields"]
        )
        return DimensionSchema(
            name=doc["name"], prompt=doc["prompt"], fields=fields,
            batch_size=doc.get("batch_size", DEFAULT_BATCH_SIZE),
            na_values=tuple(doc.get("na_values", ("N/A",))),
        )
    except KeyError as exc:
        raise ValueError(f"{origin}: missing schema key {exc}") from None


def load_schema(path) -> DimensionSchema:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return _schema_from_doc(doc, str(path))


def packaged_schema(name: str) -> DimensionSchema:
    ref = resources.files("flavorbench.schemas").joinpath(f"{name}.json")
    try:
        with ref.open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise KeyError(f"no packaged schema named {name!r}; "
                       f"available: {packaged_schema_names()}") from None
    return _schema_from_doc(doc, f"packaged:{name}")


def packaged_schema_names() -> list:
    root = resources.files("flavorbench.schemas")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def render_prompt(schema: DimensionSchema, names) -> str:
    # literal braces in templates stay untouched, so no str.format here
    return schema.prompt.replace("{batch}", json.dumps(list(names)))


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


def _strip_fences(text: str) -> str:
    m = _FENCE_RE.match(text.strip())
    return m.group(1) if m else text


def tag_batch(schema: DimensionSchema, names, client) -> tuple:
    """One round trip for one batch. Returns (records, rejects).

    records maps name -> {field: validated value or NA sentinel};
    rejects is a list of (name, reason). A response that is not a JSON
    array of the batch's length rejects the whole batch; a response that
    is not JSON at all raises TaggingError.
    """
    names = list(names)
    raw = client.complete(render_prompt(schema, names))
    try:
        doc = json.loads(_strip_fences(raw))
    except json.JSONDecodeError as exc:
        raise TaggingError(
            f"schema {schema.name}: unparseable model response ({exc}); "
            f"starts {raw[:80]!r}"
        ) from None
    if not isinstance(doc, list) or len(doc) != len(names):
        got = len(doc) if isinstance(doc, list) else type(doc).__name__
        reason = f"batch response was {got}, expected array of {len(names)}"
        return {}, [(name, reason) for name in names]
    records = {}
    rejects = []
    for name, item in zip(names, doc):
        if not isinstance(item, dict):
            rejects.append((name, f"record is {type(item).__name__}, not an object"))
            continue
        if "name" in item and item["name"] != name:
            rejects.append((name, f"record name {item['name']!r} does not match"))
            continue
        record = {}
        reason = None
        for fs in schema.fields:
            if fs.name not in item:
                reason = f"missing field {fs.name}"
                break
            value, err = fs.validate(item[fs.name], schema.na_values)
            if err is not None:
                reason = err
                break
            record[fs.name] = value
        if reason is None:
            records[name] = record
        else:
            rejects.append((name, reason))
    return records, rejects


@dataclass
class TagRun:
    schema: DimensionSchema
    records: dict
    attempts: list = field(default_factory=list)

    def label_sets(self, matrix) -> dict:
        """One LabelSet per schema field, ids resolved via the matrix.

        NA records are simply absent from that field's labels.
        """
        out = {}
        for fs in self.schema.fields:
            labels = {}
            for name, record in self.records.items():
                value = record[fs.name]
                if value is NA:
                    continue
                eid = matrix.name_to_id.get(name)
                if eid is None:
                    raise KeyError(f"labeled name {name!r} is not in the matrix")
                labels[eid] = float(value) if fs.kind == "numeric_int" else value
            kind = {"numeric_int": "numeric"}.get(fs.kind, fs.kind)
            out[fs.name] = LabelSet(
                dimension=fs.name, kind=kind, labels=labels,
                scale=fs.values if fs.kind == "ordinal" else None,
                units=fs.units,
            )
        return out


def tag_to_coverage(names, schema: DimensionSchema, client,
                    max_rounds: int = DEFAULT_MAX_ROUNDS) -> TagRun:
    """Label every name, retrying rejects, or raise CoverageError.

    Each round re-batches only the names still missing. The returned
    run's ``attempts`` lists per-round request/reject counts.
    """
    names = list(names)
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate names: {dupes}")
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    records: dict = {}
    attempts: list = []
    residual = names
    for round_no in range(1, max_rounds + 1):
        if not residual:
            break
        round_rejects = []
        for start in range(0, len(residual), schema.batch_size):
            chunk = residual[start:start + schema.batch_size]
            got, rejects = tag_batch(schema, chunk, client)
            records.update(got)
            round_rejects.extend(rejects)
        attempts.append({
            "round": round_no,
            "requested": len(residual),
            "rejected": [{"name": n, "reason": r} for n, r in round_rejects],
        })
        residual = [n for n, _ in round_rejects]
    if residual:
        raise CoverageError(
            f"schema {schema.name}: {len(residual)} of {len(names)} names "
            f"unlabeled after {max_rounds} rounds: {residual[:5]}",
            residual,
        )
    return TagRun(schema=schema, records=records, attempts=attempts)
