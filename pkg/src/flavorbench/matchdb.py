"""Three-layer matching of ingredient names to measurement-database entries.

Layer 1 (rules) scores candidates against an inverted index of entry
descriptions; layer 2 (text embeddings) proposes semantic candidates for
names the rules could not place; layer 3 (LLM validation) accepts an
embedding candidate only when the model echoes its description verbatim.
Later layers only ever see names the earlier layers left unmatched.

Rule scores:
    1000                exact: name equals the description or a segment
     900                equal after removing processing words
     800                equal after stemming
     700                a consolidation-map variant of the name is exact
    600 * len ratio     substring containment (shorter/longer)
    500 * jaccard       word overlap (skipped when no word is shared)

Equal scores are broken by preparation state (raw best), then entry id.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import DataFormatError, EmbeddingMatrix, LabelSet
from .curation import ConsolidationMap
from .providers import ProviderError

RULE_LAYER = "rule"
EMBED_LAYER = "embed"
LLM_LAYER = "llm"

EMBED_THRESHOLD = 0.80
EMBED_TOP_N = 5
DEFAULT_MIN_RULE_SCORE = 500.0

# preparation states, best first; unlisted/absent ranks below all of these
PREP_STATES = (
    "raw", "fresh", "whole", "ground", "dried", "boiled", "roasted",
    "baked", "cooked", "canned", "frozen",
)
UNRANKED_PREP = len(PREP_STATES)

_WORD_RE = re.compile(r"[a-z0-9]+")


def _package_json(name: str):
    with resources.files("flavorbench.matchdata").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def default_processing_words() -> frozenset:
    return frozenset(_package_json("processing_words.json"))


def default_synonyms() -> dict:
    return dict(_package_json("synonyms.json"))


def validation_prompt_template() -> str:
    ref = resources.files("flavorbench.matchdata").joinpath("validate_prompt.txt")
    return ref.read_text(encoding="utf-8")


def normalize_text(text: str) -> str:
    """Lowercase, underscores to spaces, strip punctuation, collapse runs."""
    return " ".join(_WORD_RE.findall(text.lower().replace("_", " ")))


def stem_word(word: str) -> str:
    """Light suffix stripping, enough to merge plural/participle variants."""
    for suffix in ("ies", "es", "ed", "ing", "s"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            stripped = word[: -len(suffix)]
            if suffix == "ies":
                return stripped + "y"
            return stripped
    return word


def stem_phrase(text: str) -> str:
    return " ".join(stem_word(w) for w in text.split())


def prep_rank(description_norm: str) -> int:
    """Best (lowest) preparation rank among the description's words."""
    words = set(description_norm.split())
    ranks = [i for i, state in enumerate(PREP_STATES) if state in words]
    return min(ranks) if ranks else UNRANKED_PREP


@dataclass(frozen=True)
class DbEntry:
    entry_id: str
    description: str
    measurements: dict = field(default_factory=dict)   # nutrient -> (amount, units)

    def __post_init__(self):
        object.__setattr__(
            self, "measurements",
            {str(k): (float(v[0]), str(v[1])) for k, v in self.measurements.items()},
        )


def load_db_entries(path) -> list[DbEntry]:
    """Long-form CSV: entry_id,description,nutrient,amount,units.

    Rows with an empty nutrient column register the entry without any
    measurement. Descriptions must agree across an entry's rows.
    """
    path = Path(path)
    descriptions: dict[str, str] = {}
    measurements: dict[str, dict] = {}
    order: list[str] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["entry_id", "description", "nutrient", "amount", "units"]:
            raise DataFormatError(f"{path}: line 1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFormatError(f"{path}: line {lineno}: expected 5 columns, got {len(row)}")
            entry_id, description, nutrient, amount, units = row
            if not entry_id:
                raise DataFormatError(f"{path}: line {lineno}: empty entry_id")
            if entry_id in descriptions:
                if descriptions[entry_id] != description:
                    raise DataFormatError(
                        f"{path}: line {lineno}: entry {entry_id} has conflicting descriptions"
                    )
            else:
                descriptions[entry_id] = description
                measurements[entry_id] = {}
                order.append(entry_id)
            if nutrient:
                try:
                    value = float(amount)
                except ValueError:
                    raise DataFormatError(f"{path}: line {lineno}: bad amount {amount!r}") from None
                if nutrient in measurements[entry_id]:
                    raise DataFormatError(
                        f"{path}: line {lineno}: duplicate nutrient {nutrient!r} for entry {entry_id}"
                    )
                measurements[entry_id][nutrient] = (value, units)
    return [DbEntry(eid, descriptions[eid], measurements[eid]) for eid in order]


@dataclass
class MatchIndex:
    entries: list
    by_key: dict                       # normalized key -> set of entry positions
    segments: list                     # per entry: normalized segments (full first)
    prep_ranks: list
    warnings: list = field(default_factory=list)


def build_index(entries: list) -> MatchIndex:
    """Inverted index over descriptions, their comma segments, their words,
    and stemmed forms of all three."""
    ids = [e.entry_id for e in entries]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate entry ids: {dupes}")
    by_key: dict[str, set] = {}
    segments: list[list[str]] = []
    prep_ranks: list[int] = []
    warnings: list[str] = []

    def add(key: str, pos: int):
        if key:
            by_key.setdefault(key, set()).add(pos)

    for pos, entry in enumerate(entries):
        full = normalize_text(entry.description)
        if not full:
            warnings.append(f"entry {entry.entry_id}: empty description")
            segments.append([])
            prep_ranks.append(UNRANKED_PREP)
            continue
        segs = [full] + [
            s for s in (normalize_text(p) for p in entry.description.split(",")) if s
        ]
        seen = set()
        segs = [s for s in segs if not (s in seen or seen.add(s))]
        segments.append(segs)
        prep_ranks.append(prep_rank(full))
        for seg in segs:
            add(seg, pos)
            add(stem_phrase(seg), pos)
            for word in seg.split():
                add(word, pos)
                add(stem_word(word), pos)
    return MatchIndex(entries=list(entries), by_key=by_key, segments=segments,
                      prep_ranks=prep_ranks, warnings=warnings)


@dataclass(frozen=True)
class MatchCandidate:
    entry_id: str
    score: float
    layer: str
    rationale: str = ""
    prep_rank: int = UNRANKED_PREP


def _strip_processing(text: str, processing: frozenset) -> str:
    return " ".join(w for w in text.split() if w not in processing)


def _variant_names(name_norm: str, cmap: ConsolidationMap | None) -> list[str]:
    """Alternative names via the consolidation map: the originals of a
    canonical with this name, and the canonical of an original with it."""
    if cmap is None:
        return []
    out = []
    for entry in cmap.catalog.values():
        if normalize_text(entry.name) == name_norm:
            for oid, cid in cmap.assignments.items():
                if cid == entry.canonical_id:
                    alt = normalize_text(cmap.original_names[oid])
                    if alt and alt != name_norm:
                        out.append(alt)
    for oid, cid in cmap.assignments.items():
        if cid is not None and normalize_text(cmap.original_names[oid]) == name_norm:
            alt = normalize_text(cmap.catalog[cid].name)
            if alt and alt != name_norm:
                out.append(alt)
    return sorted(set(out))


def rule_match(name: str, index: MatchIndex, synonyms: dict | None = None,
               cmap: ConsolidationMap | None = None,
               processing: frozenset | None = None) -> list:
    """Score every plausibly related entry; best first.

    The synonym table rewrites the whole normalized name before lookup.
    Returns MatchCandidate rows sorted by (score desc, preparation rank,
    entry id); empty when no entry shares even one word.
    """
    if synonyms is None:
        synonyms = default_synonyms()
    if processing is None:
        processing = default_processing_words()
    name_norm = normalize_text(name)
    if not name_norm:
        raise ValueError(f"name {name!r} normalizes to nothing")
    name_norm = normalize_text(synonyms.get(name_norm, name_norm))
    name_words = set(name_norm.split())
    name_stem = stem_phrase(name_norm)
    name_stripped = _strip_processing(name_norm, processing)
    variants = _variant_names(name_norm, cmap)

    lookup_keys = {name_norm, name_stem} | name_words | {stem_word(w) for w in name_words}
    lookup_keys.update(v for v in variants)
    for v in variants:
        lookup_keys.update(v.split())
    positions = set()
    for key in lookup_keys:
        positions |= index.by_key.get(key, set())

    results = []
    for pos in sorted(positions):
        entry = index.entries[pos]
        segs = index.segments[pos]
        if not segs:
            continue
        full = segs[0]
        score = 0.0
        rationale = ""
        full_stripped = _strip_processing(full, processing)
        if any(name_norm == seg for seg in segs):
            score, rationale = 1000.0, "exact"
        elif name_stripped and full_stripped and name_stripped == full_stripped:
            # whole-description comparison only; per-segment stripping would
            # equate "ground beef" with the bare "beef" segment of every entry
            score, rationale = 900.0, "processing_removed"
        elif any(name_stem == stem_phrase(seg) for seg in segs):
            score, rationale = 800.0, "stemmed"
        elif variants and any(v == seg or stem_phrase(v) == stem_phrase(seg)
                              for v in variants for seg in segs):
            score, rationale = 700.0, "consolidation_variant"
        else:
            best_sub = 0.0
            for seg in segs:
                shorter, longer = sorted((name_norm, seg), key=len)
                if len(shorter) >= 3 and shorter in longer:
                    best_sub = max(best_sub, 600.0 * len(shorter) / len(longer))
            full_words = set(full.split())
            shared = name_words & full_words
            jaccard = len(shared) / len(name_words | full_words) if shared else 0.0
            score = max(best_sub, 500.0 * jaccard)
            rationale = "substring" if score == best_sub and best_sub > 0 else "word_overlap"
        if score > 0.0:
            results.append(MatchCandidate(
                entry_id=entry.entry_id, score=score, layer=RULE_LAYER,
                rationale=rationale, prep_rank=index.prep_ranks[pos],
            ))
    results.sort(key=lambda c: (-c.score, c.prep_rank, c.entry_id))
    return results


def embed_match(name: str, provider, entries: list, top_n: int = EMBED_TOP_N,
                threshold: float = EMBED_THRESHOLD) -> list:
    """Cosine candidates from a text-vector provider, best first.

    Keeps at most ``top_n`` entries at or above ``threshold``. Provider
    failures are re-raised naming the ingredient.
    """
    try:
        name_vec = np.asarray(provider.embed(normalize_text(name)), dtype=np.float64)
        entry_vecs = [
            np.asarray(provider.embed(entry.description), dtype=np.float64)
            for entry in entries
        ]
    except ProviderError as exc:
        raise ProviderError(f"embedding provider failed for {name!r}: {exc}") from exc
    nn = float(np.linalg.norm(name_vec))
    if nn == 0.0:
        raise ValueError(f"provider returned a zero vector for {name!r}")
    scored = []
    for entry, vec in zip(entries, entry_vecs):
        ne = float(np.linalg.norm(vec))
        if ne == 0.0:
            continue
        cos = float(np.clip(name_vec @ vec / (nn * ne), -1.0, 1.0))
        if cos >= threshold:
            scored.append(MatchCandidate(entry_id=entry.entry_id, score=cos, layer=EMBED_LAYER))
    scored.sort(key=lambda c: (-c.score, c.entry_id))
    return scored[:top_n]


def llm_validate(name: str, candidates: list, entries_by_id: dict, client,
                 template: str | None = None):
    """Ask the model to pick among candidate descriptions.

    Accepts only a verbatim echo of one candidate description, or the
    literal string no_match. Anything else leaves the name unmatched and
    adds a warning. Returns (entry_id or None, warnings).
    """
    if not candidates:
        raise ValueError("llm_validate needs a non-empty candidate list")
    if template is None:
        template = validation_prompt_template()
    descriptions = [entries_by_id[c.entry_id].description for c in candidates]
    prompt = template.replace("{name}", name).replace(
        "{candidates}", "\n".join(f"- {d}" for d in descriptions)
    )
    raw = client.complete(prompt)
    text = raw.strip()
    try:
        doc = json.loads(text)
        best = str(doc.get("best_match", "")).strip() if isinstance(doc, dict) else text
    except json.JSONDecodeError:
        best = text
    if best == "no_match":
        return None, []
    for cand, desc in zip(candidates, descriptions):
        if best == desc:
            return cand.entry_id, []
    return None, [f"{name}: response did not echo a candidate or no_match"]


@dataclass(frozen=True)
class MatchRow:
    ingredient: str
    entry_id: str | None
    layer: str | None
    score: float | None


@dataclass
class MatchTable:
    rows: list                        # MatchRow, input order
    warnings: list = field(default_factory=list)

    def matched(self) -> dict:
        return {r.ingredient: r.entry_id for r in self.rows if r.entry_id is not None}

    @property
    def match_rate(self) -> float:
        return sum(r.entry_id is not None for r in self.rows) / len(self.rows) if self.rows else 0.0

    def save_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["ingredient", "entry_id", "layer", "score"])
            for r in self.rows:
                if r.entry_id is None:
                    writer.writerow([r.ingredient, "", "", ""])
                else:
                    writer.writerow([r.ingredient, r.entry_id, r.layer, f"{r.score:.6f}"])


def load_match_table(path) -> MatchTable:
    path = Path(path)
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["ingredient", "entry_id", "layer", "score"]:
            raise DataFormatError(f"{path}: line 1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataFormatError(f"{path}: line {lineno}: expected 4 columns")
            if row[1] == "":
                rows.append(MatchRow(row[0], None, None, None))
            else:
                rows.append(MatchRow(row[0], row[1], row[2], float(row[3])))
    return MatchTable(rows=rows)


def match_pipeline(names: list, entries: list, synonyms: dict | None = None,
                   cmap: ConsolidationMap | None = None,
                   embed_provider=None, llm_client=None,
                   min_rule_score: float = DEFAULT_MIN_RULE_SCORE) -> MatchTable:
    """Run the three layers in order; each name settles at the first layer
    that accepts it.

    Rule matches are accepted at or above ``min_rule_score``. Embedding
    candidates require LLM validation; without an LLM client they are
    reported as warnings and the name stays unmatched.
    """
    index = build_index(entries)
    entries_by_id = {e.entry_id: e for e in entries}
    rows: list[MatchRow] = []
    warnings = list(index.warnings)
    for name in names:
        candidates = rule_match(name, index, synonyms=synonyms, cmap=cmap)
        if candidates and candidates[0].score >= min_rule_score:
            top = candidates[0]
            rows.append(MatchRow(name, top.entry_id, RULE_LAYER, top.score))
            continue
        if embed_provider is None:
            rows.append(MatchRow(name, None, None, None))
            continue
        embed_candidates = embed_match(name, embed_provider, entries)
        if not embed_candidates:
            rows.append(MatchRow(name, None, None, None))
            continue
        if llm_client is None:
            warnings.append(f"{name}: embedding candidates found but no LLM client to validate")
            rows.append(MatchRow(name, None, None, None))
            continue
        entry_id, val_warnings = llm_validate(name, embed_candidates, entries_by_id, llm_client)
        warnings.extend(val_warnings)
        if entry_id is None:
            rows.append(MatchRow(name, None, None, None))
        else:
            score = next(c.score for c in embed_candidates if c.entry_id == entry_id)
            rows.append(MatchRow(name, entry_id, LLM_LAYER, score))
    return MatchTable(rows=rows, warnings=warnings)


def join_measurements(table: MatchTable, entries: list, nutrient,
                      matrix: EmbeddingMatrix, dimension: str | None = None) -> LabelSet:
    """Numeric labels for matched ingredients from entry measurements.

    ``nutrient`` may be a single name or a sequence of component names
    summed into a composite (an entry needs at least one component).
    Ingredient names are resolved to ids against ``matrix``; unmatched
    ingredients and entries without the nutrient are absent from the
    output. Errors if no matched entry carries the nutrient at all.
    """
    components = [nutrient] if isinstance(nutrient, str) else list(nutrient)
    if not components:
        raise ValueError("nutrient must name at least one component")
    entries_by_id = {e.entry_id: e for e in entries}
    labels = {}
    units = None
    for row in table.rows:
        if row.entry_id is None:
            continue
        entry = entries_by_id.get(row.entry_id)
        if entry is None:
            raise KeyError(f"match table references unknown entry {row.entry_id}")
        present = [c for c in components if c in entry.measurements]
        if not present:
            continue
        total = sum(entry.measurements[c][0] for c in present)
        part_units = {entry.measurements[c][1] for c in present}
        if len(part_units) > 1:
            raise ValueError(f"entry {entry.entry_id}: mixed units {sorted(part_units)}")
        (unit,) = part_units
        if units is None:
            units = unit
        elif unit != units:
            raise ValueError(
                f"entry {entry.entry_id}: units {unit!r} conflict with {units!r} seen earlier"
            )
        eid = matrix.name_to_id.get(row.ingredient)
        if eid is None:
            raise KeyError(f"ingredient {row.ingredient!r} not in matrix")
        labels[eid] = total
    if not labels:
        raise ValueError(f"no matched entry carries {components}")
    return LabelSet(
        dimension=dimension or "_plus_".join(components),
        kind="numeric", labels=labels, units=units,
    )
