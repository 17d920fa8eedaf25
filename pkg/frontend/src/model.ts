import type { GroupRow } from "./types.js";

/** Severity-first review order: worst minimum pairwise similarity first,
 * because a low worst-pair is what marks a consolidation group as a likely
 * bad merge. Singletons report null stats and sink to the back. Ties fall
 * through mean, then size (bigger first), then name so the order is total
 * and stable across refetches. */
export function sortGroupsBySeverity(groups: readonly GroupRow[]): GroupRow[] {
  return [...groups].sort((a, b) => {
    const am = a.min_pairwise;
    const bm = b.min_pairwise;
    if (am === null && bm === null) return a.name.localeCompare(b.name);
    if (am === null) return 1;
    if (bm === null) return -1;
    if (am !== bm) return am - bm;
    const aMean = a.mean_pairwise ?? 0;
    const bMean = b.mean_pairwise ?? 0;
    if (aMean !== bMean) return aMean - bMean;
    if (a.n !== b.n) return b.n - a.n;
    return a.name.localeCompare(b.name);
  });
}

/** Case-insensitive substring filter over canonical and member names. */
export function filterGroups(groups: readonly GroupRow[], query: string): GroupRow[] {
  const q = query.trim().toLowerCase();
  if (!q) return [...groups];
  return groups.filter((g) =>
    g.name.toLowerCase().includes(q) ||
    g.member_names.some((m) => m.toLowerCase().includes(q)),
  );
}

/** The exact server value as a string, for data attributes and snapshots.
 * JSON numbers survive verbatim; null renders empty. */
export function verbatim(value: number | string | null): string {
  return value === null ? "" : String(value);
}

/** Short display form of a similarity; the verbatim value rides alongside
 * in a data attribute so nothing shown loses its provenance. */
export function displaySimilarity(value: number | null): string {
  return value === null ? "n/a" : value.toFixed(3);
}

export interface LegendEntry {
  label: string;
  color: string;
}

/** Qualitative palette, stable by index; wraps if a legend outgrows it. */
export const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759",
  "#b07aa1", "#76b7b2", "#edc948", "#9c755f",
  "#bab0ac", "#d37295",
] as const;

export function legendEntries(labels: readonly string[]): LegendEntry[] {
  return labels.map((label, i) => ({
    label,
    color: PALETTE[i % PALETTE.length] as string,
  }));
}

export function colorFor(label: string, legend: readonly LegendEntry[]): string {
  const hit = legend.find((e) => e.label === label);
  return hit ? hit.color : "#888888";
}

/** Draft of a merge the curator is assembling: other groups selected as
 * sources to fold into a target group. Pure data; the server validates. */
export interface MergeDraft {
  targetId: number;
  sourceIds: number[];
}

export function emptyDraft(targetId: number): MergeDraft {
  return { targetId, sourceIds: [] };
}

export function toggleSource(draft: MergeDraft, canonicalId: number): MergeDraft {
  if (canonicalId === draft.targetId) return draft;
  const has = draft.sourceIds.includes(canonicalId);
  return {
    targetId: draft.targetId,
    sourceIds: has
      ? draft.sourceIds.filter((id) => id !== canonicalId)
      : [...draft.sourceIds, canonicalId].sort((a, b) => a - b),
  };
}

export function draftToAction(draft: MergeDraft): { action: "merge"; sources: number[]; target: number } {
  return { action: "merge", sources: [...draft.sourceIds], target: draft.targetId };
}
