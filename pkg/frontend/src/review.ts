import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { GroupRow, GroupsResponse, OverridesResponse } from "./types.js";
import {
  MergeDraft,
  displaySimilarity,
  draftToAction,
  emptyDraft,
  filterGroups,
  sortGroupsBySeverity,
  toggleSource,
  verbatim,
} from "./model.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** One group card. Stats render with the exact server value in data
 * attributes; the visible text is only a fixed-width presentation of the
 * same number, never a recomputation. */
export function renderGroupCard(group: GroupRow, opts: {
  expanded?: boolean;
  draft?: MergeDraft | null;
  candidates?: readonly GroupRow[];
} = {}): string {
  const flags = [
    group.vegan ? "vegan" : group.vegetarian ? "vegetarian" : "",
  ].filter(Boolean).join(" ");
  const members = group.member_names.map((m) => `<li>${esc(m)}</li>`).join("");
  const stats = `
    <span class="stat" title="worst member pair"
          data-field="min_pairwise" data-value="${verbatim(group.min_pairwise)}">
      min ${displaySimilarity(group.min_pairwise)}</span>
    <span class="stat" title="mean member pair"
          data-field="mean_pairwise" data-value="${verbatim(group.mean_pairwise)}">
      mean ${displaySimilarity(group.mean_pairwise)}</span>`;
  const draft = opts.draft ?? null;
  const draftPanel = draft === null ? "" : `
    <div class="merge-draft" data-target="${group.canonical_id}">
      <p>Merge into <strong>${esc(group.name)}</strong>:</p>
      ${(opts.candidates ?? [])
        .filter((c) => c.canonical_id !== group.canonical_id)
        .map((c) => `
        <label><input type="checkbox" class="merge-source"
          value="${c.canonical_id}"
          ${draft.sourceIds.includes(c.canonical_id) ? "checked" : ""}>
          ${esc(c.name)}</label>`).join("")}
      <button class="merge-submit" data-target="${group.canonical_id}"
        ${draft.sourceIds.length === 0 ? "disabled" : ""}>Merge selected</button>
    </div>`;
  return `
  <article class="group-card" data-id="${group.canonical_id}" data-n="${group.n}">
    <header>
      <h3>${esc(group.name)}</h3>
      <span class="badge">${group.n} member${group.n === 1 ? "" : "s"}</span>
      ${flags ? `<span class="badge flag">${flags}</span>` : ""}
      ${stats}
    </header>
    <p class="categories">${group.categories.map(esc).join(", ")}</p>
    ${opts.expanded ? `<ul class="members">${members}</ul>${draftPanel}` : ""}
  </article>`;
}

/** Severity-ordered, filtered queue as one HTML fragment. */
export function renderQueue(groups: readonly GroupRow[], query: string, opts: {
  expandedId?: number | null;
  draft?: MergeDraft | null;
} = {}): string {
  const visible = filterGroups(sortGroupsBySeverity(groups), query);
  if (visible.length === 0) {
    return `<p class="empty">No groups${query ? ` matching "${esc(query)}"` : ""}.</p>`;
  }
  return visible.map((g) => renderGroupCard(g, {
    expanded: g.canonical_id === opts.expandedId,
    draft: g.canonical_id === opts.expandedId ? opts.draft ?? null : null,
    candidates: visible,
  })).join("\n");
}

export interface ReviewState {
  groups: GroupsResponse | null;
  query: string;
  expandedId: number | null;
  draft: MergeDraft | null;
  /** Inline error from the last rejected submission, verbatim from the
   * service's detail field. */
  error: string | null;
  /** Audit lines returned by accepted submissions, newest last. */
  audit: string[];
}

/** Drives the review queue against the service. All state transitions go
 * through a refetch: the server's answer is the truth, there is no
 * optimistic patching of counts or stats. */
export class ReviewController {
  state: ReviewState = {
    groups: null,
    query: "",
    expandedId: null,
    draft: null,
    error: null,
    audit: [],
  };

  constructor(private readonly api: ApiClient) {}

  async refresh(): Promise<void> {
    this.state.groups = await this.api.groups();
  }

  setQuery(query: string): void {
    this.state.query = query;
  }

  toggleExpanded(canonicalId: number): void {
    if (this.state.expandedId === canonicalId) {
      this.state.expandedId = null;
      this.state.draft = null;
    } else {
      this.state.expandedId = canonicalId;
      this.state.draft = emptyDraft(canonicalId);
      this.state.error = null;
    }
  }

  toggleDraftSource(canonicalId: number): void {
    if (this.state.draft) {
      this.state.draft = toggleSource(this.state.draft, canonicalId);
    }
  }

  /** Submit the current merge draft. Resolves to the service response on
   * success (after the queue has been refetched); returns null when the
   * service rejected it, leaving the reason in state.error. */
  async submitDraft(): Promise<OverridesResponse | null> {
    const draft = this.state.draft;
    if (!draft || draft.sourceIds.length === 0) return null;
    try {
      const resp = await this.api.submitOverrides([draftToAction(draft)]);
      this.state.audit = [...this.state.audit, ...resp.audit];
      this.state.error = null;
      this.state.draft = null;
      this.state.expandedId = null;
      await this.refresh();
      return resp;
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        this.state.error = err.detail;
        return null;
      }
      throw err;
    }
  }

  render(): string {
    if (!this.state.groups) return `<p class="empty">Loading...</p>`;
    const error = this.state.error
      ? `<p class="error" role="alert">${this.state.error.replace(/&/g, "&amp;").replace(/</g, "&lt;")}</p>`
      : "";
    return error + renderQueue(this.state.groups.groups, this.state.query, {
      expandedId: this.state.expandedId,
      draft: this.state.draft,
    });
  }
}
