import { describe, expect, it } from "vitest";
import { renderGroupCard, renderQueue } from "../src/review.js";
import type { GroupsResponse } from "../src/types.js";
import { fixture } from "./helpers.js";

const groupsFixture = fixture<GroupsResponse>("groups");

/** Pull every stat a card rendered: data-value carries the verbatim
 * service value, the visible text is its three-decimal presentation. */
function extractStats(cardHtml: string): Record<string, { raw: string; shown: string }> {
  const out: Record<string, { raw: string; shown: string }> = {};
  const re = /data-field="([a-z_]+)" data-value="([^"]*)">\s*(?:min|mean) ([^<]+)</g;
  for (const m of cardHtml.matchAll(re)) {
    out[m[1]!] = { raw: m[2]!, shown: m[3]!.trim() };
  }
  return out;
}

describe("rendered stats match the service JSON exactly", () => {
  it("every group card carries its service values verbatim", () => {
    for (const group of groupsFixture.groups) {
      const stats = extractStats(renderGroupCard(group));
      // the raw attribute is the untouched JSON value, digit for digit
      expect(stats["min_pairwise"]!.raw).toBe(
        group.min_pairwise === null ? "" : String(group.min_pairwise));
      expect(stats["mean_pairwise"]!.raw).toBe(
        group.mean_pairwise === null ? "" : String(group.mean_pairwise));
      // the visible text is only a formatting of that same value
      expect(stats["min_pairwise"]!.shown).toBe(
        group.min_pairwise === null ? "n/a" : group.min_pairwise.toFixed(3));
      expect(stats["mean_pairwise"]!.shown).toBe(
        group.mean_pairwise === null ? "n/a" : group.mean_pairwise.toFixed(3));
    }
  });

  it("member counts and names render from the payload untouched", () => {
    for (const group of groupsFixture.groups) {
      const html = renderGroupCard(group, { expanded: true });
      expect(html).toContain(`data-n="${group.n}"`);
      for (const member of group.member_names) {
        expect(html).toContain(`<li>${member}</li>`);
      }
    }
  });

  it("the full queue renders exactly the fixture's stat tuples", () => {
    const html = renderQueue(groupsFixture.groups, "");
    const rendered = new Set(
      [...html.matchAll(/data-field="min_pairwise" data-value="([^"]*)"/g)]
        .map((m) => m[1]!),
    );
    const expected = new Set(
      groupsFixture.groups.map((g) =>
        g.min_pairwise === null ? "" : String(g.min_pairwise)),
    );
    expect(rendered).toEqual(expected);
  });
});
