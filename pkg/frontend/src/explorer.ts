import type { Projection3d, ProjectionPoint } from "./types.js";
import { LegendEntry, colorFor, legendEntries } from "./model.js";

/** What to color the dots by. "axis" uses the server's signed position
 * along the pole axis; the others use server-provided labels. */
export type ColorBy = "cuisine" | "profile" | "category" | "axis";

export interface SceneOptions {
  colorBy: ColorBy;
  /** Cuisine to spotlight; everything not tagged with it dims. */
  highlight?: string | null;
  yaw: number;
  pitch: number;
  width: number;
  height: number;
  /** canonical_id -> categories, joined from /api/ingredients when
   * coloring by category. */
  categoriesById?: ReadonlyMap<number, readonly string[]>;
}

export interface Dot {
  id: number;
  name: string;
  /** Screen position. */
  x: number;
  y: number;
  /** Rotated depth, used for draw order and size. */
  depth: number;
  radius: number;
  color: string;
  dimmed: boolean;
  profile: string | null;
  cuisines: string[];
}

export interface Scene {
  dots: Dot[];
  /** Pole axis endpoints in screen space, low to high, or null when the
   * service reported no pole. */
  axis: { x1: number; y1: number; x2: number; y2: number;
          lowLabel: string; highLabel: string } | null;
  /** Per-cuisine centroid markers (display aids over server coords). */
  centroids: { label: string; x: number; y: number; color: string }[];
  legend: LegendEntry[];
}

type Vec3 = readonly [number, number, number];

export function rotate(v: Vec3, yaw: number, pitch: number): Vec3 {
  const cy = Math.cos(yaw), sy = Math.sin(yaw);
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  // yaw about the vertical axis, then pitch about the horizontal
  const x1 = cy * v[0] + sy * v[2];
  const z1 = -sy * v[0] + cy * v[2];
  const y2 = cp * v[1] - sp * z1;
  const z2 = sp * v[1] + cp * z1;
  return [x1, y2, z2];
}

interface Frame {
  scale: number;
  cx: number;
  cy: number;
}

function fitFrame(points: readonly ProjectionPoint[], width: number, height: number): Frame {
  let extent = 0;
  for (const p of points) {
    extent = Math.max(extent, Math.abs(p.x), Math.abs(p.y), Math.abs(p.z));
  }
  if (extent === 0) extent = 1;
  // rotated coords stay inside a sphere of radius sqrt(3)*extent
  const scale = (Math.min(width, height) / 2 - 24) / (extent * Math.sqrt(3));
  return { scale, cx: width / 2, cy: height / 2 };
}

function toScreen(v: Vec3, f: Frame): { x: number; y: number; depth: number } {
  return { x: f.cx + v[0] * f.scale, y: f.cy - v[1] * f.scale, depth: v[2] };
}

function sceneLegend(proj: Projection3d, opts: SceneOptions): LegendEntry[] {
  switch (opts.colorBy) {
    case "cuisine":
      return legendEntries(proj.legend);
    case "profile": {
      const seen: string[] = [];
      for (const p of proj.points) {
        if (p.profile !== null && !seen.includes(p.profile)) seen.push(p.profile);
      }
      return legendEntries(seen.sort());
    }
    case "category": {
      const seen: string[] = [];
      for (const p of proj.points) {
        const cat = opts.categoriesById?.get(p.id)?.[0];
        if (cat !== undefined && !seen.includes(cat)) seen.push(cat);
      }
      return legendEntries(seen.sort());
    }
    case "axis":
      return [];
  }
}

/** Blue-to-red ramp for the along-axis coloring. */
export function axisRamp(t: number): string {
  const clamped = Math.max(0, Math.min(1, t));
  const r = Math.round(60 + 195 * clamped);
  const b = Math.round(255 - 195 * clamped);
  return `rgb(${r},80,${b})`;
}

function dotColor(p: ProjectionPoint, proj: Projection3d, opts: SceneOptions,
                  legend: readonly LegendEntry[]): string {
  switch (opts.colorBy) {
    case "cuisine": {
      const tag = p.cuisines[0];
      return tag === undefined ? "#555b63" : colorFor(tag, legend);
    }
    case "profile":
      return p.profile === null ? "#555b63" : colorFor(p.profile, legend);
    case "category": {
      const cat = opts.categoriesById?.get(p.id)?.[0];
      return cat === undefined ? "#555b63" : colorFor(cat, legend);
    }
    case "axis": {
      const pole = proj.pole;
      const t = pole?.along[String(p.id)];
      if (pole === null || t === undefined) return "#555b63";
      const values = Object.values(pole.along);
      const lo = Math.min(...values);
      const hi = Math.max(...values);
      return axisRamp(hi === lo ? 0.5 : (t - lo) / (hi - lo));
    }
  }
}

/** Assemble everything a renderer needs from one service payload. The
 * only arithmetic here is rotation and scaling of server coordinates for
 * display; no quantity shown originates client-side. */
export function buildScene(proj: Projection3d, opts: SceneOptions): Scene {
  const frame = fitFrame(proj.points, opts.width, opts.height);
  const legend = sceneLegend(proj, opts);
  const highlight = opts.highlight ?? null;

  const dots = proj.points.map((p) => {
    const s = toScreen(rotate([p.x, p.y, p.z], opts.yaw, opts.pitch), frame);
    const dimmed = highlight !== null && !p.cuisines.includes(highlight);
    return {
      id: p.id,
      name: p.name,
      x: s.x,
      y: s.y,
      depth: s.depth,
      radius: 5 + 1.5 * s.depth * frame.scale * 0.002,
      color: dotColor(p, proj, opts, legend),
      dimmed,
      profile: p.profile,
      cuisines: [...p.cuisines],
    };
  });
  dots.sort((a, b) => a.depth - b.depth); // paint far dots first

  let axis: Scene["axis"] = null;
  if (proj.pole !== null) {
    const low = proj.pole.low_centroid;
    const high = proj.pole.high_centroid;
    if (low.length === 3 && high.length === 3) {
      const a = toScreen(rotate([low[0]!, low[1]!, low[2]!], opts.yaw, opts.pitch), frame);
      const b = toScreen(rotate([high[0]!, high[1]!, high[2]!], opts.yaw, opts.pitch), frame);
      axis = {
        x1: a.x, y1: a.y, x2: b.x, y2: b.y,
        lowLabel: proj.pole.low_pole,
        highLabel: proj.pole.high_pole,
      };
    }
  }

  const centroids: Scene["centroids"] = [];
  if (opts.colorBy === "cuisine") {
    for (const entry of legend) {
      const members = proj.points.filter((p) => p.cuisines.includes(entry.label));
      if (members.length === 0) continue;
      let sx = 0, sy = 0, sz = 0;
      for (const m of members) { sx += m.x; sy += m.y; sz += m.z; }
      const n = members.length;
      const s = toScreen(rotate([sx / n, sy / n, sz / n], opts.yaw, opts.pitch), frame);
      centroids.push({ label: entry.label, x: s.x, y: s.y, color: entry.color });
    }
  }

  return { dots, axis, centroids, legend };
}

/** Topmost dot within reach of the cursor, for hover tooltips. */
export function hitTest(scene: Scene, x: number, y: number, slop = 4): Dot | null {
  for (let i = scene.dots.length - 1; i >= 0; i--) {
    const d = scene.dots[i]!;
    const dx = d.x - x, dy = d.y - y;
    if (dx * dx + dy * dy <= (d.radius + slop) ** 2) return d;
  }
  return null;
}
