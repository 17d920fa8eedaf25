/** Wire types for the workspace service. Field names and shapes mirror the
 * JSON responses exactly; nothing here is computed client-side. */

export interface Health {
  status: string;
  manifest: string;
  n_original: number;
  n_canonical: number;
  n_overrides: number;
}

export interface GroupRow {
  canonical_id: number;
  name: string;
  categories: string[];
  vegetarian: boolean;
  vegan: boolean;
  member_ids: number[];
  member_names: string[];
  n: number;
  /** Mean pairwise cosine among members; null for singletons. */
  mean_pairwise: number | null;
  /** Worst pairwise cosine among members; null for singletons. */
  min_pairwise: number | null;
}

export interface GroupsResponse {
  count: number;
  groups: GroupRow[];
  removed_ids: number[];
}

export interface IngredientRow {
  canonical_id: number;
  name: string;
  categories: string[];
  vegetarian: boolean;
  vegan: boolean;
  group_size: number;
}

export interface IngredientsResponse {
  count: number;
  ingredients: IngredientRow[];
}

export interface DimensionSummary {
  dimension: string;
  kind: string;
  n: number;
}

export interface DimensionsResponse {
  dimensions: DimensionSummary[];
}

export interface DimensionDetail {
  dimension: string;
  kind: string;
  n: number;
  units: string | null;
  scale: string[] | null;
  values: Record<string, unknown>;
  report: Record<string, unknown> | null;
}

export interface PurityRow {
  cluster: string;
  n: number;
  purity: number;
  baseline: number;
  lift: number;
}

export interface CultureResponse {
  legend: string[];
  purity: {
    k: number;
    pool_size: number;
    pool_spec: string;
    mean_purity: number;
    mean_lift: number;
    per_cluster: PurityRow[];
  };
  intra_similarity: {
    global_baseline: number;
    pool_size: number;
    excluded: string[];
    per_cluster: Record<string, { mean_cosine: number; n: number }>;
  };
  tags: Record<string, string[]>;
}

export interface ProjectionPoint {
  id: number;
  name: string;
  x: number;
  y: number;
  z: number;
  profile: string | null;
  cuisines: string[];
}

export interface PoleAxis {
  axis_unit: number[];
  low_centroid: number[];
  high_centroid: number[];
  low_pole: string;
  high_pole: string;
  /** Signed position of each point along the axis, keyed by id. */
  along: Record<string, number>;
  planar: Record<string, number[]>;
}

export interface Projection3d {
  points: ProjectionPoint[];
  pole: PoleAxis | null;
  legend: string[];
}

/** One entry in the append-only override log. The service validates by
 * replaying the whole log, so shapes here stay loose on purpose: the
 * server is the authority on what a well-formed action is. */
export interface OverrideAction {
  action: "merge" | "split" | "rename" | "remove" | "recategorize";
  [field: string]: unknown;
}

export interface MergeAction extends OverrideAction {
  action: "merge";
  sources: number[];
  target: number;
}

export interface OverridesResponse {
  applied: number;
  n_overrides: number;
  n_groups: number;
  audit: string[];
}

export interface JobStarted {
  job_id: string;
  status: string;
}

export interface JobStatus {
  status: "pending" | "done" | "failed";
  result?: Record<string, unknown>;
  error?: string;
}
