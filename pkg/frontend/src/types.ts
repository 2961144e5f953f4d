/**
 * Wire types mirroring the assessment service's JSON schemas. The UI never
 * invents values: everything rendered comes from these payloads.
 */

export interface MetricSummary {
  mean: number;
  ci_low: number;
  ci_high: number;
  level: number;
}

export interface GroupSummary {
  g: number;
  name: string;
  weight: number;
  labels: number;
  metric: MetricSummary;
}

export interface RankingBlock {
  direction: string;
  mean_rank: number[];
  rank_ci_low: number[];
  rank_ci_high: number[];
  extreme_probability: number[];
}

export interface RopeBlock {
  mu: number[];
  eta: number;
  region: string;
  lambda: number;
  epsilon: number;
  n_samples: number;
}

export interface EceBlock {
  summary: MetricSummary;
  n_samples: number;
}

export interface PendingQuery {
  instance_id: string;
  group: number;
  group_name: string;
  predicted_class: number;
  confidence: number;
  step: number;
  display_url: string | null;
}

export interface Progress {
  labels: number;
  budget: number | null;
  terminal: string | null;
}

export interface SessionState {
  session_id: string;
  task: string;
  direction: string;
  strategy: string;
  metric_name: string;
  steps: number;
  budget: number | null;
  terminal: string | null;
  groups: GroupSummary[];
  ranking?: RankingBlock;
  rope?: RopeBlock;
  ece?: EceBlock;
  pending: PendingQuery | null;
  progress: Progress;
  partition: { kind: string; num_bins?: number; attribute_name?: string };
}

export interface LabelResult {
  group: number;
  mean: number;
  trials: number;
  step: number;
}

export type OutcomeKind = "correctness" | "true-class";
