/**
 * Pure view-model construction: SessionState JSON in, renderable structure
 * out. Keeping this free of DOM access makes the render logic testable in
 * node and guarantees the UI is a function of server state only.
 */

import type { GroupSummary, OutcomeKind, PendingQuery, SessionState } from "./types.js";

export interface GroupBar {
  group: number;
  name: string;
  mean: number;
  ciLow: number;
  ciHigh: number;
  labels: number;
  rank: number | null;
  extremeProbability: number | null;
  isPendingGroup: boolean;
}

export interface LabelControls {
  kind: OutcomeKind;
  enabled: boolean;
  /** true-class mode: grid of class buttons up to this many, else search */
  classButtons: number[] | null;
  searchable: boolean;
}

export interface SessionView {
  kind: "active" | "complete" | "error";
  banner: string;
  progressText: string;
  progressFraction: number | null;
  pending: PendingQuery | null;
  bars: GroupBar[];
  statusLines: string[];
  controls: LabelControls;
  errorMessage: string | null;
}

export const CLASS_GRID_LIMIT = 30;

const TASK_BANNERS: Record<string, string> = {
  "identify-accuracy": "identifying the least accurate group",
  "identify-ece": "identifying the least calibrated group",
  "identify-cost": "identifying the most costly group",
  "estimate-accuracy": "estimating groupwise accuracy",
  "estimate-confusion": "estimating the confusion matrix",
  compare: "comparing two groups",
};

function bannerFor(state: SessionState): string {
  const base = TASK_BANNERS[state.task] ?? `task: ${state.task}`;
  if (state.task === "identify-accuracy" && state.direction === "max") {
    return "identifying the most accurate group";
  }
  return base;
}

function validateState(state: unknown): string | null {
  if (state === null || typeof state !== "object") {
    return "state payload is not an object";
  }
  const s = state as Partial<SessionState>;
  if (!Array.isArray(s.groups)) return "state payload has no groups array";
  if (typeof s.task !== "string") return "state payload has no task";
  if (s.progress === undefined) return "state payload has no progress block";
  for (const g of s.groups) {
    if (typeof g?.metric?.mean !== "number") {
      return "group summary is missing its metric";
    }
  }
  return null;
}

function sortBars(groups: GroupSummary[], state: SessionState): GroupBar[] {
  const pendingGroup = state.pending?.group ?? -1;
  const bars = groups.map((g) => ({
    group: g.g,
    name: g.name,
    mean: g.metric.mean,
    ciLow: g.metric.ci_low,
    ciHigh: g.metric.ci_high,
    labels: g.labels,
    rank: state.ranking ? state.ranking.mean_rank[g.g] : null,
    extremeProbability: state.ranking ? state.ranking.extreme_probability[g.g] : null,
    isPendingGroup: g.g === pendingGroup,
  }));
  // most interesting group first, per the task direction
  bars.sort((a, b) => (state.direction === "max" ? b.mean - a.mean : a.mean - b.mean));
  return bars;
}

function statusLines(state: SessionState): string[] {
  const lines: string[] = [];
  if (state.ece) {
    const s = state.ece.summary;
    lines.push(
      `ECE ${s.mean.toFixed(3)} [${s.ci_low.toFixed(3)}, ${s.ci_high.toFixed(3)}]`,
    );
  }
  if (state.rope) {
    const mu = state.rope.mu.map((v) => v.toFixed(2)).join(" / ");
    lines.push(
      `ROPE: ${state.rope.region} with confidence ${state.rope.lambda.toFixed(2)} (mu = ${mu})`,
    );
  }
  if (state.ranking && state.groups.length >= 2) {
    const best = state.ranking.extreme_probability
      .map((p, g) => ({ p, g }))
      .sort((a, b) => b.p - a.p)[0];
    const name = state.groups[best.g]?.name ?? `group ${best.g}`;
    lines.push(`${name} is the extreme group with probability ${best.p.toFixed(2)}`);
  }
  return lines;
}

export function outcomeKindOf(state: SessionState): OutcomeKind {
  return state.task === "estimate-confusion" || state.task === "identify-cost"
    ? "true-class"
    : "correctness";
}

function controlsFor(state: SessionState, numClasses: number): LabelControls {
  const kind = outcomeKindOf(state);
  const enabled = state.pending !== null && state.terminal === null;
  if (kind === "correctness") {
    return { kind, enabled, classButtons: null, searchable: false };
  }
  if (numClasses <= CLASS_GRID_LIMIT) {
    return {
      kind,
      enabled,
      classButtons: Array.from({ length: numClasses }, (_, j) => j),
      searchable: false,
    };
  }
  return { kind, enabled, classButtons: null, searchable: true };
}

export function renderState(state: SessionState, numClasses: number): SessionView {
  const schemaError = validateState(state);
  if (schemaError !== null) {
    return {
      kind: "error",
      banner: "session state unavailable",
      progressText: "",
      progressFraction: null,
      pending: null,
      bars: [],
      statusLines: [],
      controls: { kind: "correctness", enabled: false, classButtons: null, searchable: false },
      errorMessage: schemaError,
    };
  }

  const labels = state.progress.labels;
  const budget = state.progress.budget;
  const progressText = budget === null ? `${labels} labels` : `${labels} / ${budget} labels`;

  if (state.terminal !== null) {
    return {
      kind: "complete",
      banner: `session complete (${state.terminal}) after ${labels} labels`,
      progressText,
      progressFraction: budget === null ? null : labels / budget,
      pending: null,
      bars: sortBars(state.groups, state),
      statusLines: statusLines(state),
      controls: { kind: outcomeKindOf(state), enabled: false, classButtons: null, searchable: false },
      errorMessage: null,
    };
  }

  return {
    kind: "active",
    banner: bannerFor(state),
    progressText,
    progressFraction: budget === null ? null : labels / budget,
    pending: state.pending,
    bars: sortBars(state.groups, state),
    statusLines: statusLines(state),
    controls: controlsFor(state, numClasses),
    errorMessage: null,
  };
}

/** Completion view for a 410 on /next: the session is over server-side. */
export function completionView(state: SessionState, reason: string): SessionView {
  const view = renderState({ ...state, terminal: state.terminal ?? reason, pending: null },
    state.groups.length);
  view.banner = `session complete: ${reason}`;
  return view;
}
