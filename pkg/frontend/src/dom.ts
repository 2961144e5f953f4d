/**
 * DOM rendering of a SessionView. Everything here is a dumb projection of
 * the view model; no state lives in the DOM.
 */

import type { ControllerSnapshot } from "./controller.js";
import type { SessionView } from "./view.js";

export interface Handlers {
  onOutcome: (outcome: number) => void;
  onRetry: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderPending(view: SessionView, root: HTMLElement): void {
  const box = el("div", "pending");
  if (view.pending === null) {
    box.append(el("p", "muted", view.kind === "complete" ? "No more queries." : "Waiting for a query..."));
    root.append(box);
    return;
  }
  const q = view.pending;
  box.append(el("h2", undefined, `Label instance ${q.instance_id}`));
  if (q.display_url) {
    const link = el("a", "display-link", q.display_url);
    link.setAttribute("href", q.display_url);
    link.setAttribute("target", "_blank");
    box.append(link);
  }
  const meta = el("p", "meta");
  meta.textContent =
    `group ${q.group_name} | predicted class ${q.predicted_class} ` +
    `| confidence ${(q.confidence * 100).toFixed(1)}% | step ${q.step}`;
  box.append(meta);
  root.append(box);
}

function renderControls(view: SessionView, handlers: Handlers, root: HTMLElement): void {
  const controls = el("div", "controls");
  const { kind, enabled, classButtons, searchable } = view.controls;
  if (kind === "correctness") {
    const correct = el("button", "correct", "Correct");
    const wrong = el("button", "incorrect", "Incorrect");
    correct.disabled = wrong.disabled = !enabled;
    correct.addEventListener("click", () => handlers.onOutcome(1));
    wrong.addEventListener("click", () => handlers.onOutcome(0));
    controls.append(correct, wrong);
  } else if (classButtons !== null) {
    const grid = el("div", "class-grid");
    for (const j of classButtons) {
      const button = el("button", "class-button", `class ${j}`);
      button.disabled = !enabled;
      button.addEventListener("click", () => handlers.onOutcome(j));
      grid.append(button);
    }
    controls.append(grid);
  } else if (searchable) {
    const input = el("input", "class-search");
    input.setAttribute("type", "number");
    input.setAttribute("placeholder", "true class index");
    const go = el("button", "class-submit", "Label");
    go.disabled = !enabled;
    go.addEventListener("click", () => {
      const value = Number.parseInt(input.value, 10);
      if (!Number.isNaN(value)) handlers.onOutcome(value);
    });
    controls.append(input, go);
  }
  root.append(controls);
}

function renderBars(view: SessionView, root: HTMLElement): void {
  const list = el("div", "groups");
  for (const bar of view.bars) {
    const row = el("div", bar.isPendingGroup ? "group-row pending-group" : "group-row");
    row.append(el("span", "group-name", bar.name));
    const track = el("div", "bar-track");
    const ci = el("div", "bar-ci");
    ci.style.left = `${bar.ciLow * 100}%`;
    ci.style.width = `${Math.max(0, (bar.ciHigh - bar.ciLow) * 100)}%`;
    const mean = el("div", "bar-mean");
    mean.style.left = `${bar.mean * 100}%`;
    track.append(ci, mean);
    row.append(track);
    const detail = bar.extremeProbability === null
      ? `${bar.mean.toFixed(3)} (${bar.labels})`
      : `${bar.mean.toFixed(3)} (${bar.labels} labels, extreme p=${bar.extremeProbability.toFixed(2)})`;
    row.append(el("span", "group-detail", detail));
    list.append(row);
  }
  root.append(list);
}

export function render(
  view: SessionView,
  snapshot: ControllerSnapshot,
  root: HTMLElement,
  handlers: Handlers,
): void {
  root.replaceChildren();
  const banner = el("h1", `banner banner-${view.kind}`, view.banner);
  root.append(banner);
  root.append(el("p", "progress", view.progressText));

  if (view.errorMessage !== null) {
    root.append(el("div", "error-banner", view.errorMessage));
    return;
  }
  if (snapshot.inlineError !== null) {
    const note = el("div", "inline-error", snapshot.inlineError);
    if (snapshot.canRetry) {
      const retry = el("button", "retry", "Retry");
      retry.addEventListener("click", () => handlers.onRetry());
      note.append(retry);
    }
    root.append(note);
  }

  if (view.kind !== "complete") {
    renderPending(view, root);
    renderControls(view, handlers, root);
  }
  renderBars(view, root);

  for (const line of view.statusLines) {
    root.append(el("p", "status-line", line));
  }
  if (snapshot.busy) {
    root.append(el("p", "busy", "waiting for server..."));
  }
}
