import { SessionClient } from "./client.js";
import { SessionController, startSession } from "./controller.js";
import { render } from "./dom.js";
import { renderState } from "./view.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const baseUrl = param("base", "http://127.0.0.1:8000");
  const client = new SessionClient(baseUrl);

  const existing = param("session", "");
  let controller: SessionController;
  if (existing) {
    controller = new SessionController(client, existing);
  } else {
    // a seed must come from the page URL: the service refuses wall-clock seeding
    const seed = Number.parseInt(param("seed", "1"), 10);
    controller = await startSession(client, { seed });
    window.history.replaceState(null, "", `?base=${encodeURIComponent(baseUrl)}`);
  }

  const repaint = () => {
    const snapshot = controller.snapshot();
    if (snapshot.state === null) {
      root.textContent = snapshot.inlineError ?? "loading...";
      return;
    }
    const stateWithPending = { ...snapshot.state, pending: snapshot.pending };
    const k = numClasses(snapshot.state);
    const view = snapshot.finished && snapshot.state.terminal === null
      ? { ...renderState({ ...stateWithPending, terminal: snapshot.finishReason }, k) }
      : renderState(stateWithPending, k);
    render(view, snapshot, root, {
      onOutcome: (outcome) => void controller.submit(outcome),
      onRetry: () => void controller.retry(),
    });
  };

  controller.onChange(repaint);
  if (existing) {
    await controller.refresh();
  }
  repaint();
}

function numClasses(state: { partition: { kind: string; num_bins?: number }; groups: unknown[] }): number {
  // predicted-class partitions have one group per class; other partitions
  // fall back to the group count, which only affects the class-button grid
  return state.groups.length;
}

void boot();
