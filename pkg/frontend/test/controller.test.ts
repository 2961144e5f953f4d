import { describe, expect, it } from "vitest";

import { SessionClient } from "../src/client.js";
import { startSession } from "../src/controller.js";
import { FakeService } from "./fake_service.js";

function makeClientPair() {
  const service = new FakeService();
  const client = new SessionClient("http://fake", service.fetch);
  return { service, client };
}

describe("SessionController", () => {
  it("completes a 10-label session with no state divergence", async () => {
    const { service, client } = makeClientPair();
    const controller = await startSession(client, { seed: 1 });

    const outcomes = [1, 0, 1, 1, 0, 1, 0, 0, 1, 1];
    for (const outcome of outcomes) {
      const before = controller.snapshot();
      expect(before.pending).not.toBeNull();
      await controller.submit(outcome);
    }

    const snap = controller.snapshot();
    expect(snap.state?.steps).toBe(10);
    expect(service.steps).toBe(10);
    // client-side view agrees with the service's own bookkeeping, group by group
    for (const [g, arm] of service.arms.entries()) {
      const rendered = snap.state?.groups[g];
      expect(rendered?.labels).toBe(arm.trials);
      expect(rendered?.metric.mean).toBeCloseTo(
        (arm.alpha + arm.successes) / (arm.alpha + arm.beta + arm.trials), 12);
    }
    const applied = outcomes.reduce((a, b) => a + b, 0);
    expect(service.arms.reduce((a, arm) => a + arm.successes, 0)).toBe(applied);
  });

  it("increments the step counter per click", async () => {
    const { client } = makeClientPair();
    const controller = await startSession(client, { seed: 1 });
    await controller.submit(1);
    expect(controller.snapshot().state?.steps).toBe(1);
    await controller.submit(0);
    expect(controller.snapshot().state?.steps).toBe(2);
  });

  it("collapses double-clicks into one applied label", async () => {
    const { service, client } = makeClientPair();
    const controller = await startSession(client, { seed: 1 });
    // two clicks without awaiting in between: the second is a no-op because
    // a request is already in flight
    const first = controller.submit(1);
    const second = controller.submit(1);
    await Promise.all([first, second]);
    expect(service.steps).toBe(1);
    expect(controller.snapshot().state?.steps).toBe(1);
  });

  it("surfaces a retry affordance on network failure without mutating state", async () => {
    const { service, client } = makeClientPair();
    const controller = await startSession(client, { seed: 1 });
    const pendingBefore = controller.snapshot().pending;
    service.failNextSubmit = true;
    await controller.submit(1);
    const snap = controller.snapshot();
    expect(snap.inlineError).toMatch(/network failure/);
    expect(snap.canRetry).toBe(true);
    expect(snap.pending).toEqual(pendingBefore);
    expect(service.steps).toBe(0);

    await controller.retry();
    expect(controller.snapshot().state?.steps).toBe(1);
    expect(service.steps).toBe(1);
  });

  it("retry after a lost response hits the idempotent pair", async () => {
    const { service, client } = makeClientPair();
    const controller = await startSession(client, { seed: 1 });
    const pending = controller.snapshot().pending;
    expect(pending).not.toBeNull();
    // simulate response loss: server applied the label, client saw a failure
    service.label_backdoor(pending!.instance_id, 1);
    await controller.submit(1);
    expect(service.steps).toBe(1);
    expect(controller.snapshot().state?.steps).toBe(1);
  });

  it("reaches the completion view at budget and disables further labels", async () => {
    const service = new FakeService(2, 10, 4);
    const client = new SessionClient("http://fake", service.fetch);
    const controller = await startSession(client, { seed: 1 });
    for (let i = 0; i < 4; i += 1) {
      await controller.submit(1);
    }
    const snap = controller.snapshot();
    expect(snap.finished).toBe(true);
    expect(snap.finishReason).toBe("budget");
    expect(snap.pending).toBeNull();
    await controller.submit(1); // no-op after completion
    expect(service.steps).toBe(4);
  });

  it("surfaces 409 conflicts inline", async () => {
    const { service, client } = makeClientPair();
    const controller = await startSession(client, { seed: 1 });
    service.pending = null; // desync: server forgot the pending query
    service.lastSubmit = null;
    await controller.submit(1);
    const snap = controller.snapshot();
    expect(snap.inlineError).toMatch(/conflict/);
    expect(snap.finished).toBe(false);
  });
});
