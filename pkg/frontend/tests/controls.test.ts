import { describe, expect, it } from "vitest";

import { clickBox, Camera, pixelToBox, nodeToPixel, togglePause } from "../src/controls.js";
import { Command, Snapshot } from "../src/protocol.js";
import { applySnapshot, emptyState } from "../src/state.js";

const SNAPSHOT: Snapshot = {
  type: "snapshot",
  schema_version: 1,
  step: 5,
  shape: { boxes: [[0, 0], [1, 0]], entry: [0, 0], exit: [1, 0] },
  robots: [],
  hints: { addable: [[0, 1]], removable: [[1, 0]], changeable: true },
  change: null,
  paused: true,
  speed: 4,
  method: "comm",
};

function sinkInto(sent: Command[]) {
  return { send: (c: Command) => void sent.push(c) };
}

describe("click gating", () => {
  it("sends add for green boxes, remove for blue ones", () => {
    const s = applySnapshot(emptyState(), SNAPSHOT);
    const sent: Command[] = [];
    expect(clickBox(s, [0, 1], sinkInto(sent))).toBe(true);
    expect(clickBox(s, [1, 0], sinkInto(sent))).toBe(true);
    expect(sent).toEqual([
      { type: "add_box", i: 0, j: 1 },
      { type: "remove_box", i: 1, j: 0 },
    ]);
  });

  it("never sends a command the hints do not sanction", () => {
    const s = applySnapshot(emptyState(), SNAPSHOT);
    const sent: Command[] = [];
    expect(clickBox(s, [0, 0], sinkInto(sent))).toBe(false); // entry/exit box
    expect(clickBox(s, [5, 5], sinkInto(sent))).toBe(false); // nowhere near
    expect(sent).toHaveLength(0);
  });

  it("ignores every click while a change is resolving", () => {
    const s = applySnapshot(emptyState(), {
      ...SNAPSHOT,
      hints: { ...SNAPSHOT.hints, changeable: false },
    });
    const sent: Command[] = [];
    expect(clickBox(s, [0, 1], sinkInto(sent))).toBe(false);
    expect(sent).toHaveLength(0);
  });

  it("pause toggles according to current state", () => {
    const sent: Command[] = [];
    togglePause(applySnapshot(emptyState(), SNAPSHOT), sinkInto(sent));
    togglePause(
      applySnapshot(emptyState(), { ...SNAPSHOT, paused: false }),
      sinkInto(sent),
    );
    expect(sent).toEqual([{ type: "resume" }, { type: "pause" }]);
  });
});

describe("camera transforms", () => {
  const cam: Camera = { scale: 40, offsetX: 100, offsetY: 100, height: 600 };

  it("maps pixels to boxes and back consistently", () => {
    // node (2,1) belongs to box (1,0)
    const [px, py] = nodeToPixel(cam, [2, 1]);
    expect(pixelToBox(cam, px, py)).toEqual([1, 0]);
  });

  it("round-trips lattice corners", () => {
    for (const node of [[0, 0], [3, 2], [-2, 5]] as const) {
      const [px, py] = nodeToPixel(cam, [node[0], node[1]]);
      const box = pixelToBox(cam, px + 1, py - 1);
      expect(box).toEqual([Math.floor(node[0] / 2), Math.floor(node[1] / 2)]);
    }
  });
});
