// View state: the single source of truth the renderer reads. Everything in
// it came from server messages; commands never mutate it directly.

import {
  Box,
  boxKey,
  ChangeInfo,
  Hints,
  RobotRecord,
  Snapshot,
  StepDiff,
} from "./protocol.js";

export type Eligibility = "addable" | "removable" | "ineligible";

export interface ViewState {
  step: number;
  boxes: Box[];
  entry: [number, number];
  exit: [number, number];
  robots: RobotRecord[];
  hints: Hints;
  change: ChangeInfo | null;
  statusLog: string[]; // recent change ladder, e.g. "#2 primary"
  paused: boolean;
  speed: number;
  method: string;
  connected: boolean;
  lastError: string | null;
}

const STATUS_LOG_CAP = 12;

function appendStatuses(
  log: string[],
  events: { seq: number; status: string }[] | undefined,
): string[] {
  if (!events || events.length === 0) return log;
  const lines = events.map((e) => `#${e.seq} ${e.status}`);
  return [...log, ...lines].slice(-STATUS_LOG_CAP);
}

export function emptyState(): ViewState {
  return {
    step: -1,
    boxes: [],
    entry: [0, 0],
    exit: [1, 0],
    robots: [],
    hints: { addable: [], removable: [], changeable: false },
    change: null,
    statusLog: [],
    paused: true,
    speed: 4,
    method: "comm",
    connected: false,
    lastError: null,
  };
}

export function applySnapshot(state: ViewState, snap: Snapshot): ViewState {
  return {
    ...state,
    step: snap.step,
    boxes: snap.shape.boxes,
    entry: snap.shape.entry,
    exit: snap.shape.exit,
    robots: snap.robots,
    hints: snap.hints,
    change: snap.change,
    statusLog: appendStatuses(state.statusLog, snap.status_events),
    paused: snap.paused,
    speed: snap.speed,
    method: snap.method,
    connected: true,
    lastError: null,
  };
}

// Diffs older than the rendered step are stale echoes (e.g. right after a
// resync) and must be dropped so the view never moves backwards.
export function applyStep(state: ViewState, diff: StepDiff): ViewState {
  if (diff.step <= state.step) return state;
  return {
    ...state,
    step: diff.step,
    boxes: diff.shape_boxes,
    robots: diff.robots,
    hints: diff.hints,
    change: diff.change,
    statusLog: appendStatuses(state.statusLog, diff.status_events),
  };
}

export function eligibility(state: ViewState, box: Box): Eligibility {
  const key = boxKey(box);
  if (!state.hints.changeable) return "ineligible";
  if (state.hints.addable.some((b) => boxKey(b) === key)) return "addable";
  if (state.hints.removable.some((b) => boxKey(b) === key)) return "removable";
  return "ineligible";
}

// Every box a user could plausibly aim at: the shape plus its free border.
export function candidateBoxes(state: ViewState): Box[] {
  const present = new Set(state.boxes.map(boxKey));
  const all = new Map<string, Box>();
  for (const [i, j] of state.boxes) {
    all.set(boxKey([i, j]), [i, j]);
    for (const [di, dj] of [[0, 1], [0, -1], [1, 0], [-1, 0]] as const) {
      const nb: Box = [i + di, j + dj];
      if (!present.has(boxKey(nb))) all.set(boxKey(nb), nb);
    }
  }
  return [...all.values()].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}
