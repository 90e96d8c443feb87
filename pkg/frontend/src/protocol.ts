// Wire protocol shared with the bridge server: typed messages in, typed
// commands out. Every inbound payload is validated before it touches state.

export type Box = [number, number];
export type Node = [number, number];

export interface RobotRecord {
  id: number;
  phase: string;
  role: string;
  pos?: Node;
  heading?: Node | null;
  leg?: [string, number];
}

export interface Hints {
  addable: Box[];
  removable: Box[];
  changeable: boolean;
}

export interface ChangeInfo {
  seq: number;
  status: string;
}

export interface StatusEvent {
  seq: number;
  status: string;
  step: number;
}

export interface Snapshot {
  type: "snapshot";
  schema_version: number;
  step: number;
  shape: { boxes: Box[]; entry: Node; exit: Node };
  robots: RobotRecord[];
  hints: Hints;
  change: ChangeInfo | null;
  status_events?: StatusEvent[];
  paused: boolean;
  speed: number;
  method: string;
}

export interface StepDiff {
  type: "step";
  step: number;
  shape_boxes: Box[];
  robots: RobotRecord[];
  hints: Hints;
  change: ChangeInfo | null;
  status_events?: StatusEvent[];
}

export interface ServerError {
  type: "error";
  code: string;
  message: string;
}

export interface Bye {
  type: "bye";
  reason: string;
}

export type ServerMessage = Snapshot | StepDiff | ServerError | Bye;

export type Command =
  | { type: "add_box"; i: number; j: number }
  | { type: "remove_box"; i: number; j: number }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "set_speed"; steps_per_second: number }
  | { type: "select_method"; method: "comm" | "movement" }
  | { type: "snapshot" }
  | { type: "tick" };

function isPair(x: unknown): x is [number, number] {
  return (
    Array.isArray(x) &&
    x.length === 2 &&
    typeof x[0] === "number" &&
    typeof x[1] === "number"
  );
}

function validHints(h: unknown): h is Hints {
  if (typeof h !== "object" || h === null) return false;
  const hh = h as Hints;
  return (
    Array.isArray(hh.addable) &&
    hh.addable.every(isPair) &&
    Array.isArray(hh.removable) &&
    hh.removable.every(isPair) &&
    typeof hh.changeable === "boolean"
  );
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as Record<string, unknown>;
  switch (msg.type) {
    case "snapshot": {
      const shape = msg.shape as Snapshot["shape"] | undefined;
      if (
        typeof msg.step !== "number" ||
        !shape ||
        !Array.isArray(shape.boxes) ||
        !shape.boxes.every(isPair) ||
        !validHints(msg.hints)
      )
        return null;
      return msg as unknown as Snapshot;
    }
    case "step": {
      if (
        typeof msg.step !== "number" ||
        !Array.isArray(msg.shape_boxes) ||
        !(msg.shape_boxes as unknown[]).every(isPair) ||
        !validHints(msg.hints)
      )
        return null;
      return msg as unknown as StepDiff;
    }
    case "error":
      if (typeof msg.code !== "string") return null;
      return msg as unknown as ServerError;
    case "bye":
      return msg as unknown as Bye;
    default:
      return null;
  }
}

export function encodeCommand(cmd: Command): string {
  return JSON.stringify(cmd);
}

export const boxKey = (b: Box): string => `${b[0]},${b[1]}`;
