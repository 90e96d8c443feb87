// User intent -> commands. Clicks are gated by the server's eligibility
// hints so the client can never submit a change the engine would reject.

import { Box, Command } from "./protocol.js";
import { eligibility, ViewState } from "./state.js";

export interface CommandSink {
  send(cmd: Command): void;
}

export function clickBox(state: ViewState, box: Box, sink: CommandSink): boolean {
  switch (eligibility(state, box)) {
    case "addable":
      sink.send({ type: "add_box", i: box[0], j: box[1] });
      return true;
    case "removable":
      sink.send({ type: "remove_box", i: box[0], j: box[1] });
      return true;
    default:
      return false; // red boxes are unresponsive, exactly like the demo robots
  }
}

export function togglePause(state: ViewState, sink: CommandSink): void {
  sink.send({ type: state.paused ? "resume" : "pause" });
}

export function setSpeed(sink: CommandSink, stepsPerSecond: number): void {
  sink.send({ type: "set_speed", steps_per_second: stepsPerSecond });
}

export function selectMethod(sink: CommandSink, method: "comm" | "movement"): void {
  sink.send({ type: "select_method", method });
}

// Canvas pixel -> lattice box under the standard camera transform.
export interface Camera {
  scale: number; // pixels per lattice unit
  offsetX: number;
  offsetY: number;
  height: number; // canvas pixel height (y flips: lattice y points up)
}

export function pixelToBox(cam: Camera, px: number, py: number): Box {
  const x = (px - cam.offsetX) / cam.scale;
  const y = (cam.height - py - cam.offsetY) / cam.scale;
  return [Math.floor(x / 2), Math.floor(y / 2)];
}

export function nodeToPixel(cam: Camera, node: [number, number]): [number, number] {
  return [
    cam.offsetX + node[0] * cam.scale,
    cam.height - (cam.offsetY + node[1] * cam.scale),
  ];
}
