// Canvas rendering of the live view. The drawing surface is abstracted to
// the handful of 2D calls used here so tests can record them.

import { candidateBoxes, eligibility, ViewState } from "./state.js";
import { Camera, nodeToPixel } from "./controls.js";

export interface Surface {
  clear(w: number, h: number): void;
  rect(x: number, y: number, w: number, h: number, fill: string, stroke?: string): void;
  circle(x: number, y: number, r: number, fill: string): void;
  line(x1: number, y1: number, x2: number, y2: number, color: string, width: number): void;
  text(x: number, y: number, s: string, color: string): void;
}

export const COLORS = {
  boxFill: "#dbe7f3",
  boxEdge: "#8097ad",
  addableOutline: "#1faf54", // green: room to grow here
  removableOutline: "#2d6fd1", // blue: may be carved away
  ineligibleOutline: "#c23b3b", // red: hands off
  node: "#49545e",
  robotNormal: "#2b9e5f",
  robotPassBack: "#d63b3b",
  robotChange: "#2e66d6",
  heading: "#30363c",
  entry: "#1faf54",
  exit: "#c23b3b",
};

const ROLE_FILL: Record<string, string> = {
  normal: COLORS.robotNormal,
  pass_back: COLORS.robotPassBack,
  change: COLORS.robotChange,
};

export function render(s: Surface, cam: Camera, view: ViewState, w: number, h: number): void {
  s.clear(w, h);
  for (const [i, j] of view.boxes) {
    const [px, py] = nodeToPixel(cam, [2 * i, 2 * j + 1]);
    s.rect(
      px - cam.scale / 2,
      py - cam.scale / 2,
      2 * cam.scale,
      2 * cam.scale,
      COLORS.boxFill,
      COLORS.boxEdge,
    );
  }
  for (const box of candidateBoxes(view)) {
    const kind = eligibility(view, box);
    const color =
      kind === "addable"
        ? COLORS.addableOutline
        : kind === "removable"
          ? COLORS.removableOutline
          : COLORS.ineligibleOutline;
    const [px, py] = nodeToPixel(cam, [2 * box[0], 2 * box[1] + 1]);
    s.rect(px - cam.scale / 2, py - cam.scale / 2, 2 * cam.scale, 2 * cam.scale, "transparent", color);
  }
  for (const [i, j] of view.boxes) {
    for (const dx of [0, 1]) {
      for (const dy of [0, 1]) {
        const [px, py] = nodeToPixel(cam, [2 * i + dx, 2 * j + dy]);
        s.circle(px, py, 2.5, COLORS.node);
      }
    }
  }
  for (const r of view.robots) {
    if (r.phase !== "in_shape" || !r.pos) continue;
    const [px, py] = nodeToPixel(cam, r.pos);
    if (r.heading) {
      const [hx, hy] = r.heading;
      s.line(px, py, px + hx * cam.scale * 0.62, py - hy * cam.scale * 0.62, COLORS.heading, 2);
    }
    s.circle(px, py, cam.scale * 0.24, ROLE_FILL[r.role] ?? COLORS.robotNormal);
    s.text(px - 4, py + 4, String(r.id), "#ffffff");
  }
  const [ex, ey] = nodeToPixel(cam, view.entry);
  s.circle(ex, ey, cam.scale * 0.34, "transparent");
  s.line(ex - 8, ey + 12, ex + 8, ey + 12, COLORS.entry, 3);
  const [xx, xy] = nodeToPixel(cam, view.exit);
  s.line(xx - 8, xy + 12, xx + 8, xy + 12, COLORS.exit, 3);
  const status = view.change
    ? `change #${view.change.seq}: ${view.change.status}`
    : view.hints.changeable
      ? "ready to sculpt"
      : "settling";
  s.text(12, 18, `step ${view.step} | ${status} | ${view.method}`, "#222222");
  view.statusLog.slice(-4).forEach((line, k) => {
    s.text(12, 36 + 14 * k, line, "#555555");
  });
}
