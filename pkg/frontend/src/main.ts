// Browser wiring: canvas, buttons, and the live session.

import { Camera, clickBox, pixelToBox, selectMethod, setSpeed, togglePause } from "./controls.js";
import { Session } from "./net.js";
import { render, Surface } from "./render.js";

function canvasSurface(ctx: CanvasRenderingContext2D): Surface {
  return {
    clear(w, h) {
      ctx.fillStyle = "#f6f8fa";
      ctx.fillRect(0, 0, w, h);
    },
    rect(x, y, w, h, fill, stroke) {
      if (fill !== "transparent") {
        ctx.fillStyle = fill;
        ctx.fillRect(x, y - h, w, h);
      }
      if (stroke) {
        ctx.strokeStyle = stroke;
        ctx.lineWidth = 2;
        ctx.strokeRect(x, y - h, w, h);
      }
    },
    circle(x, y, r, fill) {
      if (fill === "transparent") return;
      ctx.fillStyle = fill;
      ctx.beginPath();
      ctx.arc(x, y, r, 0, Math.PI * 2);
      ctx.fill();
    },
    line(x1, y1, x2, y2, color, width) {
      ctx.strokeStyle = color;
      ctx.lineWidth = width;
      ctx.beginPath();
      ctx.moveTo(x1, y1);
      ctx.lineTo(x2, y2);
      ctx.stroke();
    },
    text(x, y, s, color) {
      ctx.fillStyle = color;
      ctx.font = "12px system-ui, sans-serif";
      ctx.fillText(s, x, y);
    },
  };
}

export function start(): void {
  const canvas = document.getElementById("arena") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const surface = canvasSurface(ctx);
  const cam: Camera = { scale: 42, offsetX: 120, offsetY: 120, height: canvas.height };

  const proto = location.protocol === "https:" ? "wss" : "ws";
  const session = new Session(
    `${proto}://${location.host}/ws`,
    (url) => new WebSocket(url) as never,
  );

  const statusEl = document.getElementById("status")!;
  const errorEl = document.getElementById("error")!;
  session.onChange((view) => {
    render(surface, cam, view, canvas.width, canvas.height);
    statusEl.textContent = view.connected
      ? `step ${view.step} (${view.paused ? "paused" : `${view.speed}/s`})`
      : "reconnecting...";
    errorEl.textContent = view.lastError ?? "";
  });

  canvas.addEventListener("click", (ev) => {
    const r = canvas.getBoundingClientRect();
    const box = pixelToBox(cam, ev.clientX - r.left, ev.clientY - r.top);
    clickBox(session.state, box, session);
  });
  document.getElementById("pause")!.addEventListener("click", () => {
    togglePause(session.state, session);
  });
  (document.getElementById("speed") as HTMLInputElement).addEventListener(
    "change",
    (ev) => setSpeed(session, Number((ev.target as HTMLInputElement).value)),
  );
  (document.getElementById("method") as HTMLSelectElement).addEventListener(
    "change",
    (ev) =>
      selectMethod(
        session,
        (ev.target as HTMLSelectElement).value as "comm" | "movement",
      ),
  );
  session.connect();
}

if (typeof document !== "undefined" && document.getElementById("arena")) {
  start();
}
