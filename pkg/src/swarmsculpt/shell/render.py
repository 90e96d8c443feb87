"""Vector snapshots of a trace step: boxes, nodes, heading arrows, robots.

Rendering happens in two stages so tests can assert on geometry without
parsing SVG: ``build_render_model`` extracts everything drawable from the
trace records, and ``draw_svg`` turns a model into a deterministic SVG.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import FancyArrow, Rectangle

# role colors follow the experiment footage: repair followers flash red,
# the single change robot blue, everyone else green
ROLE_COLORS = {"normal": "#2b9e5f", "pass_back": "#d63b3b", "change": "#2e66d6"}


def shape_at_step(records: list[dict], step: int):
    header = records[0]
    boxes = {tuple(b) for b in header["shape"]["boxes"]}
    for rec in records:
        if (
            rec.get("kind") == "event"
            and rec.get("event") == "change_status"
            and rec.get("status") == "propagating"
            and rec["step"] <= step
        ):
            (boxes.add if rec["add"] else boxes.discard)(tuple(rec["box"]))
    return boxes, tuple(header["shape"]["entry"]), tuple(header["shape"]["exit"])


def build_render_model(records: list[dict], step: int) -> dict:
    step_rec = next(
        (r for r in records if r.get("kind") == "step" and r["step"] == step), None
    )
    if step_rec is None:
        raise ValueError(f"no step record for step {step}")
    boxes, entry, exit_ = shape_at_step(records, step)
    nodes = sorted(
        {(2 * i + dx, 2 * j + dy) for i, j in boxes for dx in (0, 1) for dy in (0, 1)}
    )
    robots = []
    arrows = []
    for r in step_rec["robots"]:
        if r["phase"] != "in_shape":
            continue
        pos = tuple(r["pos"])
        robots.append({"id": r["id"], "pos": pos, "role": r["role"]})
        if r["heading"] is not None:
            arrows.append({"from": pos, "dir": tuple(r["heading"])})
    return {
        "step": step,
        "boxes": sorted(boxes),
        "nodes": nodes,
        "entry": entry,
        "exit": exit_,
        "robots": robots,
        "arrows": arrows,
    }


def draw_svg(model: dict, out_path) -> None:
    xs = [x for x, _ in model["nodes"]]
    ys = [y for _, y in model["nodes"]]
    fig, ax = plt.subplots(figsize=(max(3, (max(xs) - min(xs)) * 0.6), max(3, (max(ys) - min(ys)) * 0.6)))
    for i, j in model["boxes"]:
        ax.add_patch(
            Rectangle(
                (2 * i - 0.5, 2 * j - 0.5), 2.0, 2.0,
                facecolor="#dce8f5", edgecolor="#7c94ad", linewidth=0.8,
            )
        )
    for x, y in model["nodes"]:
        ax.plot([x], [y], marker="o", markersize=2.5, color="#44505c")
    for a in model["arrows"]:
        (x, y), (dx, dy) = a["from"], a["dir"]
        ax.add_patch(
            FancyArrow(
                x, y, dx * 0.62, dy * 0.62,
                width=0.03, head_width=0.16, head_length=0.14,
                color="#30363c", length_includes_head=True,
            )
        )
    for r in model["robots"]:
        x, y = r["pos"]
        ax.add_patch(
            plt.Circle((x, y), 0.22, color=ROLE_COLORS.get(r["role"], "#888888"))
        )
    ex, ey = model["entry"]
    ax.plot([ex], [ey], marker="s", markersize=9, mfc="none", mec="#2b9e5f")
    ex, ey = model["exit"]
    ax.plot([ex], [ey], marker="s", markersize=9, mfc="none", mec="#d63b3b")
    ax.set_aspect("equal")
    ax.set_xlim(min(xs) - 1.2, max(xs) + 1.2)
    ax.set_ylim(min(ys) - 1.2, max(ys) + 1.2)
    ax.set_title(f"step {model['step']}")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
