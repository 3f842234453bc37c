// Notebook page rendering, split into a pure planning step (testable) and
// a small canvas adapter. The page is A4 portrait in normalized [0,1)
// coordinates, origin top-left.

import { cursorAt, grayPartition } from "./replay.js";
import type { Sample, StrokeData } from "./types.js";

export const PAGE_ASPECT = 297 / 210;

export interface DrawPlan {
  solid: Sample[][];
  gray: Sample[][];
  dot: { x: number; y: number } | null;
}

/**
 * What to draw at virtual time t. With gray mode on, samples written later
 * than t render grayed; with it off the whole page stays solid (the red dot
 * still marks the temporal position either way).
 */
export function planPage(strokes: StrokeData[], t: number, grayMode: boolean): DrawPlan {
  let solid: Sample[][];
  let gray: Sample[][];
  if (grayMode) {
    const part = grayPartition(strokes, t);
    solid = part.visible.map(([, samples]) => samples);
    gray = part.grayed.map(([, samples]) => samples);
  } else {
    solid = strokes.map((s) => s.samples);
    gray = [];
  }
  const cursor = cursorAt(strokes, t);
  return { solid, gray, dot: cursor ? { x: cursor.x, y: cursor.y } : null };
}

function drawPolyline(
  ctx: CanvasRenderingContext2D,
  samples: Sample[],
  width: number,
  height: number,
): void {
  if (samples.length === 0) return;
  ctx.beginPath();
  ctx.moveTo(samples[0][0] * width, samples[0][1] * height);
  for (const [x, y] of samples.slice(1)) {
    ctx.lineTo(x * width, y * height);
  }
  if (samples.length === 1) {
    ctx.lineTo(samples[0][0] * width + 0.5, samples[0][1] * height + 0.5);
  }
  ctx.stroke();
}

export function drawPage(
  ctx: CanvasRenderingContext2D,
  plan: DrawPlan,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fffef8";
  ctx.fillRect(0, 0, width, height);
  ctx.lineWidth = 1.6;
  ctx.lineCap = "round";
  ctx.strokeStyle = "#c9c9c9";
  for (const samples of plan.gray) drawPolyline(ctx, samples, width, height);
  ctx.strokeStyle = "#1a237e";
  for (const samples of plan.solid) drawPolyline(ctx, samples, width, height);
  if (plan.dot) {
    ctx.fillStyle = "#e53935";
    ctx.beginPath();
    ctx.arc(plan.dot.x * width, plan.dot.y * height, 5, 0, 2 * Math.PI);
    ctx.fill();
  }
}
