// Client-side replay math. The UI never invents authority-bearing numbers:
// the red-dot position and the gray split are recomputed here from fetched
// strokes with exactly the documented server rules, so a golden comparison
// against the backend's replay export must match bit for bit.

import type { Sample, StrokeData } from "./types.js";

export interface Cursor {
  notebookId: string;
  page: number;
  x: number;
  y: number;
  strokeId: string;
}

/** Index of the last sample with time <= t, or -1 (samples are time-sorted). */
function lastAtOrBefore(samples: Sample[], t: number): number {
  let lo = 0;
  let hi = samples.length;
  while (lo < hi) {
    const mid = (lo + hi) >>> 1;
    if (samples[mid][2] <= t) lo = mid + 1;
    else hi = mid;
  }
  return lo - 1;
}

/**
 * Red-dot position at virtual time t.
 *
 * The source stroke holds the latest sample at time <= t; on a tie the most
 * recently started stroke (greatest (start time, stroke id)) is current.
 * Between the surrounding samples the position interpolates linearly as
 * x1 + (t - t1) / (t2 - t1) * (x2 - x1); after a stroke's last sample the
 * dot holds that position instead of jumping ahead.
 */
export function cursorAt(strokes: StrokeData[], t: number): Cursor | null {
  let best: { sampleT: number; startT: number; id: string; stroke: StrokeData; i: number } | null =
    null;
  for (const stroke of strokes) {
    const i = lastAtOrBefore(stroke.samples, t);
    if (i < 0) continue;
    const sampleT = stroke.samples[i][2];
    const startT = stroke.samples[0][2];
    const id = stroke.stroke_id;
    if (
      best === null ||
      sampleT > best.sampleT ||
      (sampleT === best.sampleT &&
        (startT > best.startT || (startT === best.startT && id > best.id)))
    ) {
      best = { sampleT, startT, id, stroke, i };
    }
  }
  if (best === null) return null;
  const { stroke, i } = best;
  const [x1, y1, t1] = stroke.samples[i];
  let x = x1;
  let y = y1;
  if (i + 1 < stroke.samples.length && t > t1) {
    const [x2, y2, t2] = stroke.samples[i + 1];
    x = x1 + ((t - t1) / (t2 - t1)) * (x2 - x1);
    y = y1 + ((t - t1) / (t2 - t1)) * (y2 - y1);
  }
  return { notebookId: stroke.notebook_id, page: stroke.page, x, y, strokeId: stroke.stroke_id };
}

export interface GrayPartition {
  /** Per stroke, the prefix written at or before t (omitted when empty). */
  visible: Array<[string, Sample[]]>;
  /** Per stroke, the samples still to come (omitted when empty). */
  grayed: Array<[string, Sample[]]>;
}

function byStartThenId(a: StrokeData, b: StrokeData): number {
  const d = a.samples[0][2] - b.samples[0][2];
  if (d !== 0) return d;
  return a.stroke_id < b.stroke_id ? -1 : a.stroke_id > b.stroke_id ? 1 : 0;
}

/** Sample-granular split: time <= t is visible, everything later grayed. */
export function grayPartition(strokes: StrokeData[], t: number): GrayPartition {
  const visible: Array<[string, Sample[]]> = [];
  const grayed: Array<[string, Sample[]]> = [];
  for (const stroke of [...strokes].sort(byStartThenId)) {
    const cut = lastAtOrBefore(stroke.samples, t) + 1;
    if (cut > 0) visible.push([stroke.stroke_id, stroke.samples.slice(0, cut)]);
    if (cut < stroke.samples.length) grayed.push([stroke.stroke_id, stroke.samples.slice(cut)]);
  }
  return { visible, grayed };
}

export interface GraySummary {
  fully_grayed: string[];
  splits: Record<string, number>;
}

/** Compact form matching the backend's replay export lines. */
export function graySummary(strokes: StrokeData[], t: number): GraySummary {
  const part = grayPartition(strokes, t);
  const visibleCounts = new Map(part.visible.map(([id, s]) => [id, s.length]));
  const fully_grayed = part.grayed
    .filter(([id]) => !visibleCounts.has(id))
    .map(([id]) => id)
    .sort();
  const splits: Record<string, number> = {};
  for (const [id] of part.grayed) {
    const count = visibleCounts.get(id);
    if (count !== undefined) splits[id] = count;
  }
  return { fully_grayed, splits };
}

export type MirrorState = "PLAYING" | "PAUSED";

/**
 * Local mirror of the server-side replay clock. Between event polls the UI
 * advances this clock to animate the dot; every server response re-anchors
 * it, so the mirror is never authoritative.
 */
export class ReplayMirror {
  virtualTime: number;
  speed: number;
  state: MirrorState = "PAUSED";

  constructor(
    readonly spanStart: number,
    readonly spanEnd: number,
    speed = 1,
  ) {
    this.virtualTime = spanStart;
    this.speed = speed;
  }

  get playing(): boolean {
    return this.state === "PLAYING";
  }

  play(): void {
    this.state = "PLAYING";
  }

  pause(): void {
    this.state = "PAUSED";
  }

  seek(t: number): number {
    const clamped = Math.min(Math.max(t, this.spanStart), this.spanEnd);
    if (t > this.spanEnd) this.state = "PAUSED";
    this.virtualTime = clamped;
    return clamped;
  }

  /** Advance by wall-clock milliseconds; pauses on reaching the end. */
  advance(wallMs: number): number {
    if (this.state !== "PLAYING" || wallMs <= 0) return this.virtualTime;
    const next = this.virtualTime + Math.floor(wallMs * this.speed);
    if (next >= this.spanEnd) {
      this.virtualTime = this.spanEnd;
      this.state = "PAUSED";
    } else {
      this.virtualTime = next;
    }
    return this.virtualTime;
  }
}
