// Thumbnail tooltip view-model: the server chunks segments into pages of
// six; this only tracks which page is open and routes clicks to the right
// miniature pane. Never re-chunks or reorders what the server sent.

import type { Channel, SegmentData } from "./types.js";

export const SLOTS_PER_PAGE = 6;

export class ThumbnailBar {
  private index = 0;

  constructor(readonly pages: SegmentData[][]) {
    for (const page of pages.slice(0, -1)) {
      if (page.length !== SLOTS_PER_PAGE) {
        throw new Error(`server chunking broken: full page has ${page.length} slots`);
      }
    }
  }

  get pageCount(): number {
    return this.pages.length;
  }

  get pageIndex(): number {
    return this.index;
  }

  get current(): SegmentData[] {
    return this.pages[this.index] ?? [];
  }

  /** Nav buttons are only needed when there is somewhere to go. */
  get prevEnabled(): boolean {
    return this.index > 0;
  }

  get nextEnabled(): boolean {
    return this.index < this.pages.length - 1;
  }

  next(): boolean {
    if (!this.nextEnabled) return false;
    this.index += 1;
    return true;
  }

  prev(): boolean {
    if (!this.prevEnabled) return false;
    this.index -= 1;
    return true;
  }
}

export interface MiniatureRequest {
  pane: Channel;
  segment: SegmentData;
  /** Where to open a time-based miniature, e.g. the clip offset. */
  seekOffsetMs?: number;
}

/** Clicking a thumbnail pops the document out in its channel's pane. */
export function miniatureFor(segment: SegmentData): MiniatureRequest {
  if (segment.channel === "MEDIA") {
    return { pane: "MEDIA", segment, seekOffsetMs: segment.clip_start ?? 0 };
  }
  return { pane: segment.channel, segment };
}
