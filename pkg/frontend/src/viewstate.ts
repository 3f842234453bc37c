// Client view state: a mirror of server data plus pure-UI toggles, and the
// generation gate that makes superseded replay polls harmless.

import type { Channel } from "./types.js";

export interface ViewState {
  notebookId: string | null;
  page: number;
  sessionId: string | null;
  grayMode: boolean;
  openPanes: Partial<Record<Channel, boolean>>;
}

export function initialViewState(): ViewState {
  return {
    notebookId: null,
    page: 0,
    sessionId: null,
    grayMode: true,
    openPanes: {},
  };
}

/**
 * Monotonic generation counter. Every seek begins a new generation; a poll
 * response is applied only if its generation is still the current one, so a
 * response that raced a later tap is discarded instead of rewinding the UI.
 */
export class PollGate {
  private generation = 0;

  /** Start a new generation (call on every seek). */
  begin(): number {
    this.generation += 1;
    return this.generation;
  }

  /** The generation in force; steady-state polls tag themselves with it. */
  get current(): number {
    return this.generation;
  }

  accepts(generation: number): boolean {
    return generation === this.generation;
  }
}
