// Application wiring: calendar flow, notebook replay view, thumbnail bar,
// miniature panes. One UI thread, async fetches, at most one in-flight
// replay poll; stale responses are dropped by the PollGate.

import { ApiClient } from "./api.js";
import { CalendarFlow } from "./calendar.js";
import { ReplayMirror } from "./replay.js";
import { drawPage, planPage, PAGE_ASPECT } from "./render.js";
import { miniatureFor, ThumbnailBar } from "./thumbnails.js";
import { initialViewState, PollGate } from "./viewstate.js";
import type { Channel, EventData, Snapshot, StrokeData } from "./types.js";

const POLL_MS = 250;
const TAP_RADIUS = 0.02;

const api = new ApiClient("");
const view = initialViewState();
const gate = new PollGate();
const flow = new CalendarFlow();

let strokes: StrokeData[] = [];
let mirror: ReplayMirror | null = null;
let bar: ThumbnailBar | null = null;
let lastWall = 0;
let lastPolledVt = 0;
let polling = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

// -- calendar (three-level flow) ---------------------------------------------

function renderCalendar(): void {
  const daysBox = el<HTMLDivElement>("calendar-days");
  const lecturesBox = el<HTMLDivElement>("calendar-lectures");
  const docsBox = el<HTMLDivElement>("calendar-documents");
  daysBox.hidden = flow.level !== "days";
  lecturesBox.hidden = flow.level !== "lectures";
  docsBox.hidden = flow.level !== "documents";
  el<HTMLButtonElement>("calendar-back").disabled = flow.level === "days";

  if (flow.level === "days") {
    daysBox.replaceChildren(
      ...flow.days.map((day) => {
        const button = document.createElement("button");
        button.className = "day";
        button.textContent = `${day.date} (${day.sessions.length})`;
        button.onclick = () => {
          flow.openDay(day.date);
          renderCalendar();
        };
        return button;
      }),
    );
    if (flow.days.length === 0) {
      daysBox.textContent = "no lessons in this range";
    }
  } else if (flow.level === "lectures" && flow.selectedDate) {
    const lectures = flow.lecturesOf(flow.selectedDate);
    lecturesBox.replaceChildren(
      ...lectures.map((lecture) => {
        const row = document.createElement("button");
        row.className = "lecture";
        row.textContent = `${lecture.course_name} — ${new Date(lecture.start).toUTCString()}`;
        row.onclick = async () => {
          const docs = await api.documents(lecture.session_id);
          flow.openLecture(lecture, docs.documents);
          view.sessionId = lecture.session_id;
          renderCalendar();
        };
        return row;
      }),
    );
    if (lectures.length === 0) {
      lecturesBox.textContent = "nothing scheduled this day";
    }
  } else if (flow.level === "documents") {
    docsBox.replaceChildren(
      ...flow.documents.map((doc) => {
        const row = document.createElement("div");
        row.className = "document";
        const link = document.createElement("a");
        link.href = doc.asset;
        link.textContent = `[${doc.channel}] ${doc.title}`;
        link.target = "_blank";
        row.append(link);
        return row;
      }),
    );
    if (flow.documents.length === 0) {
      docsBox.textContent = "no shared documents for this lesson";
    }
  }
}

async function loadCalendar(): Promise<void> {
  const from = el<HTMLInputElement>("calendar-from").value;
  const to = el<HTMLInputElement>("calendar-to").value;
  const response = await api.calendar(from, to);
  flow.loadDays(response.days);
  renderCalendar();
}

// -- notebook replay view ------------------------------------------------------

function canvas(): HTMLCanvasElement {
  return el<HTMLCanvasElement>("page-canvas");
}

function redraw(): void {
  const c = canvas();
  const ctx = c.getContext("2d");
  if (!ctx || !mirror) return;
  drawPage(ctx, planPage(strokes, mirror.virtualTime, view.grayMode), c.width, c.height);
  el<HTMLSpanElement>("virtual-time").textContent = String(mirror.virtualTime);
  el<HTMLButtonElement>("play-pause").textContent = mirror.playing ? "pause" : "play";
}

function applyEvents(events: EventData[]): void {
  for (const event of events) {
    updatePane(event);
  }
}

function paneBox(channel: Channel): HTMLDivElement {
  return el<HTMLDivElement>(`pane-${channel.toLowerCase()}`);
}

function updatePane(event: EventData): void {
  const box = paneBox(event.channel);
  switch (event.kind) {
    case "SlideChanged":
      box.textContent = `${event.media_ref} — slide ${(event.slide_index ?? 0) + 1}`;
      break;
    case "DocumentLoaded":
      box.textContent = `${event.title ?? event.media_ref} (loaded)`;
      break;
    case "DocumentUnloaded":
      box.textContent = "—";
      break;
    case "WebNavigated": {
      const link = document.createElement("a");
      link.href = event.url ?? "#";
      link.target = "_blank";
      link.textContent = event.url ?? "";
      box.replaceChildren("preview: ", link);
      break;
    }
    case "MediaPlay":
      box.textContent = `${event.media_ref} ▶ ${event.position_ms} ms`;
      break;
    case "MediaPause":
      box.textContent = `${event.media_ref} ⏸ ${event.position_ms} ms`;
      break;
    case "WhiteboardStrokeAdded": {
      const n = Number(box.dataset.count ?? "0") + 1;
      box.dataset.count = String(n);
      box.textContent = `${n} stroke${n === 1 ? "" : "s"}`;
      break;
    }
    case "AudioStarted":
      box.textContent = `recording ${event.audio_ref}`;
      break;
    case "AudioStopped":
      box.textContent = "recording stopped";
      break;
  }
}

function applySnapshot(snapshot: Snapshot): void {
  paneBox("SLIDES").textContent = snapshot.slides
    ? `${snapshot.slides.media_ref} — slide ${snapshot.slides.slide_index + 1}`
    : "—";
  paneBox("WEB").textContent = snapshot.web ? snapshot.web.url : "—";
  paneBox("MEDIA").textContent = snapshot.media
    ? `${snapshot.media.media_ref} ${snapshot.media.playing ? "▶" : "⏸"} ${snapshot.media.position_ms} ms`
    : "—";
  const wb = paneBox("WHITEBOARD");
  wb.dataset.count = String(snapshot.whiteboard.stroke_count);
  wb.textContent = `${snapshot.whiteboard.stroke_count} strokes`;
  paneBox("AUDIO").textContent = snapshot.audio
    ? `recording ${snapshot.audio.audio_ref} @ ${snapshot.audio.offset_ms} ms`
    : "—";
}

async function pollOnce(generation: number): Promise<void> {
  if (!mirror || !view.sessionId || polling) return;
  polling = true;
  try {
    const from = lastPolledVt;
    const to = mirror.virtualTime;
    if (to > from) {
      const response = await api.events(view.sessionId, { from, to });
      if (!gate.accepts(generation)) return; // superseded by a newer seek
      applyEvents(response.events);
      lastPolledVt = to;
    }
  } finally {
    polling = false;
  }
}

async function seekTo(t: number): Promise<void> {
  if (!mirror || !view.sessionId) return;
  const generation = gate.begin();
  const clamped = mirror.seek(t);
  lastPolledVt = clamped;
  const snapshot = await api.stateAt(view.sessionId, clamped);
  if (!gate.accepts(generation)) return;
  applySnapshot(snapshot);
  mirror.play();
  redraw();
}

async function onCanvasTap(eventX: number, eventY: number): Promise<void> {
  if (!view.notebookId) return;
  const rect = canvas().getBoundingClientRect();
  const x = (eventX - rect.left) / rect.width;
  const y = (eventY - rect.top) / rect.height;
  if (x < 0 || x >= 1 || y < 0 || y >= 1) return;
  const response = await api.lookup(view.notebookId, view.page, x, y, TAP_RADIUS);
  if (response.hit === null) {
    flashHint("nothing written there");
    return; // miss: no-op beyond the hint
  }
  await seekTo(response.hit.at);
}

function flashHint(text: string): void {
  const hint = el<HTMLSpanElement>("tap-hint");
  hint.textContent = text;
  window.setTimeout(() => {
    if (hint.textContent === text) hint.textContent = "";
  }, 1200);
}

function renderThumbnails(): void {
  const box = el<HTMLDivElement>("thumbnail-slots");
  const prev = el<HTMLButtonElement>("thumb-prev");
  const next = el<HTMLButtonElement>("thumb-next");
  if (!bar) {
    box.replaceChildren();
    prev.disabled = next.disabled = true;
    return;
  }
  prev.disabled = !bar.prevEnabled;
  next.disabled = !bar.nextEnabled;
  box.replaceChildren(
    ...bar.current.map((segment) => {
      const slot = document.createElement("button");
      slot.className = "thumb";
      slot.textContent =
        segment.channel === "SLIDES"
          ? `slide ${(segment.slide_index ?? 0) + 1}`
          : segment.channel === "WEB"
            ? (segment.url ?? "web")
            : segment.channel === "MEDIA"
              ? `${segment.media_ref} @ ${segment.clip_start} ms`
              : `board (${segment.stroke_count})`;
      slot.title = `${segment.channel} ${segment.start}..${segment.end}`;
      slot.onclick = () => {
        const request = miniatureFor(segment);
        view.openPanes[request.pane] = true;
        paneBox(request.pane).textContent = slot.textContent;
        void seekTo(segment.start);
      };
      return slot;
    }),
  );
}

async function loadNotebookPage(): Promise<void> {
  view.notebookId = el<HTMLInputElement>("notebook-id").value.trim();
  view.page = Number(el<HTMLInputElement>("notebook-page").value) || 0;
  view.sessionId = el<HTMLInputElement>("session-id").value.trim() || view.sessionId;
  if (!view.notebookId || !view.sessionId) {
    flashHint("pick a lesson and a notebook first");
    return;
  }
  const [strokesResponse, segmentsResponse, span] = await Promise.all([
    api.pageStrokes(view.notebookId, view.page),
    api.pageSegments(view.notebookId, view.page),
    api.events(view.sessionId, { limit: 1 }),
  ]);
  strokes = strokesResponse.strokes;
  bar = new ThumbnailBar(segmentsResponse.pages);
  const total = await api.events(view.sessionId, { limit: 1, offset: Math.max(span.total - 1, 0) });
  const first = span.events[0]?.at ?? 0;
  const last = total.events[0]?.at ?? first;
  mirror = new ReplayMirror(first, last, currentSpeed());
  lastPolledVt = first;
  renderThumbnails();
  redraw();
}

function currentSpeed(): number {
  return Number(el<HTMLSelectElement>("speed").value);
}

function startLoop(): void {
  lastWall = performance.now();
  window.setInterval(() => {
    const now = performance.now();
    const elapsed = now - lastWall;
    lastWall = now;
    if (mirror && mirror.playing) {
      mirror.advance(elapsed);
      redraw();
      void pollOnce(gate.current);
    }
  }, POLL_MS);
}

export function boot(): void {
  el<HTMLButtonElement>("calendar-load").onclick = () => void loadCalendar();
  el<HTMLButtonElement>("calendar-back").onclick = () => {
    flow.back();
    renderCalendar();
  };
  el<HTMLButtonElement>("notebook-load").onclick = () => void loadNotebookPage();
  el<HTMLButtonElement>("play-pause").onclick = () => {
    if (!mirror) return;
    if (mirror.playing) mirror.pause();
    else mirror.play();
    redraw();
  };
  el<HTMLSelectElement>("speed").onchange = () => {
    if (mirror) mirror.speed = currentSpeed();
  };
  el<HTMLInputElement>("gray-mode").onchange = (e) => {
    view.grayMode = (e.target as HTMLInputElement).checked;
    redraw();
  };
  el<HTMLButtonElement>("thumb-prev").onclick = () => {
    bar?.prev();
    renderThumbnails();
  };
  el<HTMLButtonElement>("thumb-next").onclick = () => {
    bar?.next();
    renderThumbnails();
  };
  canvas().onclick = (e) => void onCanvasTap(e.clientX, e.clientY);
  const c = canvas();
  c.height = Math.round(c.width * PAGE_ASPECT);
  startLoop();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
