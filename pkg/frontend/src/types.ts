// Shapes of the access-api's canonical JSON. Field names mirror the wire
// format exactly (snake_case); all times are integer epoch milliseconds.

export type Channel = "SLIDES" | "WEB" | "MEDIA" | "WHITEBOARD" | "AUDIO";

export const ALL_CHANNELS: Channel[] = ["SLIDES", "WEB", "MEDIA", "WHITEBOARD", "AUDIO"];

/** One pen sample: [x, y, t] with x, y in [0, 1). */
export type Sample = [number, number, number];

export interface StrokeData {
  stroke_id: string;
  notebook_id: string;
  page: number;
  samples: Sample[];
}

export interface Snapshot {
  at: number;
  slides: { media_ref: string; slide_index: number } | null;
  web: { url: string } | null;
  media: { media_ref: string; position_ms: number; playing: boolean } | null;
  whiteboard: { stroke_count: number };
  audio: { audio_ref: string; offset_ms: number } | null;
}

export interface SegmentData {
  channel: Channel;
  start: number;
  end: number;
  session_id?: string;
  media_ref?: string;
  slide_index?: number;
  url?: string;
  clip_start?: number;
  clip_end?: number;
  stroke_count?: number;
}

export interface EventData {
  seq: number;
  session_id: string;
  channel: Channel;
  at: number;
  kind: string;
  media_ref?: string;
  title?: string;
  slide_index?: number;
  url?: string;
  position_ms?: number;
  audio_ref?: string;
  wb_stroke?: StrokeData;
}

export interface LectureEntry {
  session_id: string;
  course_name: string;
  start: number;
  end: number;
}

export interface CalendarDayData {
  date: string; // YYYY-MM-DD
  sessions: LectureEntry[];
}

export interface DocumentData {
  channel: Channel;
  media_ref: string;
  title: string;
  asset: string;
}

export interface ThumbnailPagesData {
  notebook_id: string;
  page: number;
  total_segments: number;
  pages: SegmentData[][];
}

export interface LookupHit {
  stroke_id: string;
  at: number;
}
