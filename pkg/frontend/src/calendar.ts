// The mobile access flow: calendar -> lectures of a day -> documents of a
// lecture. A small state machine the views render from; data always comes
// from the API (unshared documents simply never arrive).

import type { CalendarDayData, DocumentData, LectureEntry } from "./types.js";

export type CalendarLevel = "days" | "lectures" | "documents";

export class CalendarFlow {
  level: CalendarLevel = "days";
  days: CalendarDayData[] = [];
  selectedDate: string | null = null;
  selectedLecture: LectureEntry | null = null;
  documents: DocumentData[] = [];

  loadDays(days: CalendarDayData[]): void {
    this.days = days;
    this.level = "days";
    this.selectedDate = null;
    this.selectedLecture = null;
    this.documents = [];
  }

  /** Lectures of one day; an unlisted date is a valid empty day. */
  lecturesOf(date: string): LectureEntry[] {
    return this.days.find((d) => d.date === date)?.sessions ?? [];
  }

  openDay(date: string): LectureEntry[] {
    this.selectedDate = date;
    this.selectedLecture = null;
    this.documents = [];
    this.level = "lectures";
    return this.lecturesOf(date);
  }

  openLecture(lecture: LectureEntry, documents: DocumentData[]): void {
    if (this.level === "days") {
      throw new Error("open a day before a lecture");
    }
    this.selectedLecture = lecture;
    this.documents = documents;
    this.level = "documents";
  }

  back(): CalendarLevel {
    if (this.level === "documents") {
      this.level = "lectures";
      this.selectedLecture = null;
      this.documents = [];
    } else if (this.level === "lectures") {
      this.level = "days";
      this.selectedDate = null;
    }
    return this.level;
  }
}
