/** Line-delimited record handling matching the search side's dataset
 * layout: seed records end their answer with a "#### <number>" line;
 * reasoning paths end with "[ANS] <number>.". */
import * as fs from "fs";

export const ANSWER_MARKER = "[ANS]";
export const GROUND_TRUTH_MARKER = "####";
export const ANSWER_TOLERANCE = 1e-4;

export interface SeedSample {
  question: string;
  path: string;
  groundTruth: string;
}

export interface LabeledSample {
  question: string;
  path: string;
  correct: boolean;
}

export function parseNumeric(raw: string): number | null {
  let text = raw.trim();
  while (text && "$€£¥".includes(text[0])) text = text.slice(1).trimStart();
  text = text.replace(/\.+$/, "").replace(/,/g, "").trim();
  if (!/^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$/.test(text)) return null;
  const value = Number(text);
  return Number.isFinite(value) ? value : null;
}

export function extractAnswer(path: string): number | null {
  const idx = path.lastIndexOf(ANSWER_MARKER);
  if (idx < 0) return null;
  return parseNumeric(path.slice(idx + ANSWER_MARKER.length));
}

export function answersEqual(a: number | null, b: number | null): boolean {
  if (a === null || b === null) return false;
  return Math.abs(a - b) <= ANSWER_TOLERANCE;
}

export function readRecords(path: string): any[] {
  const lines = fs.readFileSync(path, "utf-8").split("\n");
  const records: any[] = [];
  lines.forEach((line, index) => {
    if (!line.trim()) return;
    try {
      records.push(JSON.parse(line));
    } catch (err) {
      throw new Error(`line ${index + 1}: malformed record: ${err}`);
    }
  });
  return records;
}

export function loadSeedSamples(path: string): SeedSample[] {
  return readRecords(path).map((record, index) => {
    if (typeof record.question !== "string" || typeof record.answer !== "string") {
      throw new Error(`record ${index + 1}: missing question/answer fields`);
    }
    const lines: string[] = record.answer.split("\n");
    const marker = lines[lines.length - 1] ?? "";
    if (!marker.startsWith(GROUND_TRUTH_MARKER)) {
      throw new Error(`record ${index + 1}: answer has no final ${GROUND_TRUTH_MARKER} line`);
    }
    return {
      question: record.question,
      path: lines.slice(0, -1).join("\n"),
      groundTruth: marker.slice(GROUND_TRUTH_MARKER.length).trim(),
    };
  });
}

/** Labeled solution samples for verifier training; every record must carry
 * an explicit boolean `correct` field. */
export function loadLabeledSamples(path: string): LabeledSample[] {
  return readRecords(path).map((record, index) => {
    if (typeof record.question !== "string" || typeof record.answer !== "string") {
      throw new Error(`record ${index + 1}: missing question/answer fields`);
    }
    if (typeof record.correct !== "boolean") {
      throw new Error(`record ${index + 1}: unlabeled sample (no 'correct' field)`);
    }
    const lines: string[] = record.answer.split("\n");
    const hasMarker = (lines[lines.length - 1] ?? "").startsWith(GROUND_TRUTH_MARKER);
    return {
      question: record.question,
      path: hasMarker ? lines.slice(0, -1).join("\n") : record.answer,
      correct: record.correct,
    };
  });
}

export function writeRecords(path: string, rows: object[]): void {
  fs.writeFileSync(path, rows.map((row) => JSON.stringify(row)).join("\n") + "\n", "utf-8");
}
