// Part-3 workspace: the anonymized dataset, one verdict per tender, and the
// submission CSV codec. Everything here is validated client-side before a
// byte leaves the browser, mirroring the server's rules.

import type { Verdict } from "./types.js";

export const SCREEN_NAMES = ["SPD", "CV", "RD", "RDNORM", "DIFFP"] as const;
export type ScreenName = (typeof SCREEN_NAMES)[number];

const DATASET_HEADER = "ID,SPD,CV,RD,RDNORM,DIFFP,Bid_1,Bid_2,Bid_3,Bid_4";
const SUBMISSION_HEADER = ["ID", "predicted.response"];
const RESPONSE_OF: Record<Verdict, string> = {
  suspicious: "collude",
  "non-suspicious": "compete",
};
const VERDICT_OF: Record<string, Verdict> = {
  collude: "suspicious",
  compete: "non-suspicious",
};
const PROBA_COLUMNS = new Set(["proba", "probability", "predicted.proba"]);

export class WorksheetError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "WorksheetError";
  }
}

export interface DatasetRow {
  id: number;
  screens: Record<ScreenName, number | null>;
  bids: number[];
}

/** A complete classification, ready to post. */
export interface StaffSubmission {
  labels: Record<number, Verdict>;
}

function splitCells(line: string, delimiter: string): string[] {
  // good enough for the game's CSVs: quotes wrap whole cells, never nest
  return line.split(delimiter).map((cell) => {
    const trimmed = cell.trim();
    return trimmed.startsWith('"') && trimmed.endsWith('"') && trimmed.length >= 2
      ? trimmed.slice(1, -1)
      : trimmed;
  });
}

function sniffDelimiter(header: string): string {
  return (header.match(/;/g) ?? []).length > (header.match(/,/g) ?? []).length ? ";" : ",";
}

function parseId(raw: string, lineNo: number): number {
  if (!/^\d+$/.test(raw)) {
    throw new WorksheetError(`row ${lineNo}: ID must be a positive integer, got "${raw}"`);
  }
  return Number(raw);
}

export function parseDatasetCsv(text: string): DatasetRow[] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() === "") {
    throw new WorksheetError("empty dataset CSV");
  }
  const delimiter = sniffDelimiter(lines[0]);
  const header = splitCells(lines[0], delimiter);
  if (header.join(",") !== DATASET_HEADER) {
    throw new WorksheetError(`unexpected dataset header: ${lines[0]}`);
  }
  const rows: DatasetRow[] = [];
  lines.slice(1).forEach((line, i) => {
    if (!line.trim()) return;
    const cells = splitCells(line, delimiter);
    const id = parseId(cells[0] ?? "", i + 2);
    const screens = {} as Record<ScreenName, number | null>;
    SCREEN_NAMES.forEach((name, k) => {
      const cell = cells[k + 1] ?? "";
      screens[name] = cell === "" ? null : Number(cell);
    });
    const bids: number[] = [];
    for (let k = 6; k < 10; k++) {
      const cell = cells[k] ?? "";
      if (cell !== "") bids.push(Number(cell));
    }
    rows.push({ id, screens, bids });
  });
  return rows;
}

export class ClassificationWorksheet {
  readonly rows: DatasetRow[];
  private labels = new Map<number, Verdict>();
  private probabilities = new Map<number, number>();

  constructor(datasetCsv: string) {
    this.rows = parseDatasetCsv(datasetCsv);
  }

  private requireRow(id: number): void {
    if (!this.rows.some((row) => row.id === id)) {
      throw new WorksheetError(`no dataset row with ID ${id}`);
    }
  }

  labelOf(id: number): Verdict | null {
    return this.labels.get(id) ?? null;
  }

  setLabel(id: number, verdict: Verdict): void {
    this.requireRow(id);
    this.labels.set(id, verdict);
  }

  /** Unlabeled rows cycle to suspicious first; a second toggle flips back. */
  toggle(id: number): Verdict {
    this.requireRow(id);
    const next: Verdict = this.labels.get(id) === "suspicious" ? "non-suspicious" : "suspicious";
    this.labels.set(id, next);
    return next;
  }

  missingIds(): number[] {
    return this.rows.map((row) => row.id).filter((id) => !this.labels.has(id));
  }

  canSubmit(): boolean {
    return this.rows.length > 0 && this.missingIds().length === 0;
  }

  /** Human-readable reason the submit button is greyed out, else null. */
  blockReason(): string | null {
    const missing = this.missingIds();
    if (missing.length === 0) return null;
    const preview = missing.slice(0, 8).join(", ");
    const tail = missing.length > 8 ? ", …" : "";
    return `${missing.length} of ${this.rows.length} tenders still unlabeled: ${preview}${tail}`;
  }

  toSubmission(): StaffSubmission {
    const reason = this.blockReason();
    if (reason !== null) {
      throw new WorksheetError(reason);
    }
    const labels: Record<number, Verdict> = {};
    for (const row of this.rows) {
      labels[row.id] = this.labels.get(row.id)!;
    }
    return { labels };
  }

  /**
   * Load a submission CSV (optionally with a probability column) onto the
   * worksheet. Labels are replaced wholesale; probabilities stick around so
   * the threshold slider can relabel without another upload.
   */
  loadSubmissionCsv(text: string): void {
    const { submission, probabilities } = parseSubmissionCsv(text);
    const known = new Set(this.rows.map((row) => row.id));
    const foreign = Object.keys(submission.labels)
      .map(Number)
      .filter((id) => !known.has(id));
    if (foreign.length > 0) {
      throw new WorksheetError(`upload labels unknown IDs: ${foreign.join(", ")}`);
    }
    this.labels = new Map(
      Object.entries(submission.labels).map(([id, verdict]) => [Number(id), verdict]),
    );
    this.probabilities = probabilities;
  }

  hasProbabilities(): boolean {
    return this.rows.length > 0 && this.rows.every((row) => this.probabilities.has(row.id));
  }

  /** Relabel every row as suspicious exactly when its probability >= theta. */
  applyThreshold(theta: number): void {
    if (!(theta >= 0 && theta <= 1)) {
      throw new WorksheetError(`threshold must be in [0, 1], got ${theta}`);
    }
    if (!this.hasProbabilities()) {
      throw new WorksheetError("no probability column uploaded yet");
    }
    for (const row of this.rows) {
      const proba = this.probabilities.get(row.id)!;
      this.labels.set(row.id, proba >= theta ? "suspicious" : "non-suspicious");
    }
  }
}

export function parseSubmissionCsv(text: string): {
  submission: StaffSubmission;
  probabilities: Map<number, number>;
} {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) {
    throw new WorksheetError("submission CSV needs a header and at least one row");
  }
  const delimiter = sniffDelimiter(lines[0]);
  const header = splitCells(lines[0], delimiter);
  if (header[0] !== SUBMISSION_HEADER[0] || header[1] !== SUBMISSION_HEADER[1]) {
    throw new WorksheetError(
      `submission header must start with ${SUBMISSION_HEADER.join(",")}, got "${lines[0]}"`,
    );
  }
  const probaColumn = header.findIndex((name) => PROBA_COLUMNS.has(name.toLowerCase()));
  const labels: Record<number, Verdict> = {};
  const probabilities = new Map<number, number>();
  lines.slice(1).forEach((line, i) => {
    if (!line.trim()) return;
    const lineNo = i + 2;
    const cells = splitCells(line, delimiter);
    const id = parseId(cells[0] ?? "", lineNo);
    if (id in labels) {
      throw new WorksheetError(`row ${lineNo}: duplicate ID ${id}`);
    }
    const response = (cells[1] ?? "").toLowerCase();
    const verdict = VERDICT_OF[response];
    if (!verdict) {
      throw new WorksheetError(`row ${lineNo}: response must be collude or compete, got "${cells[1]}"`);
    }
    labels[id] = verdict;
    if (probaColumn >= 0) {
      const raw = cells[probaColumn] ?? "";
      const proba = Number(raw);
      if (raw === "" || !Number.isFinite(proba) || proba < 0 || proba > 1) {
        throw new WorksheetError(`row ${lineNo}: probability must be in [0, 1], got "${raw}"`);
      }
      probabilities.set(id, proba);
    }
  });
  return { submission: { labels }, probabilities };
}

export function submissionToCsv(submission: StaffSubmission): string {
  const ids = Object.keys(submission.labels)
    .map(Number)
    .sort((a, b) => a - b);
  const lines = [SUBMISSION_HEADER.join(",")];
  for (const id of ids) {
    lines.push(`${id},${RESPONSE_OF[submission.labels[id]]}`);
  }
  return lines.join("\n") + "\n";
}
