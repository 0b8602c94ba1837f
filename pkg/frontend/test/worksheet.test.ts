import { describe, expect, it } from "vitest";
import {
  ClassificationWorksheet,
  WorksheetError,
  parseDatasetCsv,
  parseSubmissionCsv,
  submissionToCsv,
} from "../src/worksheet.js";

const HEADER = "ID,SPD,CV,RD,RDNORM,DIFFP,Bid_1,Bid_2,Bid_3,Bid_4";

function datasetCsv(n: number): string {
  const lines = [HEADER];
  for (let id = 1; id <= n; id++) {
    lines.push(`${id},0.2,0.08,0.22,0.3,0.02,${100 + id},${102 + id},${110 + id},${120 + id}`);
  }
  return lines.join("\n") + "\n";
}

describe("dataset parsing", () => {
  it("reads ids, screens and ranked bids", () => {
    const rows = parseDatasetCsv(datasetCsv(3));
    expect(rows).toHaveLength(3);
    expect(rows[0].id).toBe(1);
    expect(rows[0].screens.SPD).toBe(0.2);
    expect(rows[0].bids).toEqual([101, 103, 111, 121]);
  });

  it("turns empty screen cells into nulls instead of zeros", () => {
    const csv = `${HEADER}\n7,0.5,,1.2,,0.1,240.5,250,251,260\n`;
    const rows = parseDatasetCsv(csv);
    expect(rows[0].screens.CV).toBeNull();
    expect(rows[0].screens.RDNORM).toBeNull();
    expect(rows[0].screens.RD).toBe(1.2);
  });

  it("rejects a foreign header outright", () => {
    expect(() => parseDatasetCsv("a,b,c\n1,2,3\n")).toThrow(WorksheetError);
  });

  it("accepts semicolon-delimited exports", () => {
    const csv = `${HEADER.replace(/,/g, ";")}\n1;0.2;0.08;0.22;0.3;0.02;101;103;111;121\n`;
    const rows = parseDatasetCsv(csv);
    expect(rows[0].bids).toEqual([101, 103, 111, 121]);
  });
});

describe("incomplete classification", () => {
  it("blocks submission and counts the missing rows", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(4));
    sheet.setLabel(2, "suspicious");
    expect(sheet.canSubmit()).toBe(false);
    const reason = sheet.blockReason();
    expect(reason).toContain("3 of 4 tenders still unlabeled");
    expect(reason).toContain("1, 3, 4");
    expect(() => sheet.toSubmission()).toThrow(/3 of 4/);
  });

  it("previews at most eight missing ids", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(12));
    const reason = sheet.blockReason()!;
    expect(reason).toContain("12 of 12 tenders still unlabeled");
    expect(reason).toContain("1, 2, 3, 4, 5, 6, 7, 8");
    expect(reason).toContain("…");
    expect(reason).not.toContain("9");
  });

  it("unblocks once every tender carries a verdict", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(4));
    for (const row of sheet.rows) sheet.setLabel(row.id, "non-suspicious");
    expect(sheet.missingIds()).toEqual([]);
    expect(sheet.canSubmit()).toBe(true);
    expect(sheet.blockReason()).toBeNull();
    expect(Object.keys(sheet.toSubmission().labels)).toHaveLength(4);
  });

  it("toggles unlabeled rows to suspicious first, then back", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(1));
    expect(sheet.labelOf(1)).toBeNull();
    expect(sheet.toggle(1)).toBe("suspicious");
    expect(sheet.toggle(1)).toBe("non-suspicious");
    expect(sheet.toggle(1)).toBe("suspicious");
  });

  it("refuses labels for rows outside the dataset", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(2));
    expect(() => sheet.setLabel(99, "suspicious")).toThrow(/no dataset row/);
  });
});

describe("submission CSV round-trip", () => {
  it("serializes and reparses to an identical StaffSubmission", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(6));
    for (const row of sheet.rows) {
      sheet.setLabel(row.id, row.id % 2 === 0 ? "suspicious" : "non-suspicious");
    }
    const original = sheet.toSubmission();
    const csv = submissionToCsv(original);

    const again = new ClassificationWorksheet(datasetCsv(6));
    again.loadSubmissionCsv(csv);
    expect(again.toSubmission()).toEqual(original);
  });

  it("writes ids in ascending order with the canonical header", () => {
    const csv = submissionToCsv({ labels: { 3: "suspicious", 1: "non-suspicious" } });
    expect(csv).toBe("ID,predicted.response\n1,compete\n3,collude\n");
  });

  it("reads uppercase responses and quoted cells", () => {
    const { submission } = parseSubmissionCsv('ID,predicted.response\n"1","Collude"\n2,COMPETE\n');
    expect(submission.labels[1]).toBe("suspicious");
    expect(submission.labels[2]).toBe("non-suspicious");
  });

  it("rejects duplicate ids with the offending line number", () => {
    expect(() => parseSubmissionCsv("ID,predicted.response\n1,collude\n1,compete\n")).toThrow(
      /row 3: duplicate ID 1/,
    );
  });

  it("rejects responses outside collude/compete", () => {
    expect(() => parseSubmissionCsv("ID,predicted.response\n1,maybe\n")).toThrow(
      /collude or compete/,
    );
  });

  it("rejects uploads that label unknown ids", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(2));
    expect(() =>
      sheet.loadSubmissionCsv("ID,predicted.response\n1,collude\n2,compete\n9,collude\n"),
    ).toThrow(/unknown IDs: 9/);
  });

  it("replaces prior hand labels wholesale", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(2));
    sheet.setLabel(1, "suspicious");
    sheet.setLabel(2, "suspicious");
    sheet.loadSubmissionCsv("ID,predicted.response\n1,compete\n2,compete\n");
    expect(sheet.labelOf(1)).toBe("non-suspicious");
    expect(sheet.labelOf(2)).toBe("non-suspicious");
  });
});

describe("threshold slider", () => {
  const withProbas = (sheet: ClassificationWorksheet) => {
    sheet.loadSubmissionCsv(
      [
        "ID,predicted.response,proba",
        "1,collude,0.9",
        "2,compete,0.3",
        "3,collude,0.5",
        "4,compete,0.45",
      ].join("\n") + "\n",
    );
  };

  it("relabels every row as suspicious exactly when proba >= theta", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(4));
    withProbas(sheet);
    expect(sheet.hasProbabilities()).toBe(true);

    sheet.applyThreshold(0.5);
    expect(sheet.labelOf(1)).toBe("suspicious");
    expect(sheet.labelOf(2)).toBe("non-suspicious");
    expect(sheet.labelOf(3)).toBe("suspicious");
    expect(sheet.labelOf(4)).toBe("non-suspicious");
  });

  it("moves the boundary without another upload", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(4));
    withProbas(sheet);
    sheet.applyThreshold(0.95);
    expect(sheet.missingIds()).toEqual([]);
    expect(sheet.rows.every((row) => sheet.labelOf(row.id) === "non-suspicious")).toBe(true);
    sheet.applyThreshold(0);
    expect(sheet.rows.every((row) => sheet.labelOf(row.id) === "suspicious")).toBe(true);
  });

  it("flags a monotonically shrinking set as theta rises", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(4));
    withProbas(sheet);
    let previous = Number.POSITIVE_INFINITY;
    for (let k = 0; k <= 10; k++) {
      sheet.applyThreshold(k / 10);
      const flagged = sheet.rows.filter((row) => sheet.labelOf(row.id) === "suspicious").length;
      expect(flagged).toBeLessThanOrEqual(previous);
      previous = flagged;
    }
  });

  it("needs a probability column before it can relabel", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(2));
    sheet.loadSubmissionCsv("ID,predicted.response\n1,collude\n2,compete\n");
    expect(sheet.hasProbabilities()).toBe(false);
    expect(() => sheet.applyThreshold(0.5)).toThrow(/no probability column/);
  });

  it("rejects thresholds outside [0, 1] and bad probability cells", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(1));
    sheet.loadSubmissionCsv("ID,predicted.response,proba\n1,collude,1\n");
    expect(() => sheet.applyThreshold(1.5)).toThrow(/threshold must be in/);
    expect(() => sheet.applyThreshold(Number.NaN)).toThrow(/threshold must be in/);
    expect(() =>
      parseSubmissionCsv("ID,predicted.response,proba\n1,collude,1.2\n"),
    ).toThrow(/probability must be in/);
  });

  it("accepts the predicted.proba column name too", () => {
    const sheet = new ClassificationWorksheet(datasetCsv(1));
    sheet.loadSubmissionCsv("ID,predicted.response,predicted.proba\n1,compete,0.8\n");
    sheet.applyThreshold(0.8);
    expect(sheet.labelOf(1)).toBe("suspicious");
  });
});
