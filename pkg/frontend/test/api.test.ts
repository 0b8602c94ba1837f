import { describe, expect, it } from "vitest";
import { ApiClient, ApiError, type FetchLike } from "../src/api.js";

interface Captured {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | null;
}

function capture(
  reply: unknown = {},
  status = 200,
): { calls: Captured[]; fetchFn: FetchLike } {
  const calls: Captured[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      headers: Object.fromEntries(
        Object.entries((init?.headers as Record<string, string>) ?? {}),
      ),
      body: typeof init?.body === "string" ? init.body : null,
    });
    const text = typeof reply === "string" ? reply : JSON.stringify(reply);
    return new Response(text, { status });
  };
  return { calls, fetchFn };
}

describe("request shapes", () => {
  it("joins with a POSTed code and name", async () => {
    const { calls, fetchFn } = capture({ group_id: "G1", name: "Mara" });
    const api = new ApiClient("http://host:8000/", "demo", fetchFn);
    await api.join("AAAA1", "Mara");
    expect(calls[0].url).toBe("http://host:8000/sessions/demo/join");
    expect(calls[0].method).toBe("POST");
    expect(calls[0].headers["content-type"]).toBe("application/json");
    expect(JSON.parse(calls[0].body!)).toEqual({ code: "AAAA1", name: "Mara" });
  });

  it("posts bids as strings so the server owns money parsing", async () => {
    const { calls, fetchFn } = capture({ below_cost: false });
    const api = new ApiClient("", "demo", fetchFn);
    await api.submitBid("AAAA1", "G1-P1-Y1-R1", "240.50");
    expect(calls[0].url).toBe("/sessions/demo/bids");
    expect(JSON.parse(calls[0].body!)).toEqual({
      code: "AAAA1",
      tender_id: "G1-P1-Y1-R1",
      amount: "240.50",
    });
  });

  it("sends classification labels keyed by string ids", async () => {
    const { calls, fetchFn } = capture({ rows: 2, replaced: false });
    const api = new ApiClient("", "demo", fetchFn);
    await api.submitClassification("AAAA1", { 1: "suspicious", 2: "non-suspicious" });
    expect(JSON.parse(calls[0].body!)).toEqual({
      code: "AAAA1",
      labels: { "1": "suspicious", "2": "non-suspicious" },
    });
  });

  it("uploads submission CSVs verbatim as text/csv", async () => {
    const { calls, fetchFn } = capture({ rows: 2, replaced: true });
    const api = new ApiClient("", "demo", fetchFn);
    const csv = "ID,predicted.response\n1,collude\n2,compete\n";
    await api.uploadSubmissionCsv("AA A1", csv);
    expect(calls[0].url).toBe("/sessions/demo/classifications/csv?code=AA%20A1");
    expect(calls[0].method).toBe("POST");
    expect(calls[0].headers["content-type"]).toBe("text/csv");
    expect(calls[0].body).toBe(csv);
  });

  it("threads the cursor and identity into the event feed query", async () => {
    const { calls, fetchFn } = capture([]);
    const api = new ApiClient("", "demo", fetchFn);
    await api.events(41, { code: "AAAA1", wait: 25 });
    expect(calls[0].url).toBe("/sessions/demo/events?after=41&code=AAAA1&wait=25");
  });

  it("fetches the dataset as raw text", async () => {
    const { calls, fetchFn } = capture("ID,SPD\n1,0.2\n");
    const api = new ApiClient("", "demo", fetchFn);
    const text = await api.datasetCsv();
    expect(calls[0].url).toBe("/sessions/demo/part3/dataset.csv");
    expect(text).toBe("ID,SPD\n1,0.2\n");
  });
});

describe("lecturer auth", () => {
  it.each([
    ["state", (api: ApiClient) => api.state("tok"), "GET", "/sessions/demo/state"],
    ["advance", (api: ApiClient) => api.advance("tok"), "POST", "/sessions/demo/advance"],
    [
      "export",
      (api: ApiClient) => api.exportArtifact("tok", "leaderboard"),
      "GET",
      "/sessions/demo/export/leaderboard",
    ],
  ])("sends the token header on %s", async (_name, call, method, path) => {
    const { calls, fetchFn } = capture({ phase: "lobby" });
    const api = new ApiClient("", "demo", fetchFn);
    await call(api);
    expect(calls[0].url).toBe(path);
    expect(calls[0].method).toBe(method);
    expect(calls[0].headers["X-Lecturer-Token"]).toBe("tok");
  });

  it("opens a whole year when no round is picked", async () => {
    const { calls, fetchFn } = capture({ opened: [] });
    const api = new ApiClient("", "demo", fetchFn);
    await api.openRound("tok", 2);
    expect(calls[0].url).toBe("/sessions/demo/rounds/open");
    expect(JSON.parse(calls[0].body!)).toEqual({ year: 2, round: null, group_id: null });
    expect(calls[0].headers["X-Lecturer-Token"]).toBe("tok");
  });

  it("closes one round for one group when asked", async () => {
    const { calls, fetchFn } = capture({ awarded: [] });
    const api = new ApiClient("", "demo", fetchFn);
    await api.closeRound("tok", 3, 2, "G1");
    expect(JSON.parse(calls[0].body!)).toEqual({ year: 3, round: 2, group_id: "G1" });
  });
});

describe("error handling", () => {
  it("lifts detail and blockers out of a JSON error body", async () => {
    const { fetchFn } = capture(
      { detail: "cannot advance", blockers: ["2 join codes unused", "bids missing"] },
      409,
    );
    const api = new ApiClient("", "demo", fetchFn);
    const err = await api.advance("tok").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(409);
    expect(apiErr.detail).toBe("cannot advance");
    expect(apiErr.blockers).toEqual(["2 join codes unused", "bids missing"]);
    expect(apiErr.message).toBe("cannot advance (2 join codes unused; bids missing)");
  });

  it("falls back to the status line on a non-JSON error body", async () => {
    const { fetchFn } = capture("<html>gateway timeout</html>", 504);
    const api = new ApiClient("", "demo", fetchFn);
    const err = await api.view("AAAA1").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).message).toBe("HTTP 504");
  });

  it("strips trailing slashes from the base url", async () => {
    const { calls, fetchFn } = capture({});
    const api = new ApiClient("http://host:8000///", "demo", fetchFn);
    await api.view("AAAA1");
    expect(calls[0].url).toBe("http://host:8000/sessions/demo/participants/AAAA1");
  });
});
