// Thin typed wrapper over the server's HTTP API. Every client action goes
// through here; there is no other channel to the game.

import type {
  ChatThread,
  FeedEntry,
  LecturerState,
  ParticipantView,
  Verdict,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly blockers: string[] = [],
  ) {
    super(blockers.length ? `${detail} (${blockers.join("; ")})` : detail);
    this.name = "ApiError";
  }
}

export interface CreatedSession {
  session_id: string;
  lecturer_token: string;
  join_codes: string[];
  groups: Record<string, string[]>;
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly base: string,
    readonly sessionId: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private url(path: string): string {
    return `${this.base.replace(/\/+$/, "")}${path}`;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      let blockers: string[] = [];
      try {
        const payload = await response.json();
        if (typeof payload.detail === "string") detail = payload.detail;
        if (Array.isArray(payload.blockers)) blockers = payload.blockers;
      } catch {
        // non-JSON error body, keep the status line
      }
      throw new ApiError(response.status, detail, blockers);
    }
    return response;
  }

  private async getJson<T>(path: string, headers?: Record<string, string>): Promise<T> {
    const response = await this.request(path, { headers });
    return (await response.json()) as T;
  }

  private async postJson<T>(
    path: string,
    body: unknown,
    headers?: Record<string, string>,
  ): Promise<T> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json", ...headers },
      body: JSON.stringify(body),
    });
    return (await response.json()) as T;
  }

  // -- participant ---------------------------------------------------------

  join(code: string, name: string): Promise<{ group_id: string; name: string }> {
    return this.postJson(`/sessions/${this.sessionId}/join`, { code, name });
  }

  view(code: string): Promise<ParticipantView> {
    return this.getJson(`/sessions/${this.sessionId}/participants/${code}`);
  }

  submitBid(code: string, tenderId: string, amount: string): Promise<{ below_cost: boolean }> {
    return this.postJson(`/sessions/${this.sessionId}/bids`, {
      code,
      tender_id: tenderId,
      amount,
    });
  }

  postChat(code: string, text: string): Promise<{ seq: number }> {
    return this.postJson(`/sessions/${this.sessionId}/chat`, { code, text });
  }

  readChat(code: string): Promise<ChatThread> {
    return this.getJson(`/sessions/${this.sessionId}/chat?code=${encodeURIComponent(code)}`);
  }

  async datasetCsv(): Promise<string> {
    const response = await this.request(`/sessions/${this.sessionId}/part3/dataset.csv`);
    return response.text();
  }

  async trainingCsv(): Promise<string> {
    const response = await this.request(`/sessions/${this.sessionId}/training-data.csv`);
    return response.text();
  }

  submitClassification(
    code: string,
    labels: Record<number, Verdict>,
  ): Promise<{ rows: number; replaced: boolean }> {
    const wire: Record<string, Verdict> = {};
    for (const [id, verdict] of Object.entries(labels)) wire[id] = verdict;
    return this.postJson(`/sessions/${this.sessionId}/classifications`, { code, labels: wire });
  }

  async uploadSubmissionCsv(code: string, csv: string): Promise<{ rows: number; replaced: boolean }> {
    const response = await this.request(
      `/sessions/${this.sessionId}/classifications/csv?code=${encodeURIComponent(code)}`,
      { method: "POST", headers: { "content-type": "text/csv" }, body: csv },
    );
    return (await response.json()) as { rows: number; replaced: boolean };
  }

  events(after: number, opts?: { code?: string; token?: string; wait?: number }): Promise<FeedEntry[]> {
    const params = new URLSearchParams({ after: String(after) });
    if (opts?.code) params.set("code", opts.code);
    if (opts?.wait) params.set("wait", String(opts.wait));
    const headers = opts?.token ? { "X-Lecturer-Token": opts.token } : undefined;
    return this.getJson(`/sessions/${this.sessionId}/events?${params}`, headers);
  }

  // -- lecturer ------------------------------------------------------------

  private auth(token: string): Record<string, string> {
    return { "X-Lecturer-Token": token };
  }

  state(token: string): Promise<LecturerState> {
    return this.getJson(`/sessions/${this.sessionId}/state`, this.auth(token));
  }

  advance(token: string): Promise<{ phase: string }> {
    return this.postJson(`/sessions/${this.sessionId}/advance`, undefined, this.auth(token));
  }

  openRound(
    token: string,
    year: number,
    round?: number,
    groupId?: string,
  ): Promise<{ opened: string[] }> {
    return this.postJson(
      `/sessions/${this.sessionId}/rounds/open`,
      { year, round: round ?? null, group_id: groupId ?? null },
      this.auth(token),
    );
  }

  closeRound(
    token: string,
    year: number,
    round?: number,
    groupId?: string,
  ): Promise<{ awarded: string[] }> {
    return this.postJson(
      `/sessions/${this.sessionId}/rounds/close`,
      { year, round: round ?? null, group_id: groupId ?? null },
      this.auth(token),
    );
  }

  async exportArtifact(token: string, artifact: string): Promise<string> {
    const response = await this.request(
      `/sessions/${this.sessionId}/export/${artifact}`,
      { headers: this.auth(token) },
    );
    return response.text();
  }
}
