// State machine behind one tender's bid entry. The server view is the
// truth: a tender is biddable only while it appears in open_tenders and
// carries no bid of ours. The submitting flag is the optimistic lock that
// keeps a double click from posting twice.

import type { ParticipantView, TenderView } from "./types.js";

export type BidFormState =
  | { kind: "disabled"; reason: string }
  | { kind: "ready"; tender: TenderView }
  | { kind: "submitting" }
  | { kind: "submitted"; bid: string }
  | { kind: "error"; message: string; tender: TenderView };

export type BidPoster = (amount: string) => Promise<unknown>;

const BIDDING_PHASES = new Set(["part1", "part2"]);

export class BidFormModel {
  private submitting = false;
  private serverError: string | null = null;
  // echo of a bid the server accepted, shown until the next view refresh
  private acceptedBid: string | null = null;

  constructor(
    private view: ParticipantView,
    readonly tenderId: string,
  ) {}

  /** Swap in a fresh server view; a vanished tender closes the form. */
  refresh(view: ParticipantView): void {
    this.view = view;
  }

  private tender(): TenderView | undefined {
    return (this.view.open_tenders ?? []).find((t) => t.tender_id === this.tenderId);
  }

  state(): BidFormState {
    if (!BIDDING_PHASES.has(this.view.phase)) {
      return { kind: "disabled", reason: "bidding is closed in this phase" };
    }
    const tender = this.tender();
    if (!tender) {
      return { kind: "disabled", reason: "round closed, waiting for the award" };
    }
    if (tender.your_bid !== null) {
      return { kind: "submitted", bid: tender.your_bid };
    }
    if (this.acceptedBid !== null) {
      return { kind: "submitted", bid: this.acceptedBid };
    }
    if (this.submitting) {
      return { kind: "submitting" };
    }
    if (this.serverError) {
      return { kind: "error", message: this.serverError, tender };
    }
    return { kind: "ready", tender };
  }

  enabled(): boolean {
    const state = this.state();
    return state.kind === "ready" || state.kind === "error";
  }

  /**
   * Post the bid through the supplied transport. Returns true when the
   * server accepted it; a rejection lands in state() as an inline error.
   */
  async submit(post: BidPoster, amount: string): Promise<boolean> {
    if (!this.enabled()) return false;
    const trimmed = amount.trim();
    if (!trimmed) {
      this.serverError = "enter an amount first";
      return false;
    }
    this.submitting = true;
    this.serverError = null;
    try {
      await post(trimmed);
      this.acceptedBid = trimmed;
      return true;
    } catch (error) {
      this.serverError = error instanceof Error ? error.message : String(error);
      return false;
    } finally {
      this.submitting = false;
    }
  }
}
