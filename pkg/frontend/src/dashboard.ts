// Lecturer-side view model: phase and round controls map 1:1 to the
// server's lecturer endpoints, so this class only decides what is clickable
// and what the labels say.

import type { LecturerState, Phase } from "./types.js";

const NEXT_PHASE: Record<Phase, Phase | null> = {
  lobby: "part1",
  part1: "part2",
  part2: "part3",
  part3: "debrief",
  debrief: null,
};

export class LecturerDashboard {
  constructor(private state: LecturerState) {}

  refresh(state: LecturerState): void {
    this.state = state;
  }

  phase(): Phase {
    return this.state.phase;
  }

  joinedCount(): number {
    return this.state.participants.length;
  }

  missingCodes(): string[] {
    return this.state.missing_codes;
  }

  advanceTarget(): Phase | null {
    return NEXT_PHASE[this.state.phase];
  }

  advanceBlockers(): string[] {
    return this.state.advance_blockers;
  }

  canAdvance(): boolean {
    return this.advanceTarget() !== null && this.advanceBlockers().length === 0;
  }

  /** Bids received vs. bids possible across the currently open tenders. */
  bidProgress(): { got: number; expected: number } {
    const bidsIn = this.state.bids_in ?? {};
    let got = 0;
    let expected = 0;
    for (const tenderId of Object.keys(bidsIn)) {
      got += bidsIn[tenderId];
      const groupId = tenderId.split("-")[0];
      expected += this.state.groups[groupId]?.size ?? 0;
    }
    return { got, expected };
  }

  closeButtonLabel(): string {
    const { got, expected } = this.bidProgress();
    return expected > 0 ? `close round (${got}/${expected} bids in)` : "close round";
  }

  submissionProgress(): { got: number; expected: number } {
    return { got: this.state.submission_count ?? 0, expected: this.state.class_size };
  }

  /** The leaderboard stays sealed until the debrief. */
  canReveal(): boolean {
    return this.state.phase === "debrief";
  }

  revealDisabledReason(): string | null {
    if (this.canReveal()) return null;
    return "the leaderboard is revealed at the debrief, after scoring";
  }
}
