// Shapes of the server's JSON, mirrored by hand. The server is the source
// of truth; the client only ever narrows, never invents fields.

export type Phase = "lobby" | "part1" | "part2" | "part3" | "debrief";

export type Verdict = "suspicious" | "non-suspicious";

export interface GroupMember {
  name: string;
  seat: number | null;
}

export interface TenderView {
  tender_id: string;
  part: number;
  year: number;
  round: number;
  location: string;
  contract_type: string;
  situation: string;
  your_cost: string;
  your_bid: string | null;
  deadline_seconds: number;
}

export interface ResultRow {
  tender_id: string;
  part: number;
  year: number;
  round: number;
  winner_seat: number | null;
  you_won: boolean;
  your_bid: string | null;
  your_margin: string | null;
}

export interface LeaderboardRow {
  participant: string;
  part1_points: string;
  part2_provisional: string;
  part2_revoked: string;
  correct_rate: string;
  fp_count: number;
  penalty_factor: string;
  eligible: "yes" | "no";
  final_points: string;
}

export interface ParticipantView {
  session_id: string;
  phase: Phase;
  participant_id: string;
  name: string;
  group_id: string;
  seat: number | null;
  village: string | null;
  group_members: GroupMember[];
  open_tenders?: TenderView[];
  results?: ResultRow[];
  dataset_rows?: number;
  submitted?: boolean;
  training_data_available?: boolean;
  leaderboard?: LeaderboardRow[];
  winners?: string[];
}

export interface LecturerState {
  session_id: string;
  phase: Phase;
  class_size: number;
  groups: Record<string, { codes: string[]; size: number }>;
  participants: { code: string; name: string; group_id: string; seat: number | null }[];
  missing_codes: string[];
  advance_blockers: string[];
  round_seconds: number;
  open_tenders?: string[];
  bids_in?: Record<string, number>;
  awarded?: number;
  tenders_in_part?: number;
  submission_count?: number;
  submitted_codes?: string[];
  chat_messages: number;
  leaderboard?: LeaderboardRow[];
  winners?: string[];
  truth?: Record<string, { tender_id: string; part: number }>;
  bid_history?: {
    tender_id: string;
    seat: number;
    bid: string;
    cost: string;
    below_cost: boolean;
    won: boolean;
  }[];
}

export interface FeedEntry {
  index: number;
  kind: string;
  group: string | null;
  data: Record<string, unknown>;
}

export interface ChatMessage {
  seq: number;
  name: string;
  seat: number | null;
  text: string;
  year: number;
  round: number;
}

export interface ChatThread {
  group_id: string;
  messages: ChatMessage[];
}
