/** Wire types for the v1 session API. Shapes mirror the server schemas. */

export type EventKind = "annotate" | "highlight" | "overlap" | "minimize" | "close";

export interface InteractionEventWire {
  kind: EventKind;
  subject: string;
  object?: string;
  context?: string;
  timestamp: number;
}

export interface SatisfactionSnapshot {
  v: 1;
  level: number;
  satisfied: number;
  total: number;
  ratio: number;
  positive: number;
  negative: number;
  stale: boolean;
}

export interface SupernodeSummary {
  gid: number;
  members: string[];
  size: number;
  top_terms: [string, number][];
}

export interface SummaryResponse {
  v: 1;
  level: number;
  supernodes: SupernodeSummary[];
  superedges: number[][];
  satisfaction: { satisfied: number; total: number; ratio: number };
  f_prob: number;
  stale: boolean;
}

export interface LayoutResponse {
  v: 1;
  level: number;
  positions: Record<string, [number, number]>;
  supernodes: Record<string, [number, number]>;
  config: Record<string, unknown>;
}

export interface GroupMember {
  id: string;
  text: string;
  position: [number, number];
}

export interface GroupResponse {
  v: 1;
  level: number;
  gid: number;
  members: GroupMember[];
  top_terms: [string, number][];
  supernode_position: [number, number];
}

export interface SessionInfo {
  v: 1;
  session_id: string;
  documents: number;
  levels: number;
  focus: string | null;
  training: string;
  satisfaction: SatisfactionSnapshot;
}

export interface TrainingStatus {
  v: 1;
  status: "idle" | "queued" | "running" | "done" | "cancelled" | "failed";
  K: number | null;
  error: string | null;
  episodes: Record<string, unknown>[];
  levels: { level: number; satisfied: number; total: number; ratio: number }[];
}

export type StreamMessage =
  | { v: 1; type: "satisfaction"; payload: SatisfactionSnapshot }
  | { v: 1; type: "summary_updated"; payload: { levels: number; K: number } }
  | { v: 1; type: "training_progress"; payload: Record<string, unknown> };
