/** Client view state and its transitions.
 *
 * Everything here is derived from server responses; refreshing the page and
 * re-hydrating from the service must reconstruct the same state. The only
 * client-owned pieces are the camera and the reader pane.
 */

import type { ApiClient } from "./api.js";
import type {
  LayoutResponse,
  SatisfactionSnapshot,
  StreamMessage,
  SummaryResponse,
} from "./types.js";

export interface ReaderPane {
  doc: string | null; // open document; when set it is also the service focus
  highlights: string[];
}

export interface ViewState {
  sessionId: string;
  level: number;
  maxLevel: number;
  summary: SummaryResponse | null;
  layout: LayoutResponse | null;
  expanded: number[];
  reader: ReaderPane;
  satisfaction: SatisfactionSnapshot | null;
  training: string;
  offline: boolean;
  pendingEvents: number;
}

export function emptyState(sessionId: string): ViewState {
  return {
    sessionId,
    level: 0,
    maxLevel: 0,
    summary: null,
    layout: null,
    expanded: [],
    reader: { doc: null, highlights: [] },
    satisfaction: null,
    training: "idle",
    offline: false,
    pendingEvents: 0,
  };
}

/** Rebuild the whole view from the server (page load and reconnect-resync). */
export async function hydrate(client: ApiClient, sessionId: string, level?: number): Promise<ViewState> {
  const info = await client.sessionInfo(sessionId);
  const maxLevel = info.levels - 1;
  const current = clampLevel(level ?? maxLevel, maxLevel);
  const summary = await client.summary(sessionId, current);
  const layout = await client.layout(sessionId, current);
  return {
    ...emptyState(sessionId),
    level: current,
    maxLevel,
    summary,
    layout,
    satisfaction: info.satisfaction,
    training: info.training,
  };
}

export function clampLevel(level: number, maxLevel: number): number {
  return Math.max(0, Math.min(level, maxLevel));
}

export async function navigateTo(client: ApiClient, state: ViewState, level: number): Promise<ViewState> {
  const target = clampLevel(level, state.maxLevel);
  const summary = await client.summary(state.sessionId, target);
  const layout = await client.layout(state.sessionId, target);
  // expanded groups never survive a level switch: gids are level-scoped
  return { ...state, level: target, summary, layout, expanded: [] };
}

export function expandGroup(state: ViewState, gid: number): ViewState {
  const known = state.summary?.supernodes.some((s) => s.gid === gid) ?? false;
  if (!known || state.expanded.includes(gid)) {
    return state;
  }
  return { ...state, expanded: [...state.expanded, gid].sort((a, b) => a - b) };
}

export function collapseGroup(state: ViewState, gid: number): ViewState {
  return { ...state, expanded: state.expanded.filter((g) => g !== gid) };
}

export function applySnapshot(state: ViewState, snapshot: SatisfactionSnapshot): ViewState {
  return { ...state, satisfaction: snapshot };
}

export function applyStreamMessage(state: ViewState, message: StreamMessage): ViewState {
  switch (message.type) {
    case "satisfaction":
      return applySnapshot(state, message.payload);
    case "summary_updated":
      return { ...state, maxLevel: message.payload.levels - 1, training: "done" };
    case "training_progress":
      return { ...state, training: "running" };
  }
}

export function openReader(state: ViewState, doc: string): ViewState {
  return { ...state, reader: { doc, highlights: [] } };
}

export function closeReader(state: ViewState): ViewState {
  return { ...state, reader: { doc: null, highlights: [] } };
}

export function setOffline(state: ViewState, offline: boolean, pendingEvents: number): ViewState {
  return { ...state, offline, pendingEvents };
}

export function staleBanner(state: ViewState): boolean {
  return state.satisfaction?.stale ?? false;
}

export function deeperDisabled(state: ViewState): boolean {
  return state.level >= state.maxLevel;
}
