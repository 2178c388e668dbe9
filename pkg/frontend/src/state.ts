// Pure query-state machine: breadcrumb trail and stale-response discarding.
// At most one response is applied per issued sequence number, and only if no
// newer request has been issued since.
import type { EncTag, QueryResultItem, RepTag } from "./types.js";

export const MAX_BREADCRUMBS = 20;
export const MIN_K = 1;
export const MAX_K = 200;

export interface UiQueryState {
  queryId: string | null;
  k: number;
  rep: RepTag;
  enc: EncTag;
  breadcrumbs: string[]; // previous query ids, oldest first, length <= 20
  seq: number; // newest issued request sequence number
  appliedSeq: number; // sequence number of the results currently shown
  results: QueryResultItem[] | null;
  error: string | null;
}

export function initialState(): UiQueryState {
  return {
    queryId: null,
    k: 10,
    rep: "SUBAP",
    enc: "BASELINE",
    breadcrumbs: [],
    seq: 0,
    appliedSeq: 0,
    results: null,
    error: null,
  };
}

export function clampK(k: number): number {
  return Math.min(MAX_K, Math.max(MIN_K, Math.round(k)));
}

/** Select a new query (gallery click or result click); pushes the previous
 * query onto the breadcrumb trail. Revisits are allowed; the trail keeps the
 * most recent MAX_BREADCRUMBS entries. */
export function setQuery(s: UiQueryState, id: string): UiQueryState {
  const breadcrumbs = s.queryId === null
    ? s.breadcrumbs
    : [...s.breadcrumbs, s.queryId].slice(-MAX_BREADCRUMBS);
  return { ...s, queryId: id, breadcrumbs };
}

/** Jump back to breadcrumb index i: that id becomes the query and the trail
 * truncates to the entries before it. */
export function goBack(s: UiQueryState, index: number): UiQueryState {
  if (index < 0 || index >= s.breadcrumbs.length) {
    return s;
  }
  return {
    ...s,
    queryId: s.breadcrumbs[index],
    breadcrumbs: s.breadcrumbs.slice(0, index),
  };
}

export function setK(s: UiQueryState, k: number): UiQueryState {
  return { ...s, k: clampK(k) };
}

export function setRep(s: UiQueryState, rep: RepTag): UiQueryState {
  return { ...s, rep };
}

export function setEnc(s: UiQueryState, enc: EncTag): UiQueryState {
  return { ...s, enc };
}

/** Issue a new request: returns the state and the sequence number the caller
 * must pass back to applyResponse. */
export function beginRequest(s: UiQueryState): [UiQueryState, number] {
  const seq = s.seq + 1;
  return [{ ...s, seq }, seq];
}

/** Apply a response only if it belongs to the newest issued request; stale
 * responses (superseded by a newer click) are discarded. */
export function applyResponse(
  s: UiQueryState,
  seq: number,
  results: QueryResultItem[],
): UiQueryState {
  if (seq !== s.seq) {
    return s; // stale
  }
  return { ...s, appliedSeq: seq, results, error: null };
}

/** Apply a request failure; state (query, breadcrumbs) is preserved. */
export function applyError(s: UiQueryState, seq: number, message: string): UiQueryState {
  if (seq !== s.seq) {
    return s;
  }
  return { ...s, appliedSeq: seq, error: message };
}
