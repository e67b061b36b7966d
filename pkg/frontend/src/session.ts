/**
 * Session state and its pure update functions.
 *
 * A session is a plain immutable value: the process text, the bound vector
 * (kept as exact decimal strings end to end), the last backend responses,
 * and an append-only history of tried bounds with their verdicts.
 * Rendering is a pure function of this value, so every updater returns a
 * fresh session.
 */

export interface Span {
  line: number;
  column: number;
  length: number;
}

export interface ParseOk {
  ok: true;
  nodes: number;
  tasks: string[];
  nature_gateways: string[];
  choice_gateways: string[];
  impact_dimension: number;
  dot: string;
}

export interface ApiError {
  error: string;
  span?: Span;
}

export interface Decision {
  history_id: number;
  state: string;
  chosen_tasks: string[];
}

export interface FinalEntry {
  id: number;
  cost: string[];
}

export interface StrategyDoc {
  schema: number;
  exists: boolean;
  bound: string[];
  expected_impact?: string[];
  decisions: Decision[];
  finals: FinalEntry[];
  wall_ms?: number;
  board?: { nodes: number; finals: number; moves: number };
}

export interface HistoryEntry {
  bound: string[];
  exists: boolean;
  expected_impact: string[] | null;
}

export interface Session {
  text: string;
  bound: string[];
  parse: ParseOk | ApiError | null;
  result: StrategyDoc | ApiError | null;
  history: readonly HistoryEntry[];
  busy: boolean;
}

export function initialSession(text: string, bound: string[]): Session {
  return { text, bound, parse: null, result: null, history: [], busy: false };
}

export function isParseError(p: Session["parse"]): p is ApiError {
  return p !== null && "error" in p;
}

export function isResultError(r: Session["result"]): r is ApiError {
  return r !== null && "error" in r;
}

export function withText(s: Session, text: string): Session {
  return { ...s, text, parse: null, result: null };
}

export function withBound(s: Session, bound: string[]): Session {
  return { ...s, bound };
}

export function withBusy(s: Session, busy: boolean): Session {
  return { ...s, busy };
}

/** Record a parse response; the bound vector resizes to the process's
 * impact dimension, keeping the prefix the analyst already typed. */
export function withParse(s: Session, parse: ParseOk | ApiError): Session {
  let bound = s.bound;
  if (!("error" in parse)) {
    const k = parse.impact_dimension;
    if (bound.length !== k) {
      bound = Array.from({ length: k }, (_, i) => bound[i] ?? "10");
    }
  }
  return { ...s, parse, bound };
}

/** Record a synthesis response; verdicts extend the append-only history. */
export function withResult(s: Session, result: StrategyDoc | ApiError): Session {
  let history = s.history;
  if (!("error" in result)) {
    history = [
      ...history,
      {
        bound: [...result.bound],
        exists: result.exists,
        expected_impact: result.expected_impact ? [...result.expected_impact] : null,
      },
    ];
  }
  return { ...s, result, history, busy: false };
}
