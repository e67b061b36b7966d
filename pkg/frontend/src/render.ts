/**
 * Pure view functions: Session in, DOM out.
 *
 * Every number shown here is a string the backend produced; the only local
 * arithmetic is the exact-rational bar proportion. Rendering the same
 * session twice yields identical markup, which the tests snapshot.
 */

import { parseRat, ratioPercent } from "./rational.js";
import {
  Session,
  StrategyDoc,
  Span,
  isParseError,
  isResultError,
} from "./session.js";

function el(
  doc: Document,
  tag: string,
  className: string,
  text?: string,
): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderVerdict(doc: Document, result: StrategyDoc): HTMLElement {
  const exists = result.exists;
  const badge = el(
    doc,
    "span",
    exists ? "verdict verdict-yes" : "verdict verdict-no",
    exists ? "strategy exists" : "no strategy",
  );
  badge.setAttribute("data-exists", String(exists));
  return badge;
}

export function renderImpactBars(doc: Document, result: StrategyDoc): HTMLElement {
  const wrap = el(doc, "div", "impact-bars");
  const expected = result.expected_impact ?? [];
  expected.forEach((value, i) => {
    const boundValue = result.bound[i] ?? "0";
    const row = el(doc, "div", "impact-bar-row");
    const label = el(doc, "span", "impact-label", `${value} / ${boundValue}`);
    const track = el(doc, "div", "impact-track");
    const fill = el(doc, "div", "impact-fill");
    const pct = ratioPercent(parseRat(value), parseRat(boundValue));
    fill.style.width = `${pct.toFixed(1)}%`;
    fill.setAttribute("data-component", String(i));
    track.appendChild(fill);
    row.appendChild(label);
    row.appendChild(track);
    wrap.appendChild(row);
  });
  return wrap;
}

export function renderDecisions(doc: Document, result: StrategyDoc): HTMLElement {
  const wrap = el(doc, "div", "decisions");
  wrap.appendChild(el(doc, "h3", "", "strategy"));
  if (!result.decisions.length) {
    wrap.appendChild(el(doc, "p", "muted", "no decision points"));
    return wrap;
  }
  const list = el(doc, "ul", "decision-list");
  for (const d of result.decisions) {
    const item = el(doc, "li", "decision");
    item.appendChild(el(doc, "code", "decision-state", d.state));
    const picks = el(doc, "span", "decision-picks");
    for (const task of d.chosen_tasks) {
      picks.appendChild(el(doc, "span", "chosen-task", task));
    }
    item.appendChild(picks);
    list.appendChild(item);
  }
  wrap.appendChild(list);
  return wrap;
}

export function renderFinals(doc: Document, result: StrategyDoc): HTMLElement {
  const wrap = el(doc, "div", "finals");
  wrap.appendChild(el(doc, "h3", "", "final-state cost breakdown"));
  const table = el(doc, "table", "finals-table") as HTMLTableElement;
  const head = el(doc, "tr", "");
  head.appendChild(el(doc, "th", "", "final"));
  head.appendChild(el(doc, "th", "", "cost"));
  table.appendChild(head);
  for (const f of result.finals) {
    const row = el(doc, "tr", "final-row");
    row.appendChild(el(doc, "td", "", `#${f.id}`));
    row.appendChild(el(doc, "td", "final-cost", `[${f.cost.join(", ")}]`));
    table.appendChild(row);
  }
  wrap.appendChild(table);
  return wrap;
}

export function renderHistory(doc: Document, session: Session): HTMLElement {
  const wrap = el(doc, "div", "history");
  wrap.appendChild(el(doc, "h3", "", "tried bounds"));
  const list = el(doc, "ul", "history-list");
  for (const entry of session.history) {
    const item = el(
      doc,
      "li",
      entry.exists ? "history-entry history-yes" : "history-entry history-no",
    );
    const impact = entry.expected_impact
      ? ` -> [${entry.expected_impact.join(", ")}]`
      : "";
    item.textContent = `${entry.exists ? "o" : "x"} [${entry.bound.join(", ")}]${impact}`;
    list.appendChild(item);
  }
  wrap.appendChild(list);
  return wrap;
}

/** The offending line with a caret column marker underneath. */
export function renderErrorMarker(
  doc: Document,
  text: string,
  message: string,
  span?: Span,
): HTMLElement {
  const wrap = el(doc, "div", "parse-error");
  if (!span) {
    wrap.appendChild(el(doc, "p", "error-message", message));
    return wrap;
  }
  wrap.appendChild(
    el(doc, "p", "error-message", `${span.line}:${span.column}: ${message}`),
  );
  const lines = text.split("\n");
  const offending = lines[span.line - 1] ?? "";
  const snippet = el(doc, "pre", "error-snippet");
  const caret = " ".repeat(Math.max(0, span.column - 1)) + "^".repeat(Math.max(1, span.length));
  snippet.textContent = `${offending}\n${caret}`;
  snippet.setAttribute("data-line", String(span.line));
  snippet.setAttribute("data-column", String(span.column));
  wrap.appendChild(snippet);
  return wrap;
}

export function renderDot(doc: Document, dot: string): HTMLElement {
  const wrap = el(doc, "details", "dot-pane");
  wrap.appendChild(el(doc, "summary", "", "diagram (Graphviz source)"));
  const pre = el(doc, "pre", "dot-source", dot);
  wrap.appendChild(pre);
  return wrap;
}

/** Compose the whole read-only half of the page from a session value. */
export function renderSession(doc: Document, session: Session): HTMLElement {
  const root = el(doc, "div", "session-view");
  if (isParseError(session.parse)) {
    root.appendChild(
      renderErrorMarker(doc, session.text, session.parse.error, session.parse.span),
    );
    return root;
  }
  if (session.parse) {
    root.appendChild(renderDot(doc, session.parse.dot));
  }
  if (isResultError(session.result)) {
    root.appendChild(
      renderErrorMarker(doc, session.text, session.result.error, session.result.span),
    );
  } else if (session.result) {
    root.appendChild(renderVerdict(doc, session.result));
    root.appendChild(renderImpactBars(doc, session.result));
    root.appendChild(renderDecisions(doc, session.result));
    root.appendChild(renderFinals(doc, session.result));
  }
  root.appendChild(renderHistory(doc, session));
  return root;
}
