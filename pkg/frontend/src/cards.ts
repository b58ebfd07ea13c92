/** Suggestion and what-if card rendering (pure string -> HTML helpers). */

import type { Suggestion, WhatIfResult } from "./types.js";
import { isSuggestion } from "./types.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderSuggestionCard(suggestion: Suggestion): string {
  const p = suggestion.patient;
  const predicted =
    suggestion.predicted_waiting === null
      ? ""
      : `<li>predicted waiting: <b>${suggestion.predicted_waiting}</b> days</li>`;
  const overdue =
    suggestion.overdue > 0
      ? `<li class="overdue">overdue by <b>${suggestion.overdue}</b> days</li>`
      : "";
  const explain = suggestion.has_attribution
    ? `<button class="explain" data-suggestion="${esc(suggestion.id)}">why?</button>`
    : "";
  return (
    `<article class="suggestion-card" data-suggestion="${esc(suggestion.id)}">` +
    `<header><b>${esc(p.id)}</b> (${esc(p.category)}) &mdash; ${esc(suggestion.strategy)}</header>` +
    `<ul>` +
    `<li>start: day ${suggestion.start_day} (${esc(suggestion.date)}), linac ${suggestion.linac}</li>` +
    `<li>waiting: ${suggestion.waiting} days</li>` +
    predicted +
    overdue +
    `</ul>` +
    `<footer>` +
    `<button class="book" data-token="${esc(suggestion.id)}">book</button>` +
    explain +
    `</footer>` +
    `</article>`
  );
}

export function renderWhatIfCards(result: WhatIfResult): string {
  const parts: string[] = [];
  for (const [strategy, entry] of Object.entries(result.suggestions)) {
    if (isSuggestion(entry)) {
      parts.push(renderSuggestionCard(entry));
    } else {
      parts.push(
        `<article class="suggestion-card failed">` +
          `<header>${esc(strategy)}</header>` +
          `<p class="error">${esc(entry.error)} (HTTP ${entry.status})</p>` +
          `</article>`,
      );
    }
  }
  return parts.join("");
}

/** Banner shown when a booking token was rejected for a version conflict. */
export function renderConflictPrompt(fresh: Suggestion): string {
  return (
    `<div class="conflict-prompt" data-fresh="${esc(fresh.id)}">` +
    `<p>The plan changed while you were looking: that slot is no longer ` +
    `available. A new suggestion was computed.</p>` +
    renderSuggestionCard(fresh) +
    `</div>`
  );
}
