/** SVG waterfall rendering for a prediction explanation.
 *
 * The layout is computed from the service's waterfall rows as-is (already
 * ordered by decreasing magnitude); each bar runs from the previous
 * cumulative value to the next, so the final bar ends at the prediction.
 */

import type { Explanation } from "./types.js";

export interface WaterfallBar {
  name: string;
  phi: number;
  /** value before this contribution is applied */
  from: number;
  /** value after this contribution is applied */
  to: number;
}

export interface WaterfallLayout {
  baseValue: number;
  prediction: number;
  bars: WaterfallBar[];
  /** data-space extent covered by the bars, base value and prediction */
  min: number;
  max: number;
}

export function computeLayout(explanation: Explanation): WaterfallLayout {
  const base = explanation.attribution.base_value;
  const prediction = explanation.attribution.prediction;
  const bars: WaterfallBar[] = [];
  let running = base;
  for (const entry of explanation.waterfall) {
    bars.push({
      name: entry.name,
      phi: entry.phi,
      from: running,
      to: entry.cumulative,
    });
    running = entry.cumulative;
  }
  let min = Math.min(base, prediction);
  let max = Math.max(base, prediction);
  for (const bar of bars) {
    min = Math.min(min, bar.from, bar.to);
    max = Math.max(max, bar.from, bar.to);
  }
  return { baseValue: base, prediction, bars, min, max };
}

const ROW_HEIGHT = 22;
const LABEL_WIDTH = 150;
const PLOT_WIDTH = 420;
const MARGIN = 12;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Render the layout as a standalone SVG string. */
export function renderWaterfallSvg(layout: WaterfallLayout): string {
  const span = layout.max - layout.min || 1;
  const toX = (v: number) =>
    LABEL_WIDTH + ((v - layout.min) / span) * PLOT_WIDTH;
  const width = LABEL_WIDTH + PLOT_WIDTH + MARGIN;
  const height = (layout.bars.length + 2) * ROW_HEIGHT + MARGIN;

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" class="waterfall">`,
    `<line x1="${toX(layout.baseValue).toFixed(1)}" y1="0" ` +
      `x2="${toX(layout.baseValue).toFixed(1)}" y2="${height}" class="wf-base-line"/>`,
  ];
  layout.bars.forEach((bar, i) => {
    const y = (i + 1) * ROW_HEIGHT;
    const x0 = toX(Math.min(bar.from, bar.to));
    const x1 = toX(Math.max(bar.from, bar.to));
    const cls = bar.phi >= 0 ? "wf-bar wf-pos" : "wf-bar wf-neg";
    parts.push(
      `<text x="${LABEL_WIDTH - 6}" y="${y + 14}" text-anchor="end" class="wf-label">` +
        `${esc(bar.name)}</text>`,
      `<rect x="${x0.toFixed(1)}" y="${y + 3}" ` +
        `width="${Math.max(1, x1 - x0).toFixed(1)}" height="${ROW_HEIGHT - 6}" class="${cls}">` +
        `<title>${esc(bar.name)}: ${bar.phi >= 0 ? "+" : ""}${bar.phi.toFixed(3)}</title></rect>`,
    );
  });
  const yEnd = (layout.bars.length + 1) * ROW_HEIGHT;
  parts.push(
    `<text x="${LABEL_WIDTH - 6}" y="${yEnd + 14}" text-anchor="end" class="wf-label">prediction</text>`,
    `<line x1="${toX(layout.prediction).toFixed(1)}" y1="${yEnd}" ` +
      `x2="${toX(layout.prediction).toFixed(1)}" y2="${yEnd + ROW_HEIGHT}" class="wf-pred-line"/>`,
    `<text x="${(toX(layout.prediction) + 4).toFixed(1)}" y="${yEnd + 14}" class="wf-value">` +
      `${layout.prediction.toFixed(2)}</text>`,
    "</svg>",
  );
  return parts.join("");
}
