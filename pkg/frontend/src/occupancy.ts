/** Occupancy board: one column per business day, one row per linac. */

import type { OccupancyCell, OccupancyView } from "./types.js";

export interface BoardColumn {
  day: number;
  date: string;
  cells: OccupancyCell[];
}

export function groupByDay(view: OccupancyView): BoardColumn[] {
  const byDay = new Map<number, BoardColumn>();
  for (const cell of view.cells) {
    let column = byDay.get(cell.day);
    if (!column) {
      column = { day: cell.day, date: cell.date, cells: [] };
      byDay.set(cell.day, column);
    }
    column.cells.push(cell);
  }
  const columns = [...byDay.values()];
  columns.sort((a, b) => a.day - b.day);
  for (const column of columns) {
    column.cells.sort((a, b) => a.linac - b.linac);
  }
  return columns;
}

/** Utilised fraction of a cell's capacity, in [0, 1]. */
export function utilisation(cell: OccupancyCell): number {
  if (cell.total <= 0) return 0;
  return Math.min(1, Math.max(0, (cell.total - cell.remaining) / cell.total));
}

export function utilisationClass(cell: OccupancyCell): string {
  const u = utilisation(cell);
  if (u >= 0.95) return "occ-full";
  if (u >= 0.75) return "occ-high";
  if (u >= 0.4) return "occ-mid";
  return "occ-low";
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderBoard(view: OccupancyView): string {
  const columns = groupByDay(view);
  const linacs = columns.length > 0 ? columns[0].cells.map((c) => c.linac) : [];
  const head = columns
    .map(
      (col) =>
        `<th scope="col"><span class="occ-day">d${col.day}</span>` +
        `<span class="occ-date">${esc(col.date)}</span></th>`,
    )
    .join("");
  const rows = linacs
    .map((linac) => {
      const cells = columns
        .map((col) => {
          const cell = col.cells.find((c) => c.linac === linac);
          if (!cell) return "<td></td>";
          const pct = Math.round(utilisation(cell) * 100);
          return (
            `<td class="${utilisationClass(cell)}" ` +
            `title="day ${cell.day} linac ${cell.linac}: ${cell.remaining} of ${cell.total} blocks free, ${cell.reserved} reserved">` +
            `${pct}%</td>`
          );
        })
        .join("");
      return `<tr><th scope="row">linac ${linac}</th>${cells}</tr>`;
    })
    .join("");
  return (
    `<table class="occupancy-board" data-version="${view.version}">` +
    `<thead><tr><th></th>${head}</tr></thead><tbody>${rows}</tbody></table>`
  );
}
