/** Console entry point: wires the DOM to the service API client. */

import { SchedulingApi, TokenGoneError, VersionConflictError } from "./api.js";
import { renderConflictPrompt, renderSuggestionCard, renderWhatIfCards } from "./cards.js";
import { renderBoard } from "./occupancy.js";
import type { PatientPayload } from "./types.js";
import { validateForm } from "./validate.js";
import { computeLayout, renderWaterfallSvg } from "./waterfall.js";

const WHATIF_STRATEGIES = [
  "earliest-eligible",
  "online-greedy",
  "prediction-based",
];

const BOARD_DAYS = 15;

export function startApp(root: Document, api: SchedulingApi): void {
  const boardEl = root.getElementById("board")!;
  const formEl = root.getElementById("admission-form") as HTMLFormElement;
  const errorsEl = root.getElementById("form-errors")!;
  const cardsEl = root.getElementById("cards")!;
  const explainEl = root.getElementById("explanation")!;
  let boardFrom = 0;
  let lastPatient: PatientPayload | null = null;

  async function refreshBoard(): Promise<void> {
    try {
      const view = await api.occupancy(boardFrom, BOARD_DAYS);
      boardEl.innerHTML = renderBoard(view);
    } catch (err) {
      boardEl.innerHTML = `<p class="error">occupancy unavailable: ${String(err)}</p>`;
    }
  }

  root.getElementById("board-prev")?.addEventListener("click", () => {
    boardFrom = Math.max(0, boardFrom - BOARD_DAYS);
    void refreshBoard();
  });
  root.getElementById("board-next")?.addEventListener("click", () => {
    boardFrom += BOARD_DAYS;
    void refreshBoard();
  });

  formEl.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(formEl);
    const result = validateForm({
      id: String(data.get("id") ?? ""),
      category: String(data.get("category") ?? ""),
      admission_day: String(data.get("admission_day") ?? ""),
      ready_offset: String(data.get("ready_offset") ?? "0"),
      fractions: String(data.get("fractions") ?? ""),
      fraction_blocks: String(data.get("fraction_blocks") ?? ""),
    });
    if (!result.patient) {
      errorsEl.innerHTML = result.errors
        .map((e) => `<li>${e}</li>`)
        .join("");
      return;
    }
    errorsEl.innerHTML = "";
    lastPatient = result.patient;
    void suggestFor(result.patient);
  });

  async function suggestFor(patient: PatientPayload): Promise<void> {
    explainEl.innerHTML = "";
    try {
      const suggestion = await api.suggest(patient);
      cardsEl.innerHTML = renderSuggestionCard(suggestion);
    } catch (err) {
      cardsEl.innerHTML = `<p class="error">${String(err)}</p>`;
    }
  }

  root.getElementById("whatif")?.addEventListener("click", () => {
    if (!lastPatient) return;
    void (async () => {
      const result = await api.whatIf(lastPatient, WHATIF_STRATEGIES);
      cardsEl.innerHTML = renderWhatIfCards(result);
    })();
  });

  cardsEl.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const token = target.dataset.token;
    if (token) {
      void bookToken(token, target as HTMLButtonElement);
      return;
    }
    const suggestionId = target.dataset.suggestion;
    if (target.classList.contains("explain") && suggestionId) {
      void showExplanation(suggestionId);
    }
  });

  async function bookToken(token: string, button: HTMLButtonElement): Promise<void> {
    button.disabled = true;
    try {
      const booked = await api.book(token);
      cardsEl.innerHTML =
        `<p class="booked">booked ${booked.patient_id}: day ${booked.start_day}, ` +
        `linac ${booked.linac}</p>`;
      boardEl.innerHTML = renderBoard(booked.occupancy);
    } catch (err) {
      if (err instanceof VersionConflictError) {
        cardsEl.innerHTML = renderConflictPrompt(err.freshSuggestion);
      } else if (err instanceof TokenGoneError) {
        cardsEl.innerHTML =
          `<p class="error">that suggestion is no longer valid; submit again ` +
          `for a fresh one</p>`;
      } else {
        cardsEl.innerHTML = `<p class="error">${String(err)}</p>`;
        button.disabled = false;
      }
    }
  }

  async function showExplanation(suggestionId: string): Promise<void> {
    try {
      const explanation = await api.explanation(suggestionId);
      const layout = computeLayout(explanation);
      explainEl.innerHTML =
        `<h3>why day ${layout.prediction.toFixed(2)}?</h3>` +
        renderWaterfallSvg(layout);
    } catch (err) {
      explainEl.innerHTML = `<p class="error">${String(err)}</p>`;
    }
  }

  void refreshBoard();
}

declare const window: (Window & typeof globalThis) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined") {
  // the console is mounted at /ui; the API lives at the server root
  startApp(document, new SchedulingApi(""));
}
