/** Thin typed client over the service HTTP API.
 *
 * The client never computes schedules itself; every number shown in the
 * console comes from a service response.
 */

import type {
  BookingResult,
  Explanation,
  OccupancyView,
  PatientPayload,
  Suggestion,
  WhatIfResult,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`service responded ${status}`);
  }
}

/** Booking rejected because capacity moved under the token; carries the
 * replacement suggestion the service computed against current capacity. */
export class VersionConflictError extends ApiError {
  constructor(
    status: number,
    detail: unknown,
    readonly freshSuggestion: Suggestion,
  ) {
    super(status, detail);
  }
}

/** Booking token no longer usable (already consumed or expired). */
export class TokenGoneError extends ApiError {}

async function unwrap<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (response.ok) {
    return body as T;
  }
  const detail = (body as { detail?: unknown }).detail ?? body;
  if (response.status === 409 && typeof detail === "object" && detail !== null) {
    const fresh = (detail as { fresh_suggestion?: Suggestion }).fresh_suggestion;
    if (fresh) {
      throw new VersionConflictError(response.status, detail, fresh);
    }
  }
  if (response.status === 410) {
    throw new TokenGoneError(response.status, detail);
  }
  throw new ApiError(response.status, detail);
}

export class SchedulingApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private post(path: string, payload: unknown): Promise<Response> {
    return this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async suggest(patient: PatientPayload, strategy?: string): Promise<Suggestion> {
    const payload: Record<string, unknown> = { patient };
    if (strategy) payload.strategy = strategy;
    return unwrap<Suggestion>(await this.post("/patients:suggest", payload));
  }

  async book(token: string): Promise<BookingResult> {
    return unwrap<BookingResult>(await this.post("/bookings", { token }));
  }

  async forceBook(
    patient: PatientPayload,
    startDay: number,
    linac: number,
  ): Promise<BookingResult> {
    return unwrap<BookingResult>(
      await this.post("/bookings", {
        patient,
        start_day: startDay,
        linac,
        force: true,
      }),
    );
  }

  async occupancy(dayFrom: number, days: number): Promise<OccupancyView> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/occupancy?day_from=${dayFrom}&days=${days}`,
    );
    return unwrap<OccupancyView>(response);
  }

  async explanation(suggestionId: string): Promise<Explanation> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/explanations/${suggestionId}`,
    );
    return unwrap<Explanation>(response);
  }

  async whatIf(patient: PatientPayload, strategies: string[]): Promise<WhatIfResult> {
    return unwrap<WhatIfResult>(await this.post("/whatif", { patient, strategies }));
  }
}
