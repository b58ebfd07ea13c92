import { describe, expect, it } from "vitest";

import {
  ApiError,
  SchedulingApi,
  TokenGoneError,
  VersionConflictError,
} from "../src/api.js";
import { renderSuggestionCard } from "../src/cards.js";
import type { BookingResult, Suggestion } from "../src/types.js";
import { fixture, scriptedFetch } from "./helpers.js";

const suggestion = fixture<Suggestion>("suggest_curative.json");
const bookingOk = fixture<BookingResult>("booking_ok.json");
const conflict = fixture<{ status: number; body: unknown }>("booking_conflict.json");
const gone = fixture<{ status: number; body: unknown }>("booking_gone.json");

describe("suggest -> render -> book round trip", () => {
  it("succeeds against recorded responses", async () => {
    const { impl, calls } = scriptedFetch([
      { body: suggestion },
      { body: bookingOk },
    ]);
    const api = new SchedulingApi("", impl);

    const got = await api.suggest(suggestion.patient);
    expect(got.id).toBe(suggestion.id);
    expect(got.start_day).toBe(suggestion.start_day);

    const card = renderSuggestionCard(got);
    expect(card).toContain(`data-token="${suggestion.id}"`);
    expect(card).toContain(`day ${suggestion.start_day}`);
    expect(card).toContain(suggestion.patient.id);

    const booked = await api.book(got.id);
    expect(booked.patient_id).toBe(suggestion.patient.id);
    expect(booked.start_day).toBe(suggestion.start_day);
    expect(booked.occupancy.cells.length).toBeGreaterThan(0);

    expect(calls.map((c) => c.url)).toEqual(["/patients:suggest", "/bookings"]);
    const bookBody = JSON.parse(String(calls[1].init?.body));
    expect(bookBody).toEqual({ token: suggestion.id });
  });

  it("sends the requested strategy through", async () => {
    const { impl, calls } = scriptedFetch([{ body: suggestion }]);
    const api = new SchedulingApi("", impl);
    await api.suggest(suggestion.patient, "online-greedy");
    const body = JSON.parse(String(calls[0].init?.body));
    expect(body.strategy).toBe("online-greedy");
  });
});

describe("booking failure modes", () => {
  it("a version conflict surfaces the fresh suggestion", async () => {
    const { impl } = scriptedFetch([
      { status: conflict.status, body: conflict.body },
    ]);
    const api = new SchedulingApi("", impl);
    const err = await api.book("stale-token").catch((e) => e);
    expect(err).toBeInstanceOf(VersionConflictError);
    const fresh = (err as VersionConflictError).freshSuggestion;
    expect(fresh.id).toBeTypeOf("string");
    expect(fresh.version).toBeGreaterThan(0);
  });

  it("a consumed or expired token raises TokenGoneError", async () => {
    const { impl } = scriptedFetch([{ status: gone.status, body: gone.body }]);
    const api = new SchedulingApi("", impl);
    const err = await api.book("used-token").catch((e) => e);
    expect(err).toBeInstanceOf(TokenGoneError);
    expect((err as TokenGoneError).status).toBe(410);
  });

  it("other failures raise a plain ApiError with the status", async () => {
    const { impl } = scriptedFetch([
      { status: 422, body: { detail: "ready day not reached" } },
    ]);
    const api = new SchedulingApi("", impl);
    const err = await api.book("bad").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err).not.toBeInstanceOf(VersionConflictError);
    expect((err as ApiError).status).toBe(422);
  });
});
