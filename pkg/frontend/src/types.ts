/** Payload shapes of the scheduling service HTTP API. */

export type Category = "P1" | "P2" | "P3" | "P4";

export interface PatientPayload {
  id: string;
  category: Category;
  admission_day: number;
  admission_seq?: number;
  ready_day?: number;
  due_day?: number;
  fractions: number;
  fraction_blocks: number;
}

export interface Suggestion {
  id: string;
  patient: PatientPayload & { ready_day: number; due_day: number };
  strategy: string;
  start_day: number;
  linac: number;
  date: string;
  waiting: number;
  overdue: number;
  predicted_waiting: number | null;
  has_attribution: boolean;
  version: number;
  expires_in: number;
}

export interface OccupancyCell {
  day: number;
  date: string;
  linac: number;
  total: number;
  remaining: number;
  reserved: number;
}

export interface OccupancyView {
  from: number;
  days: number;
  version: number;
  cells: OccupancyCell[];
}

export interface BookingResult {
  patient_id: string;
  start_day: number;
  linac: number;
  version: number;
  occupancy: OccupancyView;
}

export interface Attribution {
  base_value: number;
  phis: number[];
  prediction: number;
  feature_names: string[];
}

export interface WaterfallEntry {
  feature: number;
  name: string;
  phi: number;
  cumulative: number;
}

export interface Explanation {
  suggestion_id: string;
  attribution: Attribution;
  waterfall: WaterfallEntry[];
}

export interface WhatIfResult {
  suggestions: Record<string, Suggestion | { error: string; status: number }>;
}

export function isSuggestion(
  entry: Suggestion | { error: string; status: number },
): entry is Suggestion {
  return (entry as Suggestion).id !== undefined;
}
