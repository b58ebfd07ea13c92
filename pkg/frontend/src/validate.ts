/** Client-side admission form validation.
 *
 * Mirrors the service's patient invariants so typos are caught before a
 * round trip; the service remains the authority and re-validates.
 */

import type { Category, PatientPayload } from "./types.js";

export const CATEGORIES: Category[] = ["P1", "P2", "P3", "P4"];

export const DEADLINE_DAYS: Record<Category, number> = {
  P1: 1,
  P2: 3,
  P3: 14,
  P4: 28,
};

export const MIN_FRACTIONS = 1;
export const MAX_FRACTIONS = 45;
export const MIN_FRACTION_BLOCKS = 2;
export const MAX_FRACTION_BLOCKS = 33;

export interface FormInput {
  id: string;
  category: string;
  admission_day: string;
  ready_offset: string;
  fractions: string;
  fraction_blocks: string;
}

export interface ValidationResult {
  patient?: PatientPayload;
  errors: string[];
}

function parseIntStrict(raw: string): number | null {
  const trimmed = raw.trim();
  if (!/^-?\d+$/.test(trimmed)) return null;
  return parseInt(trimmed, 10);
}

export function validateForm(input: FormInput): ValidationResult {
  const errors: string[] = [];

  const id = input.id.trim();
  if (!id) errors.push("patient id must not be empty");

  const category = input.category as Category;
  if (!CATEGORIES.includes(category)) {
    errors.push(`category must be one of ${CATEGORIES.join(", ")}`);
  }

  const admissionDay = parseIntStrict(input.admission_day);
  if (admissionDay === null || admissionDay < 0) {
    errors.push("admission day must be a non-negative whole number");
  }

  const readyOffset = parseIntStrict(input.ready_offset || "0");
  if (readyOffset === null || readyOffset < 0) {
    errors.push("ready offset must be a non-negative whole number");
  }

  const fractions = parseIntStrict(input.fractions);
  if (
    fractions === null ||
    fractions < MIN_FRACTIONS ||
    fractions > MAX_FRACTIONS
  ) {
    errors.push(
      `fractions must be between ${MIN_FRACTIONS} and ${MAX_FRACTIONS}`,
    );
  }

  const blocks = parseIntStrict(input.fraction_blocks);
  if (
    blocks === null ||
    blocks < MIN_FRACTION_BLOCKS ||
    blocks > MAX_FRACTION_BLOCKS
  ) {
    errors.push(
      `blocks per fraction must be between ${MIN_FRACTION_BLOCKS} and ${MAX_FRACTION_BLOCKS}`,
    );
  }

  if (errors.length > 0) return { errors };

  const patient: PatientPayload = {
    id,
    category,
    admission_day: admissionDay!,
    ready_day: admissionDay! + readyOffset!,
    due_day: admissionDay! + DEADLINE_DAYS[category],
    fractions: fractions!,
    fraction_blocks: blocks!,
  };
  return { patient, errors: [] };
}
