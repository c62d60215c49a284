/** Text formatting. The UI shows API numbers verbatim; only money is reshaped. */

/** Exact dollars-and-cents text from integer cents, no float arithmetic. */
export function formatCents(cents: number): string {
  if (!Number.isSafeInteger(cents)) {
    throw new Error(`money must be integer cents, got ${cents}`);
  }
  const sign = cents < 0 ? "-" : "";
  const digits = Math.abs(cents).toString().padStart(3, "0");
  const dollars = digits.slice(0, -2).replace(/\B(?=(\d{3})+(?!\d))/g, ",");
  return `${sign}$${dollars}.${digits.slice(-2)}`;
}

/** Verbatim text for a payload number: what JSON.parse produced, unrounded. */
export function num(value: number): string {
  return String(value);
}
