/** Request sequencing: stale responses lose, bursts of changes coalesce. */

/**
 * Last-write-wins gate. Each request takes a token; a response is applied
 * only if its token is still the newest issued.
 */
export class TokenGate {
  private current = 0;

  issue(): number {
    this.current += 1;
    return this.current;
  }

  isLatest(token: number): boolean {
    return token === this.current;
  }
}

export interface Debounced<A extends unknown[]> {
  (...args: A): void;
  cancel(): void;
}

/** Trailing-edge debounce; only the last call within `ms` runs. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  const wrapped = (...args: A) => {
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      fn(...args);
    }, ms);
  };
  wrapped.cancel = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
  };
  return wrapped;
}
