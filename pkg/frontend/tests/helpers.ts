import { readFileSync } from "node:fs";
import { join } from "node:path";

/** Parse a frozen JSON payload captured from the live API/CLI. */
export function fixture<T>(name: string): T {
  // vitest runs rooted at frontend/, where tests/fixtures lives
  const path = join(process.cwd(), "tests", "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}
