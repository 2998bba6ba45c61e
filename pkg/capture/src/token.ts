import { randomBytes } from "node:crypto";

/**
 * Random 16-char hex token used for planted identifiers.
 *
 * Always contains at least one letter so a value can never be mistaken
 * for a decimal timestamp by downstream classifiers.
 */
export function uid16(): string {
  for (;;) {
    const token = randomBytes(8).toString("hex");
    if (/[a-f]/.test(token)) return token;
  }
}
