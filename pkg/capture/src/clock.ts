/**
 * Millisecond clock that never repeats or rewinds.
 *
 * Trace validation demands strictly increasing timestamps inside the
 * capture window, and fixture navigations finish faster than one tick
 * of Date.now(). Every read takes the wall clock or last+1, whichever
 * is larger, so event order alone already guarantees monotonicity.
 */
export class Clock {
  private last = 0;

  now(): number {
    const wall = Date.now();
    this.last = wall > this.last ? wall : this.last + 1;
    return this.last;
  }

  /** Last timestamp handed out, without advancing. */
  peek(): number {
    return this.last;
  }
}
