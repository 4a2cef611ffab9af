/** Rate limiter for drag interactions: leading call fires immediately,
 * intermediate calls are coalesced, the trailing call always lands, and the
 * observed rate never exceeds one call per `minIntervalMs`. Clock and timer
 * are injectable for tests. */

export interface Scheduler {
  now(): number;
  setTimeout(fn: () => void, ms: number): unknown;
}

const realScheduler: Scheduler = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
};

export function rateLimit<A extends unknown[]>(
  fn: (...args: A) => void,
  minIntervalMs: number,
  scheduler: Scheduler = realScheduler,
): (...args: A) => void {
  let lastFired = -Infinity;
  let pending: A | null = null;
  let timerArmed = false;

  const fire = (args: A) => {
    lastFired = scheduler.now();
    fn(...args);
  };

  const flush = () => {
    timerArmed = false;
    if (pending !== null) {
      const args = pending;
      pending = null;
      fire(args);
    }
  };

  return (...args: A) => {
    const elapsed = scheduler.now() - lastFired;
    if (elapsed >= minIntervalMs && !timerArmed) {
      fire(args);
      return;
    }
    pending = args;
    if (!timerArmed) {
      timerArmed = true;
      scheduler.setTimeout(flush, Math.max(0, minIntervalMs - elapsed));
    }
  };
}
