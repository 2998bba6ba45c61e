/** Typed failures a crawl run can surface. */

export class CaptureError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Results page rendered but held no detectable ads. No trace is written. */
export class NoAdsFound extends CaptureError {}

/** A navigation or resource fetch did not settle within the timeout. */
export class NavigationTimeout extends CaptureError {}

/** The fixture server's port is already bound by someone else. */
export class PortInUse extends CaptureError {}

/** A revisit was requested for a different query than the original trace. */
export class QueryMismatch extends CaptureError {}

/** The fixture bundle is missing, empty, or structurally invalid. */
export class InvalidBundle extends CaptureError {}
