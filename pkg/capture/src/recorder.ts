/**
 * Dual request recording.
 *
 * The network side is the automation transport's own log: every request
 * actually issued. The page side is what an in-page recorder could see
 * from inside committed documents: the document URL at commit, DOM-
 * declared subresources, outbound click and form-submit targets, and
 * script-fired beacons. Server-side redirect hops never commit a document,
 * so the page recorder structurally misses them; the agreement ratio
 * quantifies exactly that gap. Trace events are always built from the
 * network side.
 */

export interface RecorderStats {
  network_requests: number;
  page_requests: number;
  matched: number;
  agreement: number;
}

function counted(urls: string[]): Map<string, number> {
  const counts = new Map<string, number>();
  for (const url of urls) counts.set(url, (counts.get(url) ?? 0) + 1);
  return counts;
}

export class DualRecorder {
  private readonly networkUrls: string[] = [];
  private readonly pageUrls: string[] = [];

  network(url: string): void {
    this.networkUrls.push(url);
  }

  page(url: string): void {
    this.pageUrls.push(url);
  }

  /** Agreement = requests seen by both recorders / requests on the wire. */
  stats(): RecorderStats {
    const net = counted(this.networkUrls);
    const page = counted(this.pageUrls);
    let matched = 0;
    for (const [url, n] of net) {
      matched += Math.min(n, page.get(url) ?? 0);
    }
    const total = this.networkUrls.length;
    return {
      network_requests: total,
      page_requests: this.pageUrls.length,
      matched,
      agreement: total === 0 ? 1 : matched / total,
    };
  }
}
