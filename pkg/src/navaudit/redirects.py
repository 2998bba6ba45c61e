"""Reconstruct the navigation path of an ad click and measure bounce tracking.

The path starts on the engine results page, follows every main-frame
navigation committed after the ad click (server redirects, client redirects,
link clicks) and ends on the destination page. Sites along the way collapse
to their registrable domain, so hopping between subdomains of one site does
not count as leaving it.

Bounce tracking means at least one third site sat between the results page
and the destination.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import sitemap
from .sitemap import EntityList, Site, organization_label
from .trace import AdClickEvent, NavigationEvent, RequestEvent, ResponseEvent, Trace
from urllib.parse import urlsplit

__all__ = [
    "REDIRECT_CODES",
    "STRICT_REDIRECT_CODES",
    "MAIN_FRAME_ID",
    "PathError",
    "NoClick",
    "NoDestination",
    "Hop",
    "NavigationPath",
    "PathMetrics",
    "build_navigation_path",
    "detect_bounce_tracking",
    "arrival_timestamp",
    "compute_path_metrics",
]

# Codes treated as server redirects. 303 responds to a POST-to-GET bounce and
# is included by default; the narrower classic set is available for
# comparability with older measurements (--strict-paper-codes).
REDIRECT_CODES = frozenset({301, 302, 303, 307, 308})
STRICT_REDIRECT_CODES = frozenset({301, 302, 307, 308})

MAIN_FRAME_ID = "main"


class PathError(ValueError):
    """Base class for navigation path failures."""


class NoClick(PathError):
    """The trace has no ad click to anchor a path on."""


class NoDestination(PathError):
    """No main-frame navigation committed after the click."""


@dataclass(frozen=True)
class Hop:
    """One page the main frame committed to. ``status`` is set only for
    server redirect hops and holds the redirecting response's code."""

    url: str
    site: Site
    cause: str  # origin | server_redirect | client_redirect | link_click
    status: int | None = None


@dataclass(frozen=True)
class NavigationPath:
    hops: tuple[Hop, ...]
    source_site: Site
    destination_site: Site
    site_sequence: tuple[str, ...]  # consecutive duplicates collapsed

    @property
    def intermediate_sites(self) -> tuple[str, ...]:
        """Distinct third sites strictly between source and destination."""
        seen = []
        src, dst = self.source_site.name, self.destination_site.name
        for name in self.site_sequence[1:-1]:
            if name not in (src, dst) and name not in seen:
                seen.append(name)
        return tuple(seen)


@dataclass(frozen=True)
class PathMetrics:
    hop_count: int
    intermediate_sites: tuple[str, ...]
    intermediate_site_count: int
    server_redirect_count: int
    client_redirect_count: int
    organizations: frozenset[str]
    intermediate_organizations: frozenset[str]
    bounced: bool


def _site_of(url: str, psl) -> Site:
    host = urlsplit(url).hostname
    if not host:
        raise PathError(f"url {url!r} has no host")
    return sitemap.etld_plus_one(host, psl)


def build_navigation_path(trace: Trace, *,
                          redirect_codes: frozenset[int] = REDIRECT_CODES,
                          psl=None) -> NavigationPath:
    """Derive the click-to-destination path from a trace.

    Server-redirect hops get their status from the response to the previous
    hop's document request; a recorded server redirect whose status falls
    outside ``redirect_codes`` is demoted to a client redirect but keeps its
    place in the path.
    """
    click = None
    for ev in trace.events:
        if isinstance(ev, AdClickEvent):
            click = ev
            break
    if click is None:
        raise NoClick("trace has no ad_click event")

    navs = [ev for ev in trace.events
            if isinstance(ev, NavigationEvent)
            and ev.frame_id == MAIN_FRAME_ID and ev.timestamp > click.timestamp]
    if not navs:
        raise NoDestination("no main-frame navigation after the ad click")

    # document responses on the main frame, in event order: (ts, url, status)
    doc_requests: dict[str, RequestEvent] = {}
    doc_responses: list[tuple[int, str, int]] = []
    for ev in trace.events:
        if isinstance(ev, RequestEvent) and ev.resource_type == "document" \
                and ev.frame_id == MAIN_FRAME_ID:
            doc_requests[ev.request_id] = ev
        elif isinstance(ev, ResponseEvent) and ev.request_ref in doc_requests:
            doc_responses.append((ev.timestamp, doc_requests[ev.request_ref].url, ev.status))

    def status_for(url: str, before: int) -> int | None:
        found = None
        for ts, resp_url, status in doc_responses:
            if ts > before:
                break
            if resp_url == url:
                found = status
        return found

    hops = [Hop(url=navs[0].from_url, site=_site_of(navs[0].from_url, psl), cause="origin")]
    for nav in navs:
        cause = nav.cause
        status = None
        if cause == "script":
            cause = "client_redirect"
        if cause == "server_redirect":
            status = status_for(hops[-1].url, nav.timestamp)
            if status is not None and status not in redirect_codes:
                cause = "client_redirect"
        hops.append(Hop(url=nav.to_url, site=_site_of(nav.to_url, psl),
                        cause=cause, status=status))

    sequence: list[str] = []
    for hop in hops:
        if not sequence or sequence[-1] != hop.site.name:
            sequence.append(hop.site.name)

    return NavigationPath(
        hops=tuple(hops),
        source_site=hops[0].site,
        destination_site=hops[-1].site,
        site_sequence=tuple(sequence),
    )


def detect_bounce_tracking(path: NavigationPath) -> bool:
    """True iff at least one third site sat between click and destination."""
    return len(path.intermediate_sites) >= 1


def arrival_timestamp(trace: Trace, path: NavigationPath, psl=None) -> int | None:
    """Timestamp of the navigation that last entered the destination site.

    Requests at or after this moment belong to the destination page; a
    client-side hop within the destination site does not reset it.
    """
    click = trace.ad_click
    if click is None:
        return None
    dest = path.destination_site.name
    prev = path.hops[0].site.name
    arrived = None
    for nav in trace.events:
        if not (isinstance(nav, NavigationEvent) and nav.frame_id == MAIN_FRAME_ID
                and nav.timestamp > click.timestamp):
            continue
        site = _site_of(nav.to_url, psl).name
        if site == dest and prev != dest:
            arrived = nav.timestamp
        prev = site
    return arrived


def compute_path_metrics(path: NavigationPath, entities: EntityList) -> PathMetrics:
    intermediates = path.intermediate_sites
    all_sites = dict.fromkeys(hop.site.name for hop in path.hops)
    return PathMetrics(
        hop_count=len(path.hops),
        intermediate_sites=intermediates,
        intermediate_site_count=len(intermediates),
        server_redirect_count=sum(1 for h in path.hops if h.cause == "server_redirect"),
        client_redirect_count=sum(1 for h in path.hops if h.cause == "client_redirect"),
        organizations=frozenset(organization_label(s, entities) for s in all_sites),
        intermediate_organizations=frozenset(
            organization_label(s, entities) for s in intermediates),
        bounced=detect_bounce_tracking(path),
    )
