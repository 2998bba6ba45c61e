"""Detectors for UID smuggling, click-ID persistence, redirector cookies,
and first-party reidentification.

Smuggling means a user-identifying value riding along the redirect path as
a query parameter and arriving at the destination. Click-IDs (msclkid,
gclid) are always reported regardless of the UID classifier since they are
ad-click identifiers by construction; anything else must be in the
classified uid set to be reported.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import parse_qsl, urlsplit

from . import sitemap
from .redirects import NavigationPath
from .trace import StorageSnapshot, Trace
from .uid import UidConfig, _heuristic_reason

__all__ = [
    "DEFAULT_CLICK_ID_NAMES",
    "MissingSnapshot",
    "NoRevisit",
    "SmuggleFinding",
    "PersistenceFinding",
    "ReidFinding",
    "detect_uid_smuggling",
    "detect_persistence",
    "redirectors_with_uid_cookies",
    "detect_first_party_reid",
]

DEFAULT_CLICK_ID_NAMES = ("msclkid", "gclid")


class MissingSnapshot(ValueError):
    """Required storage snapshot phase absent from the trace."""


class NoRevisit(ValueError):
    """Traces passed as a revisit pair are not linked."""


@dataclass(frozen=True)
class SmuggleFinding:
    name: str
    value: str
    first_seen_hop: str          # site of the earliest hop URL carrying the pair
    first_seen_index: int
    delivered_to_destination: bool
    known_click_id: str | None   # "MSCLKID" | "GCLID" | extension names
    classifier_uid: bool


@dataclass(frozen=True)
class PersistenceFinding:
    param_name: str
    value: str
    storage_kind: str            # cookie | local_storage
    storage_key: str
    match_kind: str              # exact | substring


@dataclass(frozen=True)
class ReidFinding:
    name: str
    value: str
    storage_kind: str
    site: str
    stable: bool                 # observed identically in both visits


def _hop_params(url: str) -> list[tuple[str, str]]:
    return [(n, v) for n, v in parse_qsl(urlsplit(url).query, keep_blank_values=False)
            if n and v]


def detect_uid_smuggling(path: NavigationPath,
                         uid_pairs: frozenset[tuple[str, str]] | set | None,
                         click_id_names: tuple[str, ...] = DEFAULT_CLICK_ID_NAMES,
                         ) -> tuple[SmuggleFinding, ...]:
    """Find identifier-carrying query params along the redirect path.

    Hop 0 is the results page and its parameters are the engine's own, so
    candidates start at hop 1 (the clicked URL). A finding is emitted when
    the pair is in the uid set or the name is a known click-ID.
    """
    uid_pairs = uid_pairs or frozenset()
    click_ids = tuple(n.lower() for n in click_id_names)
    first_seen: dict[tuple[str, str], int] = {}
    for idx, hop in enumerate(path.hops):
        if idx == 0:
            continue
        for pair in _hop_params(hop.url):
            first_seen.setdefault(pair, idx)
    destination_pairs = set(_hop_params(path.hops[-1].url))

    findings = []
    for (name, value), idx in sorted(first_seen.items(), key=lambda kv: (kv[1], kv[0])):
        is_uid = (name, value) in uid_pairs
        known = name.lower() in click_ids
        if not is_uid and not known:
            continue
        findings.append(SmuggleFinding(
            name=name, value=value,
            first_seen_hop=path.hops[idx].site.name,
            first_seen_index=idx,
            delivered_to_destination=(name, value) in destination_pairs,
            known_click_id=name.upper() if known else None,
            classifier_uid=is_uid,
        ))
    return tuple(findings)


def _site_scoped_storage(snapshot: StorageSnapshot, destination: str, psl):
    """Yield (kind, key, value) entries scoped to the destination site."""
    for cookie in snapshot.cookies:
        host = cookie.domain.lstrip(".")
        try:
            site = sitemap.etld_plus_one(host, psl).name
        except sitemap.EmptyHost:
            continue
        if site == destination:
            yield ("cookie", cookie.name, cookie.value)
    for entry in snapshot.local_storage:
        host = urlsplit(entry.origin).hostname or entry.origin
        try:
            site = sitemap.etld_plus_one(host, psl).name
        except sitemap.EmptyHost:
            continue
        if site == destination:
            yield ("local_storage", entry.key, entry.value)


def _delimited(value: str, haystack: str) -> bool:
    pattern = r"(?:^|[^A-Za-z0-9])" + re.escape(value) + r"(?:[^A-Za-z0-9]|$)"
    return re.search(pattern, haystack) is not None


def detect_persistence(trace: Trace, path: NavigationPath,
                       findings: tuple[SmuggleFinding, ...], *,
                       substring: bool = True,
                       psl=None) -> tuple[PersistenceFinding, ...]:
    """Cross-reference delivered params against destination-page storage.

    Exact mode requires verbatim equality between the param value and a
    stored value; substring mode additionally accepts the value embedded in
    a structured store, bounded by the value edges or non-alphanumerics.
    """
    snapshot = trace.snapshot("destination_dwell_end")
    if snapshot is None:
        raise MissingSnapshot("destination_dwell_end snapshot required for persistence")
    destination = path.destination_site.name

    persisted = []
    seen: set[tuple[str, str, str]] = set()
    for finding in findings:
        if not finding.delivered_to_destination:
            continue
        for kind, key, stored in _site_scoped_storage(snapshot, destination, psl):
            if stored == finding.value:
                match_kind = "exact"
            elif substring and stored != finding.value and _delimited(finding.value, stored):
                match_kind = "substring"
            else:
                continue
            dedupe = (finding.name, kind, key)
            if dedupe in seen:
                continue
            seen.add(dedupe)
            persisted.append(PersistenceFinding(
                param_name=finding.name, value=finding.value,
                storage_kind=kind, storage_key=key, match_kind=match_kind,
            ))
    return tuple(persisted)


def redirectors_with_uid_cookies(trace: Trace, path: NavigationPath, *,
                                 uid_report=None, cfg: UidConfig | None = None,
                                 psl=None) -> frozenset[str]:
    """Intermediate sites that set an identifying cookie during the click.

    A cookie counts when it appeared on an intermediate-hop site between
    the results_page and post_click snapshots and its value looks like a
    user identifier: present in the classified uid set when corpus context
    is available, otherwise passing the programmatic heuristics. Source
    and destination sites are excluded by construction.
    """
    post = trace.snapshot("post_click")
    if post is None:
        raise MissingSnapshot("post_click snapshot required for redirector cookies")
    before = trace.snapshot("results_page")
    before_keys = set()
    if before is not None:
        before_keys = {(c.domain, c.name, c.value) for c in before.cookies}

    intermediates = set(path.intermediate_sites)
    found = set()
    for cookie in post.cookies:
        if (cookie.domain, cookie.name, cookie.value) in before_keys:
            continue
        host = cookie.domain.lstrip(".")
        try:
            site = sitemap.etld_plus_one(host, psl).name
        except sitemap.EmptyHost:
            continue
        if site not in intermediates:
            continue
        if uid_report is not None:
            pair = (cookie.name, cookie.value)
            verdict = uid_report.verdicts.get(pair)
            if pair in uid_report.uid_pairs:
                identifying = True
            elif verdict is not None and verdict.stage == "manual":
                # discarded only by a deny pattern, still classifier-shaped
                identifying = _heuristic_reason(cookie.value, cfg or UidConfig()) is None
            else:
                identifying = False
        else:
            resolved = (cfg or UidConfig()).resolved([trace])
            identifying = _heuristic_reason(cookie.value, resolved) is None
        if identifying:
            found.add(site)
    return frozenset(found)


def detect_first_party_reid(original: Trace, revisit: Trace,
                            uid_pairs: frozenset[tuple[str, str]],
                            engine_site: str, psl=None) -> tuple[ReidFinding, ...]:
    """Compare engine-site storage across a revisit pair.

    Emits one finding per classified-uid storage pair observed on the
    engine's own site; ``stable`` means the identical (name, value) was
    present in both visits, which is what lets the engine reidentify the
    browser a day later.
    """
    if revisit.revisit_of is None or revisit.browser_instance != original.browser_instance:
        raise NoRevisit("traces are not an original/revisit pair")

    def engine_storage(t: Trace) -> set[tuple[str, str, str]]:
        entries = set()
        for snap in t.checkpoints:
            for kind, key, value in _site_scoped_storage(snap, engine_site, psl):
                entries.add((kind, key, value))
        return entries

    first = engine_storage(original)
    second = engine_storage(revisit)
    findings = []
    for kind, key, value in sorted(first | second):
        if (key, value) not in uid_pairs:
            continue
        findings.append(ReidFinding(
            name=key, value=value, storage_kind=kind, site=engine_site,
            stable=(kind, key, value) in first and (kind, key, value) in second,
        ))
    return tuple(findings)
