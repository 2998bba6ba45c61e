"""Click-trace model: load, validate and serialize capture files.

A trace file records one search-ad click end to end: the query, every
network request and navigation the browser committed, the ad click itself,
and storage snapshots taken at fixed phases. Files are strict JSON with
``schema_version`` 1; unknown fields are rejected rather than ignored so
capture and analysis cannot silently drift apart.

Timestamps are integer epoch milliseconds and must be strictly increasing
within a trace.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

__all__ = [
    "SCHEMA_VERSION",
    "PHASES",
    "RESOURCE_TYPES",
    "NAV_CAUSES",
    "TraceError",
    "SchemaError",
    "OrderError",
    "DanglingRef",
    "CorpusError",
    "DuplicateInstance",
    "RevisitMismatch",
    "Cookie",
    "StorageEntry",
    "StorageSnapshot",
    "RequestEvent",
    "ResponseEvent",
    "NavigationEvent",
    "DisplayedAd",
    "AdClickEvent",
    "Trace",
    "EngineRow",
    "CorpusSummary",
    "load_trace",
    "trace_from_dict",
    "serialize_trace",
    "corpus_paths",
    "load_corpus",
    "revisit_pairs",
    "validate_corpus",
    "validate_corpus_dir",
]

SCHEMA_VERSION = 1

PHASES = ("pre_query", "results_page", "post_click", "destination_dwell_end")

# statuses a recorded server_redirect navigation must be backed by
SERVER_REDIRECT_STATUSES = frozenset({301, 302, 303, 307, 308})

RESOURCE_TYPES = frozenset({
    "document", "script", "image", "stylesheet", "font", "media",
    "xhr", "fetch", "websocket", "other",
})

NAV_CAUSES = frozenset({"server_redirect", "client_redirect", "link_click", "script"})


class TraceError(ValueError):
    """Base class for trace file problems."""


class SchemaError(TraceError):
    """Malformed JSON, missing/extra fields, or out-of-vocabulary values."""


class OrderError(TraceError):
    """Timestamps or snapshot phases out of order."""


class DanglingRef(TraceError):
    """A response references a request_id that never appeared."""


class CorpusError(ValueError):
    """Base class for cross-trace integrity problems."""


class DuplicateInstance(CorpusError):
    """Two traces share an instance_id without a revisit link between them."""


class RevisitMismatch(CorpusError):
    """A revisit trace disagrees with its original on engine or query."""


@dataclass(frozen=True)
class Cookie:
    name: str
    value: str
    domain: str
    path: str
    expiry: int | None
    first_party_origin: str


@dataclass(frozen=True)
class StorageEntry:
    origin: str
    key: str
    value: str


@dataclass(frozen=True)
class StorageSnapshot:
    phase: str
    cookies: tuple[Cookie, ...]
    local_storage: tuple[StorageEntry, ...]


@dataclass(frozen=True)
class RequestEvent:
    request_id: str
    url: str
    method: str
    resource_type: str
    frame_id: str
    initiator_origin: str
    headers: dict[str, str]
    timestamp: int

    def header(self, name: str) -> str | None:
        low = name.lower()
        for k, v in self.headers.items():
            if k.lower() == low:
                return v
        return None


@dataclass(frozen=True)
class ResponseEvent:
    request_ref: str
    status: int
    headers: dict[str, str]
    timestamp: int

    def header(self, name: str) -> str | None:
        low = name.lower()
        for k, v in self.headers.items():
            if k.lower() == low:
                return v
        return None


@dataclass(frozen=True)
class NavigationEvent:
    frame_id: str
    from_url: str
    to_url: str
    cause: str
    timestamp: int


@dataclass(frozen=True)
class DisplayedAd:
    href: str
    landing_domain: str


@dataclass(frozen=True)
class AdClickEvent:
    ad_element_descriptor: str
    declared_landing_domain: str
    href_at_click: str
    displayed_ads: tuple[DisplayedAd, ...]
    timestamp: int


Event = Union[RequestEvent, ResponseEvent, NavigationEvent, AdClickEvent]


@dataclass(frozen=True)
class Trace:
    schema_version: int
    engine_id: str
    query: str
    instance_id: str
    capture_start: int
    capture_end: int
    revisit_of: str | None
    events: tuple[Event, ...]
    checkpoints: tuple[StorageSnapshot, ...]
    source_path: str | None = field(default=None, compare=False)

    @property
    def browser_instance(self) -> str:
        """Identity of the underlying browser profile.

        Revisit traces belong to the instance they revisit, so original and
        day-later pass collapse onto one key.
        """
        return self.revisit_of or self.instance_id

    @property
    def is_revisit(self) -> bool:
        return self.revisit_of is not None

    @property
    def ad_click(self) -> AdClickEvent:
        for ev in self.events:
            if isinstance(ev, AdClickEvent):
                return ev
        raise SchemaError("trace has no ad_click event")  # unreachable post-load

    def snapshot(self, phase: str) -> StorageSnapshot | None:
        for snap in self.checkpoints:
            if snap.phase == phase:
                return snap
        return None


# ---------------------------------------------------------------------------
# parsing helpers

def _ctx(where: str, msg: str) -> str:
    return f"{where}: {msg}"


def _require(obj: dict, where: str, fields: dict[str, type | tuple]) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(_ctx(where, f"expected object, got {type(obj).__name__}"))
    extra = set(obj) - set(fields)
    if extra:
        raise SchemaError(_ctx(where, f"unknown field(s) {sorted(extra)}"))
    for name, typ in fields.items():
        if name not in obj:
            raise SchemaError(_ctx(where, f"missing field {name!r}"))
        val = obj[name]
        if typ is int:
            # bool is an int subclass; timestamps and statuses must be real ints
            if isinstance(val, bool) or not isinstance(val, int):
                raise SchemaError(_ctx(where, f"field {name!r} must be an integer"))
        elif not isinstance(val, typ):
            raise SchemaError(_ctx(where, f"field {name!r} has wrong type"))


def _str_dict(obj, where: str) -> dict[str, str]:
    if not isinstance(obj, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in obj.items()
    ):
        raise SchemaError(_ctx(where, "must be an object of string values"))
    return dict(obj)


def _parse_event(obj: dict, index: int) -> Event:
    where = f"events[{index}]"
    if not isinstance(obj, dict) or "type" not in obj:
        raise SchemaError(_ctx(where, "event must be an object with a 'type'"))
    kind = obj["type"]
    if kind == "request":
        _require(obj, where, {
            "type": str, "request_id": str, "url": str, "method": str,
            "resource_type": str, "frame_id": str, "initiator_origin": str,
            "headers": dict, "timestamp": int,
        })
        if obj["resource_type"] not in RESOURCE_TYPES:
            raise SchemaError(_ctx(where, f"unknown resource_type {obj['resource_type']!r}"))
        return RequestEvent(
            request_id=obj["request_id"], url=obj["url"], method=obj["method"],
            resource_type=obj["resource_type"], frame_id=obj["frame_id"],
            initiator_origin=obj["initiator_origin"],
            headers=_str_dict(obj["headers"], where + ".headers"),
            timestamp=obj["timestamp"],
        )
    if kind == "response":
        _require(obj, where, {
            "type": str, "request_ref": str, "status": int,
            "headers": dict, "timestamp": int,
        })
        return ResponseEvent(
            request_ref=obj["request_ref"], status=obj["status"],
            headers=_str_dict(obj["headers"], where + ".headers"),
            timestamp=obj["timestamp"],
        )
    if kind == "navigation":
        _require(obj, where, {
            "type": str, "frame_id": str, "from_url": str, "to_url": str,
            "cause": str, "timestamp": int,
        })
        if obj["cause"] not in NAV_CAUSES:
            raise SchemaError(_ctx(where, f"unknown navigation cause {obj['cause']!r}"))
        return NavigationEvent(
            frame_id=obj["frame_id"], from_url=obj["from_url"],
            to_url=obj["to_url"], cause=obj["cause"], timestamp=obj["timestamp"],
        )
    if kind == "ad_click":
        _require(obj, where, {
            "type": str, "ad_element_descriptor": str, "declared_landing_domain": str,
            "href_at_click": str, "displayed_ads": list, "timestamp": int,
        })
        ads = []
        for j, ad in enumerate(obj["displayed_ads"]):
            _require(ad, f"{where}.displayed_ads[{j}]", {"href": str, "landing_domain": str})
            ads.append(DisplayedAd(href=ad["href"], landing_domain=ad["landing_domain"]))
        return AdClickEvent(
            ad_element_descriptor=obj["ad_element_descriptor"],
            declared_landing_domain=obj["declared_landing_domain"],
            href_at_click=obj["href_at_click"], displayed_ads=tuple(ads),
            timestamp=obj["timestamp"],
        )
    raise SchemaError(_ctx(where, f"unknown event type {kind!r}"))


def _parse_snapshot(obj: dict, index: int) -> StorageSnapshot:
    where = f"checkpoints[{index}]"
    _require(obj, where, {"phase": str, "cookies": list, "local_storage": list})
    if obj["phase"] not in PHASES:
        raise SchemaError(_ctx(where, f"unknown phase {obj['phase']!r}"))
    cookies = []
    for j, c in enumerate(obj["cookies"]):
        cw = f"{where}.cookies[{j}]"
        _require(c, cw, {
            "name": str, "value": str, "domain": str, "path": str,
            "expiry": (int, type(None)), "first_party_origin": str,
        })
        if isinstance(c["expiry"], bool):
            raise SchemaError(_ctx(cw, "field 'expiry' must be an integer or null"))
        cookies.append(Cookie(
            name=c["name"], value=c["value"], domain=c["domain"], path=c["path"],
            expiry=c["expiry"], first_party_origin=c["first_party_origin"],
        ))
    storage = []
    for j, s in enumerate(obj["local_storage"]):
        _require(s, f"{where}.local_storage[{j}]", {"origin": str, "key": str, "value": str})
        storage.append(StorageEntry(origin=s["origin"], key=s["key"], value=s["value"]))
    return StorageSnapshot(phase=obj["phase"], cookies=tuple(cookies), local_storage=tuple(storage))


def trace_from_dict(data: dict, source_path: str | None = None) -> Trace:
    _require(data, "trace", {
        "schema_version": int, "engine_id": str, "query": str, "instance_id": str,
        "capture_start": int, "capture_end": int, "revisit_of": (str, type(None)),
        "events": list, "checkpoints": list,
    })
    if data["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {data['schema_version']}")
    if data["capture_start"] > data["capture_end"]:
        raise OrderError("capture_start is after capture_end")

    events = tuple(_parse_event(ev, i) for i, ev in enumerate(data["events"]))

    clicks = [ev for ev in events if isinstance(ev, AdClickEvent)]
    if len(clicks) != 1:
        raise SchemaError(f"trace must contain exactly one ad_click, found {len(clicks)}")
    click = clicks[0]
    if not any(isinstance(ev, NavigationEvent) and ev.timestamp > click.timestamp
               for ev in events):
        raise SchemaError("no navigation committed after the ad_click")

    prev_ts = None
    for i, ev in enumerate(events):
        if not data["capture_start"] <= ev.timestamp <= data["capture_end"]:
            raise OrderError(f"events[{i}]: timestamp outside the capture window")
        if prev_ts is not None and ev.timestamp <= prev_ts:
            raise OrderError(f"events[{i}]: timestamps must be strictly increasing")
        prev_ts = ev.timestamp

    seen_requests: set[str] = set()
    redirect_response_seen = False
    for i, ev in enumerate(events):
        if isinstance(ev, RequestEvent):
            if ev.request_id in seen_requests:
                raise SchemaError(f"events[{i}]: duplicate request_id {ev.request_id!r}")
            seen_requests.add(ev.request_id)
        elif isinstance(ev, ResponseEvent):
            if ev.request_ref not in seen_requests:
                raise DanglingRef(
                    f"events[{i}]: response references unknown request {ev.request_ref!r}"
                )
            if ev.status in SERVER_REDIRECT_STATUSES and ev.header("location") is not None:
                redirect_response_seen = True
        elif isinstance(ev, NavigationEvent) and ev.cause == "server_redirect":
            if not redirect_response_seen:
                raise SchemaError(
                    f"events[{i}]: server_redirect navigation without a prior "
                    "redirect response carrying a Location header"
                )

    checkpoints = tuple(_parse_snapshot(s, i) for i, s in enumerate(data["checkpoints"]))
    order = {phase: i for i, phase in enumerate(PHASES)}
    last = -1
    for i, snap in enumerate(checkpoints):
        rank = order[snap.phase]
        if rank == last:
            raise OrderError(f"checkpoints[{i}]: phase {snap.phase!r} appears twice")
        if rank < last:
            raise OrderError(f"checkpoints[{i}]: phase {snap.phase!r} out of order")
        last = rank

    return Trace(
        schema_version=data["schema_version"], engine_id=data["engine_id"],
        query=data["query"], instance_id=data["instance_id"],
        capture_start=data["capture_start"], capture_end=data["capture_end"],
        revisit_of=data["revisit_of"], events=events, checkpoints=checkpoints,
        source_path=source_path,
    )


def load_trace(source: bytes | str | Path) -> Trace:
    """Parse a serialized trace document.

    Accepts raw JSON bytes/text, or a filesystem path to a ``.trace.json``
    file (Path, or a str that does not look like a JSON document).
    """
    name = None
    if isinstance(source, bytes):
        text = source.decode("utf-8", errors="replace")
    elif isinstance(source, Path) or not source.lstrip().startswith("{"):
        path = Path(source)
        name = path.name
        text = path.read_text("utf-8")
    else:
        text = source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        where = name or "<document>"
        raise SchemaError(f"{where}: not valid JSON ({exc})") from exc
    try:
        return trace_from_dict(data, source_path=name)
    except TraceError as exc:
        if name is None:
            raise
        raise type(exc)(f"{name}: {exc}") from None


# ---------------------------------------------------------------------------
# serialization

def _event_to_dict(ev: Event) -> dict:
    if isinstance(ev, RequestEvent):
        return {"type": "request", "request_id": ev.request_id, "url": ev.url,
                "method": ev.method, "resource_type": ev.resource_type,
                "frame_id": ev.frame_id, "initiator_origin": ev.initiator_origin,
                "headers": dict(ev.headers), "timestamp": ev.timestamp}
    if isinstance(ev, ResponseEvent):
        return {"type": "response", "request_ref": ev.request_ref, "status": ev.status,
                "headers": dict(ev.headers), "timestamp": ev.timestamp}
    if isinstance(ev, NavigationEvent):
        return {"type": "navigation", "frame_id": ev.frame_id, "from_url": ev.from_url,
                "to_url": ev.to_url, "cause": ev.cause, "timestamp": ev.timestamp}
    return {"type": "ad_click", "ad_element_descriptor": ev.ad_element_descriptor,
            "declared_landing_domain": ev.declared_landing_domain,
            "href_at_click": ev.href_at_click,
            "displayed_ads": [{"href": ad.href, "landing_domain": ad.landing_domain}
                              for ad in ev.displayed_ads],
            "timestamp": ev.timestamp}


def trace_to_dict(trace: Trace) -> dict:
    return {
        "schema_version": trace.schema_version,
        "engine_id": trace.engine_id,
        "query": trace.query,
        "instance_id": trace.instance_id,
        "capture_start": trace.capture_start,
        "capture_end": trace.capture_end,
        "revisit_of": trace.revisit_of,
        "events": [_event_to_dict(ev) for ev in trace.events],
        "checkpoints": [
            {"phase": s.phase,
             "cookies": [{"name": c.name, "value": c.value, "domain": c.domain,
                          "path": c.path, "expiry": c.expiry,
                          "first_party_origin": c.first_party_origin}
                         for c in s.cookies],
             "local_storage": [{"origin": e.origin, "key": e.key, "value": e.value}
                               for e in s.local_storage]}
            for s in trace.checkpoints
        ],
    }


def serialize_trace(trace: Trace) -> bytes:
    """Canonical byte form: sorted keys, compact separators, UTF-8."""
    return json.dumps(trace_to_dict(trace), sort_keys=True,
                      separators=(",", ":"), ensure_ascii=False).encode("utf-8")


# ---------------------------------------------------------------------------
# corpus handling

def corpus_paths(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("*.trace.json"))


def load_corpus(directory: str | Path, strict: bool = True):
    """Load every trace in a directory.

    Returns (traces, skipped) where skipped is a list of (path, error string).
    With strict=True the first bad file raises instead.
    """
    traces: list[Trace] = []
    skipped: list[tuple[str, str]] = []
    for path in corpus_paths(directory):
        try:
            traces.append(load_trace(path))
        except TraceError as exc:
            if strict:
                raise
            skipped.append((str(path), str(exc)))
    return traces, skipped


def revisit_pairs(traces: Iterable[Trace]) -> list[tuple[Trace, Trace]]:
    """Match originals with their day-later passes.

    A revisit declares ``revisit_of`` naming the browser instance it rejoins;
    the original is the non-revisit trace of that instance.
    """
    originals: dict[str, Trace] = {}
    for t in traces:
        if not t.is_revisit:
            originals.setdefault(t.instance_id, t)
    pairs = []
    for t in traces:
        if t.is_revisit and t.revisit_of in originals:
            pairs.append((originals[t.revisit_of], t))
    return pairs


@dataclass(frozen=True)
class EngineRow:
    traces: int
    queries: int
    destination_sites: int
    redirect_paths: int


@dataclass(frozen=True)
class CorpusSummary:
    engines: dict[str, EngineRow]
    trace_count: int
    skipped: tuple[tuple[str, str], ...]
    warnings: tuple[str, ...]


def _check_instances(traces: list[Trace]) -> list[str]:
    warnings: list[str] = []
    by_instance: dict[str, list[Trace]] = {}
    for t in traces:
        by_instance.setdefault(t.instance_id, []).append(t)
    for instance_id, group in by_instance.items():
        if len(group) == 1:
            continue
        revisits = [t for t in group if t.revisit_of == instance_id]
        if len(group) > 2 or len(revisits) != 1:
            raise DuplicateInstance(
                f"instance_id {instance_id!r} appears in {len(group)} traces "
                "without a valid revisit link"
            )
    for original, revisit in revisit_pairs(traces):
        if (original.engine_id, original.query) != (revisit.engine_id, revisit.query):
            raise RevisitMismatch(
                f"revisit of instance {original.instance_id!r} changes engine or query"
            )
    original_ids = {t.instance_id for t in traces if not t.is_revisit}
    for t in traces:
        if t.is_revisit and t.revisit_of not in original_ids:
            warnings.append(f"revisit {t.instance_id!r}: original trace not in corpus")
    return warnings


def validate_corpus(traces: list[Trace],
                    skipped: tuple[tuple[str, str], ...] = ()) -> CorpusSummary:
    """Integrity-check loaded traces and summarize them per engine.

    Raises DuplicateInstance / RevisitMismatch on cross-trace violations.
    ``skipped`` carries (path, reason) entries for files excluded upstream.
    """
    from . import redirects  # late import, redirects builds on this module

    warnings = _check_instances(traces)

    queries: dict[str, set[str]] = {}
    destinations: dict[str, set] = {}
    paths: dict[str, set] = {}
    counts: dict[str, int] = {}
    for t in traces:
        counts[t.engine_id] = counts.get(t.engine_id, 0) + 1
        queries.setdefault(t.engine_id, set()).add(t.query)
        try:
            nav_path = redirects.build_navigation_path(t)
        except redirects.PathError as exc:
            warnings.append(f"{t.instance_id}: no navigation path ({exc})")
            continue
        destinations.setdefault(t.engine_id, set()).add(nav_path.destination_site)
        paths.setdefault(t.engine_id, set()).add(nav_path.site_sequence)

    engines = {
        engine: EngineRow(
            traces=counts[engine],
            queries=len(queries.get(engine, ())),
            destination_sites=len(destinations.get(engine, ())),
            redirect_paths=len(paths.get(engine, ())),
        )
        for engine in sorted(counts)
    }
    return CorpusSummary(
        engines=engines, trace_count=len(traces),
        skipped=tuple(skipped), warnings=tuple(warnings),
    )


def validate_corpus_dir(directory: str | Path, strict: bool = False) -> CorpusSummary:
    """Convenience wrapper: load a corpus directory, then validate it."""
    traces, skipped = load_corpus(directory, strict=strict)
    return validate_corpus(traces, tuple(skipped))
