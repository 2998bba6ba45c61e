"""End-to-end analysis over a directory of trace files.

Per-trace work (path reconstruction, tracker matching) is pure and runs on
a worker pool; corpus-level stages (uid classification, aggregation) fold
the per-trace results serially. Output documents are rendered to strings
here and written by the caller, so a run is reproducible byte for byte
regardless of worker count.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import filterlist, redirects, report, smuggling, trace as trace_mod, uid
from .filterlist import RuleSet, TrackerHit
from .redirects import NavigationPath, PathMetrics
from .sitemap import EntityList, organization_label
from .trace import Trace
from .uid import UidConfig, UidReport

__all__ = ["TraceBundle", "AnalysisRun", "analyze_corpus", "write_outputs"]

_CLICK_ID_CATEGORY = {"msclkid": "msclkid", "gclid": "gclid"}


@dataclass(frozen=True)
class TraceBundle:
    """Per-trace results from the parallel phase."""

    index: int
    key: str
    path: NavigationPath | None
    path_error: str | None
    metrics: PathMetrics | None
    hits: tuple[TrackerHit, ...]
    arrival_ts: int | None

    def destination_hits(self) -> tuple[TrackerHit, ...]:
        if self.arrival_ts is None:
            return ()
        return tuple(h for h in self.hits if h.timestamp >= self.arrival_ts)


@dataclass
class AnalysisRun:
    traces: list[Trace]
    hard_failures: list[tuple[str, str]]
    skipped: list[tuple[str, str]]
    bundles: list[TraceBundle]
    uid_report: UidReport | None
    audit: report.AuditReport | None
    outputs: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def total_files(self) -> int:
        return len(self.traces) + len(self.hard_failures) + len(self.skipped)


# Worker globals, set once per process. Everything here is immutable after
# the initializer runs, so the pool needs no locking.
_W: dict = {}


def _init_worker(ruleset: RuleSet, entities: EntityList, psl,
                 redirect_codes: frozenset) -> None:
    _W["ruleset"] = ruleset
    _W["entities"] = entities
    _W["psl"] = psl
    _W["codes"] = redirect_codes


def _analyze_one(item: tuple[int, Trace]) -> TraceBundle:
    index, t = item
    key = t.source_path or f"{t.engine_id}/{t.instance_id}" + ("/revisit" if t.is_revisit else "")
    path = metrics = None
    path_error = None
    arrival = None
    try:
        path = redirects.build_navigation_path(t, redirect_codes=_W["codes"], psl=_W["psl"])
        metrics = redirects.compute_path_metrics(path, _W["entities"])
        arrival = redirects.arrival_timestamp(t, path, _W["psl"])
    except redirects.PathError as exc:
        path_error = str(exc)
    hits = tuple(filterlist.classify_trace_trackers(t, _W["ruleset"], psl=_W["psl"]))
    return TraceBundle(index=index, key=key, path=path, path_error=path_error,
                       metrics=metrics, hits=hits, arrival_ts=arrival)


def _load_split(traces_dir: str | Path):
    """Load a corpus keeping unreadable/non-JSON files separate from
    schema-invalid ones; only the former count toward the load-failure gate."""
    traces: list[Trace] = []
    hard: list[tuple[str, str]] = []
    soft: list[tuple[str, str]] = []
    for path in trace_mod.corpus_paths(traces_dir):
        try:
            raw = path.read_text("utf-8")
        except OSError as exc:
            hard.append((path.name, f"unreadable: {exc}"))
            continue
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            hard.append((path.name, f"not valid JSON: {exc}"))
            continue
        try:
            t = trace_mod.trace_from_dict(data, source_path=path.name)
        except trace_mod.TraceError as exc:
            soft.append((path.name, str(exc)))
            continue
        traces.append(t)
    return traces, hard, soft


def _jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":"),
                              ensure_ascii=False) + "\n" for r in records)


def _path_dict(bundle: TraceBundle) -> dict:
    p, m = bundle.path, bundle.metrics
    return {
        "trace": bundle.key,
        "hops": [{"url": h.url, "site": h.site.name, "cause": h.cause,
                  "status": h.status} for h in p.hops],
        "source_site": p.source_site.name,
        "destination_site": p.destination_site.name,
        "site_sequence": list(p.site_sequence),
        "metrics": {
            "hop_count": m.hop_count,
            "intermediate_sites": list(m.intermediate_sites),
            "intermediate_site_count": m.intermediate_site_count,
            "server_redirect_count": m.server_redirect_count,
            "client_redirect_count": m.client_redirect_count,
            "organizations": sorted(m.organizations),
            "intermediate_organizations": sorted(m.intermediate_organizations),
            "bounced": m.bounced,
        },
    }


def _category(name: str) -> str:
    return _CLICK_ID_CATEGORY.get(name.lower(), "other_uid")


def analyze_corpus(traces_dir: str | Path, *,
                   ruleset: RuleSet,
                   entities: EntityList,
                   psl=None,
                   uid_cfg: UidConfig | None = None,
                   strict_paper_codes: bool = False,
                   substring_persistence: bool = True,
                   click_id_names: tuple[str, ...] = smuggling.DEFAULT_CLICK_ID_NAMES,
                   parallelism: int = 1) -> AnalysisRun:
    """Run every analysis stage over a trace directory.

    Traces that fail schema validation or path reconstruction are excluded
    and counted in the report header; they never abort the run.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    codes = (redirects.STRICT_REDIRECT_CODES if strict_paper_codes
             else redirects.REDIRECT_CODES)
    traces, hard, soft = _load_split(traces_dir)
    run_warnings: list[str] = [f"{name}: {err}" for name, err in hard + soft]

    items = list(enumerate(traces))
    if parallelism == 1 or len(items) <= 1:
        _init_worker(ruleset, entities, psl, codes)
        bundles = [_analyze_one(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                                 initargs=(ruleset, entities, psl, codes)) as pool:
            bundles = list(pool.map(_analyze_one, items))

    # traces without a usable path drop out of the aggregate but stay listed
    dropped = [(b.key, b.path_error) for b in bundles if b.path is None]
    run_warnings += [f"{key}: {err}" for key, err in dropped]

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        uid_report = uid.classify_uids(traces, uid_cfg, psl=psl) if traces else None
    run_warnings += [str(w.message) for w in caught]
    uid_pairs = uid_report.uid_pairs if uid_report else frozenset()
    resolved_cfg = (uid_cfg or UidConfig()).resolved(traces) if traces else None

    smuggle_records: list[dict] = []
    results: list[report.TraceResult] = []
    for b in bundles:
        if b.path is None:
            continue
        t = traces[b.index]
        findings = smuggling.detect_uid_smuggling(b.path, uid_pairs, click_id_names)
        try:
            persisted = smuggling.detect_persistence(
                t, b.path, findings, substring=substring_persistence, psl=psl)
        except smuggling.MissingSnapshot as exc:
            persisted = ()
            run_warnings.append(f"{b.key}: {exc}")
        try:
            redirectors = smuggling.redirectors_with_uid_cookies(
                t, b.path, uid_report=uid_report, cfg=resolved_cfg, psl=psl)
        except smuggling.MissingSnapshot as exc:
            redirectors = frozenset()
            run_warnings.append(f"{b.key}: {exc}")

        for f in findings:
            smuggle_records.append({
                "kind": "smuggle", "trace": b.key, "name": f.name, "value": f.value,
                "first_seen_hop": f.first_seen_hop,
                "first_seen_index": f.first_seen_index,
                "delivered_to_destination": f.delivered_to_destination,
                "known_click_id": f.known_click_id,
                "classifier_uid": f.classifier_uid,
            })
        for pf in persisted:
            smuggle_records.append({
                "kind": "persistence", "trace": b.key, "name": pf.param_name,
                "value": pf.value, "storage_kind": pf.storage_kind,
                "storage_key": pf.storage_key, "match_kind": pf.match_kind,
            })
        for site in sorted(redirectors):
            smuggle_records.append(
                {"kind": "redirector_uid_cookie", "trace": b.key, "site": site})

        seen_cats = {_category(f.name) for f in findings}
        delivered_cats = {_category(f.name) for f in findings if f.delivered_to_destination}
        exact_cats = {_category(p.param_name) for p in persisted if p.match_kind == "exact"}
        substr_cats = {_category(p.param_name) for p in persisted}
        dest_hits = b.destination_hits()
        results.append(report.TraceResult(
            engine_id=t.engine_id,
            trace_key=b.key,
            query=t.query,
            destination_site=b.path.destination_site.name,
            site_sequence=b.path.site_sequence,
            intermediate_count=b.metrics.intermediate_site_count,
            bounced=b.metrics.bounced,
            intermediate_organizations=tuple(sorted(b.metrics.intermediate_organizations)),
            uid_cookie_redirector_count=len(redirectors),
            tracker_request_count=len(dest_hits),
            tracker_entities=tuple(sorted(
                {organization_label(h.tracker_site, entities) for h in dest_hits})),
            click_ids_seen=tuple(sorted(seen_cats)),
            click_ids_delivered=tuple(sorted(delivered_cats)),
            persisted_exact=tuple(sorted(exact_cats)),
            persisted_substring=tuple(sorted(substr_cats)),
        ))

    reid_results: list[report.ReidPairResult] = []
    reid_pairs_doc: list[dict] = []
    path_by_index = {b.index: b for b in bundles}
    index_of = {id(t): i for i, t in enumerate(traces)}
    for orig, rev in trace_mod.revisit_pairs(traces):
        orig_bundle = path_by_index.get(index_of[id(orig)])
        if orig_bundle is None or orig_bundle.path is None:
            continue
        engine_site = orig_bundle.path.source_site.name
        findings = smuggling.detect_first_party_reid(
            orig, rev, uid_pairs, engine_site, psl=psl)
        reid_results.append(report.ReidPairResult(
            engine_id=orig.engine_id, pair_key=orig.instance_id,
            stable=any(f.stable for f in findings)))
        reid_pairs_doc.append({
            "engine": orig.engine_id,
            "instance_id": orig.instance_id,
            "engine_site": engine_site,
            "stable": any(f.stable for f in findings),
            "findings": [{"name": f.name, "value": f.value,
                          "storage_kind": f.storage_kind, "site": f.site,
                          "stable": f.stable} for f in findings],
        })

    skipped_total = len(hard) + len(soft) + len(dropped)
    audit = report.aggregate(results, reid_results, skipped=skipped_total)

    run = AnalysisRun(traces=traces, hard_failures=hard, skipped=soft + dropped,
                      bundles=bundles, uid_report=uid_report, audit=audit,
                      warnings=run_warnings)
    run.outputs = _render_outputs(run, smuggle_records, reid_pairs_doc)
    return run


def _render_outputs(run: AnalysisRun, smuggle_records: list[dict],
                    reid_pairs_doc: list[dict]) -> dict[str, str]:
    data = run.audit.to_dict()
    outputs = {
        "report.json": report.render(data, "json"),
        "report.csv": report.render(data, "csv"),
        "report.md": report.render(data, "markdown"),
        "paths.jsonl": _jsonl([_path_dict(b) for b in run.bundles if b.path]),
        "tracker-hits.jsonl": _jsonl([
            {"trace": b.key, "request_id": h.request_id, "url": h.url,
             "tracker_site": h.tracker_site, "rule": h.rule,
             "source_host": h.source_host, "resource_type": h.resource_type,
             "third_party": h.third_party, "timestamp": h.timestamp,
             "destination_scope": b.arrival_ts is not None
                                  and h.timestamp >= b.arrival_ts}
            for b in run.bundles for h in b.hits]),
        "smuggling.jsonl": _jsonl(smuggle_records),
        "reid.json": report.canonical_json({"pairs": reid_pairs_doc}),
    }

    summary: dict[str, dict] = {}
    for engine, part in sorted(run.audit.engines.items()):
        summary[engine] = {
            "paths": part.traces,
            "intermediate_site_histogram": {
                str(k): v for k, v in sorted(part.intermediate_hist.items())},
            "bounce_rate": round(part.bounce_count / part.traces, 4) if part.traces else 0.0,
        }
    outputs["paths-summary.json"] = report.canonical_json(summary)

    uids_doc = run.uid_report.to_dict() if run.uid_report else {
        "funnel": {}, "uids": [], "verdicts": [], "warnings": []}
    outputs["uids.json"] = report.canonical_json(uids_doc)
    return outputs


def write_outputs(run: AnalysisRun, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in sorted(run.outputs.items()):
        target = out / name
        target.write_text(content, "utf-8")
        written.append(target)
    return written
