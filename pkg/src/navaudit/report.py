"""Aggregate per-trace findings into per-engine metric tables.

Aggregation is a fold over an associative, commutative merge of per-trace
partials, so any partition of the corpus yields the same report. The
finished report is rendered as canonical JSON (sorted keys, fractions at 4
decimals), CSV, or markdown tables. Reports carry no wall-clock
timestamps; identical inputs give byte-identical output.
"""
from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field

__all__ = [
    "InconsistentCorpus",
    "UnknownFormat",
    "TraceResult",
    "ReidPairResult",
    "EnginePartial",
    "AuditReport",
    "trace_partial",
    "reid_partial",
    "merge_partials",
    "aggregate",
    "render",
    "canonical_json",
]

CLICK_ID_CATEGORIES = ("msclkid", "gclid", "other_uid")


class InconsistentCorpus(ValueError):
    """Findings reference duplicate or unknown traces."""


class UnknownFormat(ValueError):
    """Requested render format is not one of json/csv/markdown."""


@dataclass(frozen=True)
class TraceResult:
    """Everything one trace contributes to the aggregate report."""

    engine_id: str
    trace_key: str
    query: str
    destination_site: str
    site_sequence: tuple[str, ...]
    intermediate_count: int
    bounced: bool
    intermediate_organizations: tuple[str, ...]
    uid_cookie_redirector_count: int
    tracker_request_count: int
    tracker_entities: tuple[str, ...]
    click_ids_seen: tuple[str, ...]       # categories present on the path
    click_ids_delivered: tuple[str, ...]  # categories delivered to destination
    persisted_exact: tuple[str, ...]      # categories echoed verbatim
    persisted_substring: tuple[str, ...]  # categories echoed incl. embedded


@dataclass(frozen=True)
class ReidPairResult:
    engine_id: str
    pair_key: str
    stable: bool


def _add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return out


@dataclass(frozen=True)
class EnginePartial:
    """Mergeable per-engine accumulator. merge() is associative and
    commutative; medians are computed from the multiset at finalize."""

    traces: int = 0
    queries: frozenset = frozenset()
    destinations: frozenset = frozenset()
    sequences: frozenset = frozenset()
    intermediate_hist: dict = field(default_factory=dict)
    bounce_count: int = 0
    org_exposure: dict = field(default_factory=dict)
    redirector_hist: dict = field(default_factory=dict)
    tracker_entity_traces: dict = field(default_factory=dict)
    tracker_counts: tuple = ()
    clickid_seen: dict = field(default_factory=dict)
    clickid_delivered: dict = field(default_factory=dict)
    persisted_exact: dict = field(default_factory=dict)
    persisted_substring: dict = field(default_factory=dict)
    revisit_pairs: int = 0
    stable_pairs: int = 0

    def merge(self, other: "EnginePartial") -> "EnginePartial":
        return EnginePartial(
            traces=self.traces + other.traces,
            queries=self.queries | other.queries,
            destinations=self.destinations | other.destinations,
            sequences=self.sequences | other.sequences,
            intermediate_hist=_add(self.intermediate_hist, other.intermediate_hist),
            bounce_count=self.bounce_count + other.bounce_count,
            org_exposure=_add(self.org_exposure, other.org_exposure),
            redirector_hist=_add(self.redirector_hist, other.redirector_hist),
            tracker_entity_traces=_add(self.tracker_entity_traces,
                                       other.tracker_entity_traces),
            tracker_counts=self.tracker_counts + other.tracker_counts,
            clickid_seen=_add(self.clickid_seen, other.clickid_seen),
            clickid_delivered=_add(self.clickid_delivered, other.clickid_delivered),
            persisted_exact=_add(self.persisted_exact, other.persisted_exact),
            persisted_substring=_add(self.persisted_substring, other.persisted_substring),
            revisit_pairs=self.revisit_pairs + other.revisit_pairs,
            stable_pairs=self.stable_pairs + other.stable_pairs,
        )


def trace_partial(result: TraceResult) -> dict[str, EnginePartial]:
    return {result.engine_id: EnginePartial(
        traces=1,
        queries=frozenset({result.query}),
        destinations=frozenset({result.destination_site}),
        sequences=frozenset({result.site_sequence}),
        intermediate_hist={result.intermediate_count: 1},
        bounce_count=1 if result.bounced else 0,
        org_exposure={org: 1 for org in set(result.intermediate_organizations)},
        redirector_hist={result.uid_cookie_redirector_count: 1},
        tracker_entity_traces={org: 1 for org in set(result.tracker_entities)},
        tracker_counts=(result.tracker_request_count,),
        clickid_seen={
            **{c: 1 for c in set(result.click_ids_seen)},
            **({"__any__": 1} if result.click_ids_seen else {}),
        },
        clickid_delivered={c: 1 for c in set(result.click_ids_delivered)},
        persisted_exact={c: 1 for c in set(result.persisted_exact)},
        persisted_substring={c: 1 for c in set(result.persisted_substring)},
    )}


def reid_partial(result: ReidPairResult) -> dict[str, EnginePartial]:
    return {result.engine_id: EnginePartial(
        revisit_pairs=1, stable_pairs=1 if result.stable else 0,
    )}


def merge_partials(a: dict[str, EnginePartial],
                   b: dict[str, EnginePartial]) -> dict[str, EnginePartial]:
    out = dict(a)
    for engine, partial in b.items():
        out[engine] = out[engine].merge(partial) if engine in out else partial
    return out


@dataclass(frozen=True)
class AuditReport:
    trace_count: int
    skipped: int
    engines: dict[str, EnginePartial]

    def to_dict(self) -> dict:
        return {
            "header": {"trace_count": self.trace_count, "skipped": self.skipped},
            "engines": {e: _engine_dict(p) for e, p in sorted(self.engines.items())},
        }


def _frac(num: int, den: int) -> float:
    return round(num / den, 4) if den else 0.0


def _engine_dict(p: EnginePartial) -> dict:
    n = p.traces
    delivered = {c: p.clickid_delivered.get(c, 0) for c in CLICK_ID_CATEGORIES}
    return {
        "corpus": {
            "traces": n,
            "queries": len(p.queries),
            "destination_sites": len(p.destinations),
            "redirect_paths": len(p.sequences),
        },
        "intermediate_sites": {
            "histogram": {str(k): v for k, v in sorted(p.intermediate_hist.items())},
            "fractions": {str(k): _frac(v, n)
                          for k, v in sorted(p.intermediate_hist.items())},
        },
        "bounce_rate": _frac(p.bounce_count, n),
        "organization_exposure": {org: _frac(c, n)
                                  for org, c in sorted(p.org_exposure.items())},
        "uid_cookie_redirectors": {
            "histogram": {str(k): v for k, v in sorted(p.redirector_hist.items())},
            "fractions": {str(k): _frac(v, n)
                          for k, v in sorted(p.redirector_hist.items())},
        },
        "destination_trackers": {
            "entities": {org: _frac(c, n)
                         for org, c in sorted(p.tracker_entity_traces.items())},
            "median_requests_per_trace": (
                round(float(statistics.median(p.tracker_counts)), 4)
                if p.tracker_counts else 0.0),
        },
        "click_id_prevalence": {
            **{c: _frac(p.clickid_seen.get(c, 0), n) for c in CLICK_ID_CATEGORIES},
            "any": _frac(p.clickid_seen.get("__any__", 0), n),
        },
        "persistence": {
            "delivered": delivered,
            "exact": {c: _frac(p.persisted_exact.get(c, 0), delivered[c])
                      for c in CLICK_ID_CATEGORIES},
            "substring": {c: _frac(p.persisted_substring.get(c, 0), delivered[c])
                          for c in CLICK_ID_CATEGORIES},
        },
        "first_party_reid": {
            "revisit_pairs": p.revisit_pairs,
            "stable": p.stable_pairs,
            "stable_fraction": _frac(p.stable_pairs, p.revisit_pairs),
        },
    }


def aggregate(results: list[TraceResult],
              reid_results: list[ReidPairResult] = (),
              skipped: int = 0) -> AuditReport:
    """Fold per-trace and per-revisit-pair contributions into a report."""
    seen: set[tuple[str, str]] = set()
    for r in results:
        key = (r.engine_id, r.trace_key)
        if key in seen:
            raise InconsistentCorpus(f"duplicate trace {key!r} in findings")
        seen.add(key)
    engines = {e for e, _ in seen}
    for rr in reid_results:
        if rr.engine_id not in engines:
            raise InconsistentCorpus(
                f"reid pair references unknown engine {rr.engine_id!r}")

    partials: dict[str, EnginePartial] = {}
    for r in results:
        partials = merge_partials(partials, trace_partial(r))
    for rr in reid_results:
        partials = merge_partials(partials, reid_partial(rr))
    return AuditReport(trace_count=len(results), skipped=skipped, engines=partials)


# ---------------------------------------------------------------------------
# rendering

def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _render_csv(data: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["engine", "section", "key", "value"])
    writer.writerow(["", "header", "trace_count", data["header"]["trace_count"]])
    writer.writerow(["", "header", "skipped", data["header"]["skipped"]])

    def emit(engine: str, section: str, obj, prefix: str = ""):
        for key in sorted(obj):
            value = obj[key]
            name = f"{prefix}{key}"
            if isinstance(value, dict):
                emit(engine, section, value, prefix=name + ".")
            else:
                writer.writerow([engine, section, name, value])

    for engine in sorted(data["engines"]):
        for section in sorted(data["engines"][engine]):
            value = data["engines"][engine][section]
            if isinstance(value, dict):
                emit(engine, section, value)
            else:
                writer.writerow([engine, section, section, value])
    return buf.getvalue()


def _md_table(headers: list[str], rows: list[list]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join(" --- " for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return lines


def _render_markdown(data: dict) -> str:
    lines = ["# Ad-click privacy audit", ""]
    header = data["header"]
    lines.append(f"Traces analyzed: {header['trace_count']} (skipped: {header['skipped']})")
    lines.append("")
    engines = sorted(data["engines"])

    lines.append("## Corpus")
    lines += _md_table(
        ["Engine", "Traces", "Queries", "Destination sites", "Redirect paths"],
        [[e, *(data["engines"][e]["corpus"][k] for k in
               ("traces", "queries", "destination_sites", "redirect_paths"))]
         for e in engines])
    lines.append("")

    lines.append("## Click-ID prevalence")
    lines += _md_table(
        ["Engine", "msclkid", "gclid", "other_uid", "any"],
        [[e, *(data["engines"][e]["click_id_prevalence"][k] for k in
               ("msclkid", "gclid", "other_uid", "any"))] for e in engines])
    lines.append("")

    for e in engines:
        d = data["engines"][e]
        lines.append(f"## {e}")
        lines.append("")
        lines.append(f"Bounce rate: {d['bounce_rate']}")
        lines.append("")
        lines.append("### Intermediate sites per path")
        lines += _md_table(
            ["Sites", "Paths", "Fraction"],
            [[k, d["intermediate_sites"]["histogram"][k],
              d["intermediate_sites"]["fractions"][k]]
             for k in sorted(d["intermediate_sites"]["histogram"], key=int)])
        lines.append("")
        lines.append("### Organization exposure")
        lines += _md_table(
            ["Organization", "Fraction of paths"],
            [[org, frac] for org, frac in sorted(d["organization_exposure"].items())])
        lines.append("")
        lines.append("### UID-cookie redirectors per path")
        lines += _md_table(
            ["Redirectors", "Paths", "Fraction"],
            [[k, d["uid_cookie_redirectors"]["histogram"][k],
              d["uid_cookie_redirectors"]["fractions"][k]]
             for k in sorted(d["uid_cookie_redirectors"]["histogram"], key=int)])
        lines.append("")
        lines.append("### Destination trackers")
        lines += _md_table(
            ["Entity", "Fraction of traces"],
            [[org, frac] for org, frac in
             sorted(d["destination_trackers"]["entities"].items())])
        lines.append(f"\nMedian tracker requests per trace: "
                     f"{d['destination_trackers']['median_requests_per_trace']}")
        lines.append("")
        lines.append("### Click-ID persistence")
        lines += _md_table(
            ["Param", "Delivered", "Exact", "Substring"],
            [[c, d["persistence"]["delivered"][c], d["persistence"]["exact"][c],
              d["persistence"]["substring"][c]] for c in CLICK_ID_CATEGORIES])
        lines.append("")
        lines.append("### First-party reidentification")
        reid = d["first_party_reid"]
        lines += _md_table(
            ["Revisit pairs", "Stable", "Fraction"],
            [[reid["revisit_pairs"], reid["stable"], reid["stable_fraction"]]])
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def render(report: "AuditReport | dict", fmt: str) -> str:
    """Serialize a report (or its dict form) as json, csv, or markdown."""
    data = report.to_dict() if isinstance(report, AuditReport) else report
    if fmt == "json":
        return canonical_json(data)
    if fmt == "csv":
        return _render_csv(data)
    if fmt == "markdown":
        return _render_markdown(data)
    raise UnknownFormat(f"unknown report format {fmt!r}")
