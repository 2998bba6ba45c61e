"""Command line entry point.

One binary, one subcommand per pipeline stage:

    analyze     full pipeline over a trace directory
    match       check one URL against filter lists
    redirects   navigation paths and bounce statistics only
    uids        identifier classification only
    uid-review  export uid candidates for manual triage
    smuggle     smuggling / persistence / reid findings only
    report      re-render a report.json in another format
    fetch-lists download pinned filter lists

Config precedence: command line flags beat the --config file, which beats
built-in defaults. NAVAUDIT_PARALLELISM overrides the worker count from
either source.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import urllib.error
import urllib.request
from pathlib import Path

from . import filterlist, pipeline, redirects, report, sitemap, smuggling, trace as trace_mod, uid

__all__ = ["main", "ConfigError", "parse_config_file"]

HARD_FAILURE_THRESHOLD = 0.10

FILTER_LIST_PINS = {
    "easylist.txt": "https://easylist.to/easylist/easylist.txt",
    "easyprivacy.txt": "https://easylist.to/easylist/easyprivacy.txt",
}

DEFAULTS = {
    "out": "out",
    "parallelism": 1,
    "strict_paper_codes": False,
    "substring_persistence": True,
    "click_id_names": list(smuggling.DEFAULT_CLICK_ID_NAMES),
    "uid_min_length": 8,
    "uid_cross_instance_min_share": 2,
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config file: flat "key = value" lines, toml-flavored scalars and lists

def _parse_scalar(text: str, where: str):
    text = text.strip()
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text and all(c.isalnum() or c in "._-/:" for c in text):
        return text
    raise ConfigError(f"{where}: cannot parse value {text!r}")


def parse_config_file(path: str | Path) -> dict:
    """Flat key/value config. Supports quoted strings, ints, floats,
    booleans, and [a, b] lists; # starts a comment."""
    try:
        lines = Path(path).read_text("utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    out: dict = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        where = f"{path}:{lineno}"
        if not key.replace("_", "").isalnum():
            raise ConfigError(f"{where}: bad key {key!r}")
        if value.startswith("[") and value.endswith("]"):
            inner = value[1:-1].strip()
            out[key] = ([] if not inner else
                        [_parse_scalar(p, where) for p in inner.split(",")])
        else:
            out[key] = _parse_scalar(value, where)
    return out


class Settings:
    """Merged view over CLI args, config file, and defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = {}
        config_path = self._args.get("config")
        if config_path:
            self._file = parse_config_file(config_path)

    def get(self, key: str, default=None):
        cli = self._args.get(key)
        if cli is not None:
            return cli
        if key in self._file:
            return self._file[key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        return default

    def parallelism(self) -> int:
        env = os.environ.get("NAVAUDIT_PARALLELISM")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise ConfigError(f"NAVAUDIT_PARALLELISM={env!r} is not an integer")
        else:
            value = int(self.get("parallelism"))
        if value < 1:
            raise ConfigError("parallelism must be >= 1")
        return value


def _existing_path(value, what: str) -> Path:
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{what} {value!r} does not exist")
    return path


def _filter_paths(settings: Settings) -> list[Path]:
    raw = settings.get("filters")
    if not raw:
        return []
    parts: list[str] = []
    items = raw if isinstance(raw, list) else [raw]
    for item in items:
        parts += [p.strip() for p in str(item).split(",") if p.strip()]
    return [_existing_path(p, "filter list") for p in parts]


def _load_ruleset(settings: Settings) -> filterlist.RuleSet:
    paths = _filter_paths(settings)
    if not paths:
        return filterlist.parse_rules("", source="<none>")
    return filterlist.parse_rule_files(paths)


def _load_entities(settings: Settings) -> sitemap.EntityList:
    path = settings.get("entities")
    if not path:
        return sitemap.EntityList()
    try:
        return sitemap.EntityList.from_json(_existing_path(path, "entity list"))
    except (json.JSONDecodeError, AttributeError) as exc:
        raise ConfigError(f"entity list {path!r}: {exc}") from exc


def _load_psl(settings: Settings):
    path = settings.get("psl")
    if not path:
        return None  # modules fall back to the bundled snapshot
    return sitemap.PublicSuffixList(_existing_path(path, "public suffix list").read_text("utf-8"))


def _uid_config(settings: Settings) -> uid.UidConfig:
    window = settings.get("uid_timestamp_window")
    if isinstance(window, str):
        try:
            lo, _, hi = window.partition(":")
            window = (int(lo), int(hi))
        except ValueError:
            raise ConfigError(f"bad uid_timestamp_window {window!r}; want LO:HI seconds")
    elif isinstance(window, list):
        if len(window) != 2:
            raise ConfigError("uid_timestamp_window wants exactly two values")
        window = (int(window[0]), int(window[1]))
    wordlist = None
    wl_path = settings.get("uid_wordlist")
    if wl_path:
        words = _existing_path(wl_path, "wordlist").read_text("utf-8").split()
        wordlist = frozenset(w.lower() for w in words)
    allow: tuple = ()
    deny: tuple = ()
    allow_path = settings.get("uid_allow")
    if allow_path:
        allow = uid.load_manual_patterns(_existing_path(allow_path, "allow file"))
    deny_path = settings.get("uid_deny")
    if deny_path:
        deny = uid.load_manual_patterns(_existing_path(deny_path, "deny file"))
    try:
        return uid.UidConfig(
            timestamp_window=tuple(window) if window else None,
            min_length=int(settings.get("uid_min_length")),
            wordlist=wordlist,
            cross_instance_min_share=int(settings.get("uid_cross_instance_min_share")),
            manual_allow=allow,
            manual_deny=deny,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _traces_dir(settings: Settings) -> Path:
    value = settings.get("traces")
    if not value:
        raise ConfigError("no traces directory given (--traces or config key 'traces')")
    path = Path(value)
    if not path.is_dir():
        raise ConfigError(f"traces directory {value!r} does not exist")
    return path


def _click_id_names(settings: Settings) -> tuple[str, ...]:
    raw = settings.get("click_id_names")
    if isinstance(raw, str):
        raw = [p.strip() for p in raw.split(",") if p.strip()]
    return tuple(raw)


# ---------------------------------------------------------------------------
# subcommands

def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        settings = Settings(args)
        traces_dir = _traces_dir(settings)
        ruleset = _load_ruleset(settings)
        entities = _load_entities(settings)
        psl = _load_psl(settings)
        uid_cfg = _uid_config(settings)
        parallelism = settings.parallelism()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if ruleset.rule_count == 0:
        print("warning: no filter rules loaded; tracker matching disabled",
              file=sys.stderr)

    run = pipeline.analyze_corpus(
        traces_dir,
        ruleset=ruleset,
        entities=entities,
        psl=psl,
        uid_cfg=uid_cfg,
        strict_paper_codes=bool(settings.get("strict_paper_codes")),
        substring_persistence=bool(settings.get("substring_persistence")),
        click_id_names=_click_id_names(settings),
        parallelism=parallelism,
    )
    if run.total_files == 0:
        print(f"error: no *.trace.json files in {traces_dir}", file=sys.stderr)
        return 1
    if len(run.hard_failures) / run.total_files > HARD_FAILURE_THRESHOLD:
        for name, err in run.hard_failures:
            print(f"error: {name}: {err}", file=sys.stderr)
        print(f"error: {len(run.hard_failures)} of {run.total_files} traces "
              f"failed to load", file=sys.stderr)
        return 2

    out_dir = Path(settings.get("out"))
    pipeline.write_outputs(run, out_dir)
    for message in run.warnings:
        print(f"warning: {message}", file=sys.stderr)
    analyzed = len(run.traces)
    skipped = len(run.hard_failures) + len(run.skipped)
    print(f"analyzed: {analyzed} traces, skipped: {skipped}")
    print(f"outputs written to {out_dir}")
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    try:
        settings = Settings(args)
        ruleset = _load_ruleset(settings)
        if ruleset.rule_count == 0 and not _filter_paths(settings):
            raise ConfigError("match needs at least one --filters file")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    third_party = None
    if args.third_party:
        third_party = True
    elif args.first_party:
        third_party = False
    try:
        result = filterlist.match(
            ruleset, args.url,
            source_site=args.source_site,
            resource_type=args.resource_type,
            is_third_party=third_party,
        )
    except filterlist.InvalidUrl as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = {
        "matched": result.matched,
        "winning_rule": result.winning_rule.raw if result.winning_rule else None,
        "exception_applied": result.exception_applied,
        "exception_rule": result.exception_rule.raw if result.exception_rule else None,
    }
    print(json.dumps(doc, sort_keys=True))
    return 0 if result.matched else 3


def cmd_redirects(args: argparse.Namespace) -> int:
    try:
        settings = Settings(args)
        traces_dir = _traces_dir(settings)
        entities = _load_entities(settings)
        psl = _load_psl(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    codes = (redirects.STRICT_REDIRECT_CODES if settings.get("strict_paper_codes")
             else redirects.REDIRECT_CODES)
    traces, skipped = trace_mod.load_corpus(traces_dir, strict=False)
    for name, err in skipped:
        print(f"warning: {name}: {err}", file=sys.stderr)

    records = []
    partials: dict = {}
    for t in traces:
        key = t.source_path or t.instance_id
        try:
            path = redirects.build_navigation_path(t, redirect_codes=codes, psl=psl)
        except redirects.PathError as exc:
            print(f"warning: {key}: {exc}", file=sys.stderr)
            continue
        metrics = redirects.compute_path_metrics(path, entities)
        arrival = redirects.arrival_timestamp(t, path, psl)
        bundle = pipeline.TraceBundle(index=0, key=key, path=path, path_error=None,
                                      metrics=metrics, hits=(), arrival_ts=arrival)
        records.append(pipeline._path_dict(bundle))
        part = partials.setdefault(t.engine_id, {"paths": 0, "hist": {}, "bounced": 0})
        part["paths"] += 1
        part["hist"][metrics.intermediate_site_count] = \
            part["hist"].get(metrics.intermediate_site_count, 0) + 1
        part["bounced"] += 1 if metrics.bounced else 0

    summary = {
        engine: {
            "paths": part["paths"],
            "intermediate_site_histogram": {str(k): v
                                            for k, v in sorted(part["hist"].items())},
            "bounce_rate": round(part["bounced"] / part["paths"], 4),
        }
        for engine, part in sorted(partials.items())
    }
    out_dir = Path(settings.get("out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "paths.jsonl").write_text(pipeline._jsonl(records), "utf-8")
    (out_dir / "paths-summary.json").write_text(report.canonical_json(summary), "utf-8")
    print(f"wrote {len(records)} paths to {out_dir}")
    return 0


def _classified(settings: Settings):
    traces_dir = _traces_dir(settings)
    psl = _load_psl(settings)
    uid_cfg = _uid_config(settings)
    traces, skipped = trace_mod.load_corpus(traces_dir, strict=False)
    for name, err in skipped:
        print(f"warning: {name}: {err}", file=sys.stderr)
    if not traces:
        raise ConfigError(f"no loadable traces in {traces_dir}")
    return traces, uid.classify_uids(traces, uid_cfg, psl=psl), psl, uid_cfg


def cmd_uids(args: argparse.Namespace) -> int:
    try:
        settings = Settings(args)
        _, uid_report, _, _ = _classified(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(settings.get("out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "uids.json").write_text(
        report.canonical_json(uid_report.to_dict()), "utf-8")
    print(f"{len(uid_report.uid_pairs)} uid pairs; funnel "
          f"{json.dumps(uid_report.funnel)}")
    print(f"wrote {out_dir / 'uids.json'}")
    return 0


def _candidate_rows(uid_report) -> list[list[str]]:
    contexts: dict = {}
    for tok in uid_report.tokens:
        ctx = contexts.setdefault(tok.pair, {"kinds": set(), "sites": set(), "count": 0})
        ctx["kinds"].add(tok.source_kind)
        ctx["sites"].add(tok.site)
        ctx["count"] += 1
    stage_order = list(uid.FUNNEL_STAGES[1:])  # extraction itself has no verdict
    rows = []
    for pair in sorted(contexts):
        name, value = pair
        verdict = uid_report.verdicts.get(pair)
        final = verdict.verdict if verdict else "uid"
        cells = []
        for stage in stage_order:
            if verdict is None or verdict.verdict == "uid":
                cells.append("kept")
            elif stage_order.index(stage) < stage_order.index(verdict.stage):
                cells.append("kept")
            elif stage == verdict.stage:
                cells.append(verdict.reason or "discarded")
            else:
                cells.append("")
        ctx = contexts[pair]
        rows.append([name, value, ";".join(sorted(ctx["kinds"])),
                     ";".join(sorted(ctx["sites"])), str(ctx["count"]), final] + cells)
    return rows


def cmd_uid_review(args: argparse.Namespace) -> int:
    try:
        settings = Settings(args)
        _, uid_report, _, _ = _classified(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(settings.get("out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "value", "sources", "sites", "occurrences", "final"]
                    + list(uid.FUNNEL_STAGES[1:]))
    for row in _candidate_rows(uid_report):
        writer.writerow(row)
    target = out_dir / "uid-candidates.csv"
    target.write_text(buf.getvalue(), "utf-8")
    print(f"wrote {target}")
    return 0


def cmd_smuggle(args: argparse.Namespace) -> int:
    try:
        settings = Settings(args)
        traces_dir = _traces_dir(settings)
        psl = _load_psl(settings)
        uid_cfg = _uid_config(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    codes = (redirects.STRICT_REDIRECT_CODES if settings.get("strict_paper_codes")
             else redirects.REDIRECT_CODES)
    traces, skipped = trace_mod.load_corpus(traces_dir, strict=False)
    for name, err in skipped:
        print(f"warning: {name}: {err}", file=sys.stderr)

    uid_report = None
    if args.uids:
        try:
            doc = json.loads(Path(args.uids).read_text("utf-8"))
            uid_pairs = frozenset((u["name"], u["value"]) for u in doc["uids"])
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            print(f"error: cannot read uid report {args.uids!r}: {exc}", file=sys.stderr)
            return 1
    else:
        uid_report = uid.classify_uids(traces, uid_cfg, psl=psl)
        uid_pairs = uid_report.uid_pairs
    resolved = uid_cfg.resolved(traces) if traces else uid_cfg

    records: list[dict] = []
    paths: dict[str, redirects.NavigationPath] = {}
    for t in traces:
        key = t.source_path or t.instance_id
        try:
            path = redirects.build_navigation_path(t, redirect_codes=codes, psl=psl)
        except redirects.PathError as exc:
            print(f"warning: {key}: {exc}", file=sys.stderr)
            continue
        paths[id(t)] = path
        findings = smuggling.detect_uid_smuggling(
            path, uid_pairs, _click_id_names(settings))
        for f in findings:
            records.append({
                "kind": "smuggle", "trace": key, "name": f.name, "value": f.value,
                "first_seen_hop": f.first_seen_hop,
                "first_seen_index": f.first_seen_index,
                "delivered_to_destination": f.delivered_to_destination,
                "known_click_id": f.known_click_id,
                "classifier_uid": f.classifier_uid,
            })
        try:
            for pf in smuggling.detect_persistence(
                    t, path, findings,
                    substring=bool(settings.get("substring_persistence")), psl=psl):
                records.append({
                    "kind": "persistence", "trace": key, "name": pf.param_name,
                    "value": pf.value, "storage_kind": pf.storage_kind,
                    "storage_key": pf.storage_key, "match_kind": pf.match_kind,
                })
        except smuggling.MissingSnapshot as exc:
            print(f"warning: {key}: {exc}", file=sys.stderr)
        try:
            for site in sorted(smuggling.redirectors_with_uid_cookies(
                    t, path, uid_report=uid_report, cfg=resolved, psl=psl)):
                records.append({"kind": "redirector_uid_cookie", "trace": key,
                                "site": site})
        except smuggling.MissingSnapshot as exc:
            print(f"warning: {key}: {exc}", file=sys.stderr)

    pairs_doc = []
    for orig, rev in trace_mod.revisit_pairs(traces):
        path = paths.get(id(orig))
        if path is None:
            continue
        engine_site = path.source_site.name
        findings = smuggling.detect_first_party_reid(orig, rev, uid_pairs,
                                                     engine_site, psl=psl)
        pairs_doc.append({
            "engine": orig.engine_id,
            "instance_id": orig.instance_id,
            "engine_site": engine_site,
            "stable": any(f.stable for f in findings),
            "findings": [{"name": f.name, "value": f.value,
                          "storage_kind": f.storage_kind, "site": f.site,
                          "stable": f.stable} for f in findings],
        })

    out_dir = Path(settings.get("out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "smuggling.jsonl").write_text(pipeline._jsonl(records), "utf-8")
    (out_dir / "reid.json").write_text(
        report.canonical_json({"pairs": pairs_doc}), "utf-8")
    print(f"wrote {len(records)} findings to {out_dir}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.input).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read report: {exc}", file=sys.stderr)
        return 1
    try:
        rendered = report.render(data, args.format)
    except report.UnknownFormat as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(rendered, "utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(rendered)
    return 0


def cmd_fetch_lists(args: argparse.Namespace) -> int:
    if args.print_only:
        for name, url in FILTER_LIST_PINS.items():
            print(f"{name}\t{url}")
        return 0
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, url in FILTER_LIST_PINS.items():
        try:
            with urllib.request.urlopen(url, timeout=30) as resp:
                body = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            print(f"error: cannot fetch {url}: {exc}", file=sys.stderr)
            return 1
        target = out_dir / name
        target.write_bytes(body)
        digest = hashlib.sha256(body).hexdigest()
        print(f"{name}\tsha256:{digest}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring

def _add_common(sub: argparse.ArgumentParser, *, traces: bool = True) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    if traces:
        sub.add_argument("--traces", help="directory of *.trace.json files")
        sub.add_argument("--psl", help="public suffix list snapshot (default: bundled)")
        sub.add_argument("--out", help="output directory (default: out)")


def _add_uid_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--uid-allow", dest="uid_allow", help="manual allow pattern file")
    sub.add_argument("--uid-deny", dest="uid_deny", help="manual deny pattern file")
    sub.add_argument("--uid-min-length", dest="uid_min_length", type=int)
    sub.add_argument("--uid-cross-instance-min-share",
                     dest="uid_cross_instance_min_share", type=int)
    sub.add_argument("--uid-timestamp-window", dest="uid_timestamp_window",
                     metavar="LO:HI", help="epoch-second bounds for the timestamp heuristic")
    sub.add_argument("--uid-wordlist", dest="uid_wordlist",
                     help="newline-separated wordlist (default: bundled)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navaudit",
        description="Privacy audit toolkit for search-ad click traces.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("analyze", help="run the full pipeline")
    _add_common(p)
    p.add_argument("--filters", action="append",
                   help="filter list file(s), comma separated or repeated")
    p.add_argument("--entities", help="entity list JSON (Disconnect shape)")
    p.add_argument("--parallelism", type=int, help="worker count (default 1)")
    p.add_argument("--strict-paper-codes", dest="strict_paper_codes",
                   action="store_const", const=True, default=None,
                   help="treat only 301/302/307/308 as server redirects")
    p.add_argument("--no-substring-persistence", dest="substring_persistence",
                   action="store_const", const=False, default=None,
                   help="require verbatim persistence matches")
    p.add_argument("--click-id-names", dest="click_id_names",
                   help="comma separated click-ID parameter names")
    _add_uid_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("match", help="check one URL against filter lists")
    _add_common(p, traces=False)
    p.add_argument("--filters", action="append", required=False)
    p.add_argument("url")
    p.add_argument("--source-site", dest="source_site",
                   help="registrable domain of the initiating page")
    p.add_argument("--resource-type", dest="resource_type",
                   choices=sorted(filterlist.SUPPORTED_TYPES))
    flag = p.add_mutually_exclusive_group()
    flag.add_argument("--third-party", action="store_true")
    flag.add_argument("--first-party", action="store_true")
    p.set_defaults(func=cmd_match)

    p = subs.add_parser("redirects", help="navigation paths only")
    _add_common(p)
    p.add_argument("--entities", help="entity list JSON")
    p.add_argument("--strict-paper-codes", dest="strict_paper_codes",
                   action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_redirects)

    p = subs.add_parser("uids", help="identifier classification only")
    _add_common(p)
    _add_uid_flags(p)
    p.set_defaults(func=cmd_uids)

    p = subs.add_parser("uid-review", help="export uid candidates as CSV")
    _add_common(p)
    _add_uid_flags(p)
    p.set_defaults(func=cmd_uid_review)

    p = subs.add_parser("smuggle", help="smuggling, persistence, and reid findings")
    _add_common(p)
    _add_uid_flags(p)
    p.add_argument("--uids", help="reuse a uids.json instead of reclassifying")
    p.add_argument("--strict-paper-codes", dest="strict_paper_codes",
                   action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_smuggle)

    p = subs.add_parser("report", help="re-render a report.json")
    p.add_argument("input", help="path to report.json")
    p.add_argument("--format", default="markdown",
                   help="json, csv, or markdown (default markdown)")
    p.add_argument("--out", help="write here instead of stdout")
    p.set_defaults(func=cmd_report)

    p = subs.add_parser("fetch-lists", help="download pinned filter lists")
    p.add_argument("--out", default="filters", help="download directory")
    p.add_argument("--print-only", action="store_true",
                   help="print pinned URLs without fetching")
    p.set_defaults(func=cmd_fetch_lists)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
