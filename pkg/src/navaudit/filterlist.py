"""Network filter lists in adblock syntax, and request classification.

Supports the subset of the EasyList grammar that matters for network
request blocking: plain substring patterns, ``||`` domain anchors, ``|``
start/end anchors, ``*`` wildcards, the ``^`` separator class, ``@@``
exceptions, ``/.../`` regex rules, and the third-party / domain= /
resource-type options. Cosmetic rules (``##`` and friends) are counted and
skipped. Unsupported options are kept on the rule and flagged but do not
constrain matching.

Matching is case-insensitive over the full URL text; nothing is
percent-decoded. Rules are indexed by one "good token" (a letter-digit run
bounded on both sides by literal separators or anchors) so a lookup only
evaluates rules whose token occurs in the URL, plus an always-checked
bucket for rules that have no such token.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlsplit

from . import sitemap

__all__ = [
    "InvalidUrl",
    "SUPPORTED_TYPES",
    "RuleOptions",
    "FilterRule",
    "RuleSet",
    "MatchResult",
    "TrackerHit",
    "parse_rules",
    "parse_rule_files",
    "match",
    "classify_trace_trackers",
]


class InvalidUrl(ValueError):
    """URL is relative or uses a scheme filters cannot apply to."""


# separator placeholder: anything that is not letter, digit, _ - . %
# may also match the end of the URL
_SEP = r"(?:[^a-z0-9_\-.%]|$)"
# || matches at a host-label boundary of any scheme's authority
_DOMAIN_PREFIX = r"^[a-z][a-z0-9+.\-]*://(?:[^/?#]*\.)?"

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_OPTION_PART_RE = re.compile(r"^~?[a-z][a-z0-9_-]*(=[^,]*)?$", re.IGNORECASE)

_SUPPORTED_TYPES = frozenset({"script", "image", "xhr", "subdocument", "websocket", "other"})
_TYPE_ALIASES = {"xmlhttprequest": "xhr"}

# trace resource vocabulary -> filter option vocabulary
_REQUEST_TYPE_MAP = {
    "document": "subdocument",
    "fetch": "xhr",
    "stylesheet": "other",
    "font": "other",
    "media": "other",
}

# every resource-type spelling accepted by match()
SUPPORTED_TYPES = frozenset(_SUPPORTED_TYPES | set(_REQUEST_TYPE_MAP))

_COSMETIC_MARKERS = ("##", "#@#", "#?#", "#$#", "#%#")


@dataclass(frozen=True)
class RuleOptions:
    third_party: bool | None = None      # True: third only, False: first only
    resource_types: frozenset[str] | None = None
    domains_include: tuple[str, ...] = ()
    domains_exclude: tuple[str, ...] = ()
    unsupported: tuple[str, ...] = ()


@dataclass(frozen=True)
class FilterRule:
    raw: str
    kind: str                   # "block" | "exception"
    anchor: str                 # "none" | "domain" | "start"
    end_anchor: bool
    pattern: str                # normalized body, lowercased, anchors stripped
    is_regex: bool
    options: RuleOptions
    regex: re.Pattern = field(compare=False, repr=False, default=None)
    index_token: str | None = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if self.regex is None:
            object.__setattr__(self, "regex", _compile(self))
            object.__setattr__(self, "index_token", _good_token(self))


def _compile(rule: FilterRule) -> re.Pattern:
    if rule.is_regex:
        return re.compile(rule.pattern, re.IGNORECASE)
    out = []
    if rule.anchor == "domain":
        out.append(_DOMAIN_PREFIX)
    elif rule.anchor == "start":
        out.append("^")
    for ch in rule.pattern:
        if ch == "*":
            out.append(".*")
        elif ch == "^":
            out.append(_SEP)
        else:
            out.append(re.escape(ch))
    if rule.end_anchor:
        out.append("$")
    return re.compile("".join(out))


def _good_token(rule: FilterRule) -> str | None:
    """Longest letter-digit run usable as an index key.

    A run qualifies when both of its edges are fixed in any matching URL:
    bounded by a literal non-wildcard character, or pinned by an anchor.
    Such a run must appear in the URL as a complete token, which makes an
    exact-token index sound.
    """
    if rule.is_regex:
        return None
    pat = rule.pattern
    best = None
    for m in _TOKEN_RE.finditer(pat):
        run = m.group(0)
        if len(run) < 3:
            continue
        s, e = m.start(), m.end()
        left_ok = (s > 0 and pat[s - 1] != "*") or (
            s == 0 and rule.anchor in ("domain", "start"))
        right_ok = (e < len(pat) and pat[e] != "*") or (
            e == len(pat) and rule.end_anchor)
        if left_ok and right_ok and (best is None or len(run) > len(best)):
            best = run
    return best


def _parse_options(text: str, warnings: list[str], where: str) -> RuleOptions | None:
    third_party = None
    types: set[str] = set()
    include: list[str] = []
    exclude: list[str] = []
    unsupported: list[str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            return None
        low = part.lower()
        if low == "third-party":
            third_party = True
        elif low == "~third-party":
            third_party = False
        elif low.startswith("domain="):
            for entry in low[len("domain="):].split("|"):
                entry = entry.strip()
                if not entry:
                    continue
                if entry.startswith("~"):
                    exclude.append(entry[1:])
                else:
                    include.append(entry)
        else:
            name = _TYPE_ALIASES.get(low, low)
            if name in _SUPPORTED_TYPES:
                types.add(name)
            else:
                unsupported.append(part)
    if unsupported:
        warnings.append(f"{where}: unsupported option(s) {','.join(unsupported)}")
    return RuleOptions(
        third_party=third_party,
        resource_types=frozenset(types) if types else None,
        domains_include=tuple(include),
        domains_exclude=tuple(exclude),
        unsupported=tuple(unsupported),
    )


def _split_option_suffix(text: str) -> tuple[str, str | None]:
    idx = text.rfind("$")
    if idx <= 0 or idx == len(text) - 1:
        return text, None
    candidate = text[idx + 1:]
    if all(_OPTION_PART_RE.match(p.strip()) for p in candidate.split(",")):
        return text[:idx], candidate
    return text, None


def _parse_line(line: str, where: str, warnings: list[str]) -> FilterRule | None:
    kind = "block"
    body = line
    if body.startswith("@@"):
        kind = "exception"
        body = body[2:]

    body, option_text = _split_option_suffix(body)
    options = RuleOptions()
    if option_text is not None:
        parsed = _parse_options(option_text, warnings, where)
        if parsed is None:
            warnings.append(f"{where}: empty option, rule dropped")
            return None
        options = parsed

    if len(body) > 1 and body.startswith("/") and body.endswith("/"):
        try:
            re.compile(body[1:-1], re.IGNORECASE)
        except re.error as exc:
            warnings.append(f"{where}: bad regex rule ({exc}), dropped")
            return None
        return FilterRule(raw=line, kind=kind, anchor="none", end_anchor=False,
                          pattern=body[1:-1], is_regex=True, options=options)

    anchor = "none"
    if body.startswith("||"):
        anchor = "domain"
        body = body[2:]
    elif body.startswith("|"):
        anchor = "start"
        body = body[1:]
    end_anchor = False
    if body.endswith("|"):
        end_anchor = True
        body = body[:-1]
    body = re.sub(r"\*{2,}", "*", body)  # keep pattern tokens non-empty
    if not body and anchor == "none" and not end_anchor:
        warnings.append(f"{where}: empty rule dropped")
        return None
    return FilterRule(raw=line, kind=kind, anchor=anchor, end_anchor=end_anchor,
                      pattern=body.lower(), is_regex=False, options=options)


class RuleSet:
    """Parsed rules plus the token index used by match()."""

    def __init__(self, rules: list[FilterRule], source_names: tuple[str, ...],
                 warnings: tuple[str, ...], comment_count: int, cosmetic_count: int):
        self.rules: tuple[FilterRule, ...] = tuple(rules)
        self.source_names = source_names
        self.warnings = warnings
        self.comment_count = comment_count
        self.cosmetic_count = cosmetic_count
        # position-ordered indexes, separate for block and exception rules
        self._indexed: dict[str, dict[str, list[int]]] = {"block": {}, "exception": {}}
        self._unindexed: dict[str, list[int]] = {"block": [], "exception": []}
        for pos, rule in enumerate(self.rules):
            if rule.index_token is None:
                self._unindexed[rule.kind].append(pos)
            else:
                self._indexed[rule.kind].setdefault(rule.index_token, []).append(pos)

    @property
    def rule_count(self) -> int:
        return len(self.rules)

    def __eq__(self, other):
        return isinstance(other, RuleSet) and self.rules == other.rules

    def __repr__(self):
        return f"RuleSet({self.rule_count} rules from {list(self.source_names)})"

    def candidates(self, kind: str, url_tokens: set[str]) -> list[int]:
        index = self._indexed[kind]
        positions = list(self._unindexed[kind])
        for token in url_tokens:
            bucket = index.get(token)
            if bucket:
                positions.extend(bucket)
        positions.sort()
        return positions

    def to_text(self) -> str:
        return "\n".join(rule.raw for rule in self.rules) + "\n"


def parse_rules(text: str, source: str = "<string>") -> RuleSet:
    """Parse one filter list text into a RuleSet."""
    rules: list[FilterRule] = []
    warnings: list[str] = []
    comments = 0
    cosmetic = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("!") or (line.startswith("[") and line.endswith("]")):
            comments += 1
            continue
        if any(marker in line for marker in _COSMETIC_MARKERS):
            cosmetic += 1
            continue
        rule = _parse_line(line, f"{source}:{lineno}", warnings)
        if rule is not None:
            rules.append(rule)
    return RuleSet(rules, (source,), tuple(warnings), comments, cosmetic)


def parse_rule_files(paths) -> RuleSet:
    """Parse and concatenate several list files, preserving order."""
    rules: list[FilterRule] = []
    warnings: list[str] = []
    names: list[str] = []
    comments = 0
    cosmetic = 0
    for path in paths:
        path = Path(path)
        part = parse_rules(path.read_text("utf-8"), source=path.name)
        rules.extend(part.rules)
        warnings.extend(part.warnings)
        names.append(path.name)
        comments += part.comment_count
        cosmetic += part.cosmetic_count
    return RuleSet(rules, tuple(names), tuple(warnings), comments, cosmetic)


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    winning_rule: FilterRule | None
    exception_applied: bool
    exception_rule: FilterRule | None = None


def _domain_matches(host: str, entry: str) -> bool:
    return host == entry or host.endswith("." + entry)


def _rule_applies(rule: FilterRule, url_low: str, source_site: str | None,
                  is_third: bool, rtype: str | None) -> bool:
    o = rule.options
    if o.resource_types is not None:
        if (rtype or "other") not in o.resource_types:
            return False
    if o.third_party is not None:
        if is_third is not o.third_party:
            return False
    if o.domains_include:
        if source_site is None or not any(
                _domain_matches(source_site, e) for e in o.domains_include):
            return False
    if o.domains_exclude and source_site is not None:
        if any(_domain_matches(source_site, e) for e in o.domains_exclude):
            return False
    return rule.regex.search(url_low) is not None


def match(ruleset: RuleSet, url: str, *, source_site: str | None = None,
          resource_type: str | None = None, is_third_party: bool | None = None,
          psl=None) -> MatchResult:
    """Run one URL through the rule set.

    ``source_site`` is the eTLD+1 of the page that issued the request; it
    drives ``$domain=`` options. When ``is_third_party`` is not given it is
    derived by comparing the request site against ``source_site``; with
    neither provided the request counts as first-party. Exception
    precedence: a matching ``@@`` rule vetoes any matching block rule.
    """
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc or not parts.hostname:
        raise InvalidUrl(f"cannot match non-absolute or non-http(s) url {url!r}")
    url_low = url.lower()
    rtype = _REQUEST_TYPE_MAP.get(resource_type, resource_type)

    if is_third_party is None:
        if source_site is None:
            is_third = False
        else:
            req_site = sitemap.etld_plus_one(parts.hostname, psl).name
            is_third = req_site != source_site.lower()
    else:
        is_third = is_third_party
    source_low = source_site.lower() if source_site is not None else None

    url_tokens = {m.group(0) for m in _TOKEN_RE.finditer(url_low) if len(m.group(0)) >= 3}

    winning = None
    for pos in ruleset.candidates("block", url_tokens):
        rule = ruleset.rules[pos]
        if _rule_applies(rule, url_low, source_low, is_third, rtype):
            winning = rule
            break
    if winning is None:
        return MatchResult(matched=False, winning_rule=None, exception_applied=False)
    for pos in ruleset.candidates("exception", url_tokens):
        rule = ruleset.rules[pos]
        if _rule_applies(rule, url_low, source_low, is_third, rtype):
            return MatchResult(matched=False, winning_rule=None,
                               exception_applied=True, exception_rule=rule)
    return MatchResult(matched=True, winning_rule=winning, exception_applied=False)


@dataclass(frozen=True)
class TrackerHit:
    request_id: str
    url: str
    tracker_site: str
    rule: str
    source_host: str
    resource_type: str
    third_party: bool
    timestamp: int


def classify_trace_trackers(trace, ruleset: RuleSet, psl=None) -> tuple[TrackerHit, ...]:
    """Match every request of a trace; returns the blocked ones.

    The source context of a request is its initiator origin; requests with
    unsupported URL schemes are skipped.
    """
    from .trace import RequestEvent  # local import keeps module deps one-way

    hits = []
    for ev in trace.events:
        if not isinstance(ev, RequestEvent):
            continue
        req_host = urlsplit(ev.url).hostname
        src_host = urlsplit(ev.initiator_origin).hostname or req_host
        if req_host is None or src_host is None:
            continue
        src_site = sitemap.etld_plus_one(src_host, psl).name
        try:
            result = match(ruleset, ev.url, source_site=src_site,
                           resource_type=ev.resource_type, psl=psl)
        except InvalidUrl:
            continue
        if result.matched:
            req_site = sitemap.etld_plus_one(req_host, psl).name
            hits.append(TrackerHit(
                request_id=ev.request_id, url=ev.url, tracker_site=req_site,
                rule=result.winning_rule.raw, source_host=src_host,
                resource_type=ev.resource_type,
                third_party=req_site != src_site, timestamp=ev.timestamp,
            ))
    return tuple(hits)
