"""Reference filter matcher used to cross-check the production engine.

Independent implementation of the same documented grammar: the wildcard
path is a plain character-by-character walk (no compiled regexes, no token
index) and every rule is evaluated in list order. Deliberately simple and
slow; the production engine must agree with it on every outcome.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from navaudit import sitemap

# characters the ^ separator does NOT match (it also matches the url end)
_NOT_SEPARATOR = set("abcdefghijklmnopqrstuvwxyz0123456789_-.%")

_TYPES = {"script", "image", "xhr", "subdocument", "websocket", "other"}
_TYPE_ALIASES = {"xmlhttprequest": "xhr"}
_TRACE_TYPE_MAP = {"document": "subdocument", "fetch": "xhr",
                   "stylesheet": "other", "font": "other", "media": "other"}
_OPTION_SHAPE = re.compile(r"^~?[a-z][a-z0-9_-]*(=[^,]*)?$", re.IGNORECASE)
_COSMETIC = ("##", "#@#", "#?#", "#$#", "#%#")


@dataclass
class NaiveRule:
    raw: str
    exception: bool
    anchor: str                  # none | domain | start
    end_anchor: bool
    pattern: str
    is_regex: bool
    third_party: bool | None = None
    types: set[str] | None = None
    include: tuple[str, ...] = ()
    exclude: tuple[str, ...] = ()
    longest_literal: str = ""
    _regex: re.Pattern | None = field(default=None, repr=False)


def _longest_literal(pattern: str) -> str:
    best = cur = ""
    for ch in pattern:
        if ch in "*^":
            if len(cur) > len(best):
                best = cur
            cur = ""
        else:
            cur += ch
    return best if len(best) >= len(cur) else cur


def _parse_options(rule: NaiveRule, text: str) -> None:
    for part in text.split(","):
        part = part.strip().lower()
        if part == "third-party":
            rule.third_party = True
        elif part == "~third-party":
            rule.third_party = False
        elif part.startswith("domain="):
            for entry in part[len("domain="):].split("|"):
                entry = entry.strip()
                if not entry:
                    continue
                if entry.startswith("~"):
                    rule.exclude += (entry[1:],)
                else:
                    rule.include += (entry,)
        else:
            name = _TYPE_ALIASES.get(part, part)
            if name in _TYPES:
                rule.types = (rule.types or set()) | {name}
            # anything else is an unsupported option: noted, never enforced


def parse_naive(text: str) -> list[NaiveRule]:
    rules: list[NaiveRule] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("!") or (
                line.startswith("[") and line.endswith("]")):
            continue
        if any(marker in line for marker in _COSMETIC):
            continue
        body = line
        exception = body.startswith("@@")
        if exception:
            body = body[2:]

        option_text = None
        idx = body.rfind("$")
        if 0 < idx < len(body) - 1:
            candidate = body[idx + 1:]
            if all(_OPTION_SHAPE.match(p.strip()) for p in candidate.split(",")):
                body, option_text = body[:idx], candidate

        rule = NaiveRule(raw=line, exception=exception, anchor="none",
                         end_anchor=False, pattern="", is_regex=False)
        if option_text:
            _parse_options(rule, option_text)

        if len(body) > 1 and body.startswith("/") and body.endswith("/"):
            rule.is_regex = True
            rule.pattern = body[1:-1]
            rule._regex = re.compile(rule.pattern, re.IGNORECASE)
            rules.append(rule)
            continue

        if body.startswith("||"):
            rule.anchor = "domain"
            body = body[2:]
        elif body.startswith("|"):
            rule.anchor = "start"
            body = body[1:]
        if body.endswith("|"):
            rule.end_anchor = True
            body = body[:-1]
        while "**" in body:
            body = body.replace("**", "*")
        if not body and rule.anchor == "none" and not rule.end_anchor:
            continue
        rule.pattern = body.lower()
        rule.longest_literal = _longest_literal(rule.pattern)
        rules.append(rule)
    return rules


def _walk(pattern: str, url: str, start: int, require_end: bool) -> bool:
    """Character-level wildcard walk from one start position."""
    memo: dict[tuple[int, int], bool] = {}

    def go(pi: int, ui: int) -> bool:
        key = (pi, ui)
        if key in memo:
            return memo[key]
        if pi == len(pattern):
            out = ui == len(url) if require_end else True
        else:
            ch = pattern[pi]
            if ch == "*":
                out = any(go(pi + 1, k) for k in range(ui, len(url) + 1))
            elif ch == "^":
                if ui == len(url):
                    out = go(pi + 1, ui)  # separator also matches the end
                elif url[ui] not in _NOT_SEPARATOR:
                    out = go(pi + 1, ui + 1)
                else:
                    out = False
            elif ui < len(url) and url[ui] == ch:
                out = go(pi + 1, ui + 1)
            else:
                out = False
        memo[key] = out
        return out

    return go(0, start)


def _domain_anchor_positions(url: str) -> list[int]:
    """Positions where a ||-anchored pattern may begin: start of the
    authority, or just past any dot before the authority ends."""
    sep = url.find("://")
    if sep <= 0:
        return []
    scheme = url[:sep]
    if not ("a" <= scheme[0] <= "z"):
        return []
    if any(not (c.isascii() and (c.isalnum() or c in "+.-")) for c in scheme[1:]):
        return []
    start = sep + 3
    positions = [start]
    for p in range(start, len(url)):
        c = url[p]
        if c in "/?#":
            break
        if c == ".":
            positions.append(p + 1)
    return positions


def _pattern_matches(rule: NaiveRule, url_low: str) -> bool:
    if rule.is_regex:
        return rule._regex.search(url_low) is not None
    if rule.longest_literal and rule.longest_literal not in url_low:
        return False
    if rule.anchor == "start":
        return _walk(rule.pattern, url_low, 0, rule.end_anchor)
    if rule.anchor == "domain":
        return any(_walk(rule.pattern, url_low, p, rule.end_anchor)
                   for p in _domain_anchor_positions(url_low))
    first = rule.pattern[0] if rule.pattern else ""
    for p in range(len(url_low) + 1):
        if first not in ("", "*", "^") and (
                p == len(url_low) or url_low[p] != first):
            continue
        if _walk(rule.pattern, url_low, p, rule.end_anchor):
            return True
    return False


def _source_matches(source: str, entry: str) -> bool:
    return source == entry or source.endswith("." + entry)


def _applies(rule: NaiveRule, url_low: str, source_site: str | None,
             is_third: bool, rtype: str | None) -> bool:
    if rule.types is not None and (rtype or "other") not in rule.types:
        return False
    if rule.third_party is not None and is_third is not rule.third_party:
        return False
    if rule.include:
        if source_site is None or not any(
                _source_matches(source_site, e) for e in rule.include):
            return False
    if rule.exclude and source_site is not None:
        if any(_source_matches(source_site, e) for e in rule.exclude):
            return False
    return _pattern_matches(rule, url_low)


def evaluate(rules: list[NaiveRule], url: str, *, source_site: str | None = None,
             resource_type: str | None = None,
             is_third_party: bool | None = None, psl=None) -> dict:
    """Full outcome for one URL: same shape the production match() reports."""
    from urllib.parse import urlsplit

    url_low = url.lower()
    rtype = _TRACE_TYPE_MAP.get(resource_type, resource_type)
    if is_third_party is None:
        if source_site is None:
            is_third = False
        else:
            host = urlsplit(url).hostname
            is_third = sitemap.etld_plus_one(host, psl).name != source_site.lower()
    else:
        is_third = is_third_party
    source_low = source_site.lower() if source_site is not None else None

    winning = None
    for rule in rules:
        if not rule.exception and _applies(rule, url_low, source_low, is_third, rtype):
            winning = rule
            break
    if winning is None:
        return {"matched": False, "winning_rule": None,
                "exception_applied": False, "exception_rule": None}
    for rule in rules:
        if rule.exception and _applies(rule, url_low, source_low, is_third, rtype):
            return {"matched": False, "winning_rule": None,
                    "exception_applied": True, "exception_rule": rule.raw}
    return {"matched": True, "winning_rule": winning.raw,
            "exception_applied": False, "exception_rule": None}
