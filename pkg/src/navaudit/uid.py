"""Token extraction and user-identifier classification.

Tokens are (name, value) observations drawn from request query parameters,
displayed-ad URLs, cookies and localStorage. A funnel of filters then
discards everything that cannot be a user identifier:

  (i)   values repeated across fresh browser instances,
  (ii)  values that differ between the ads of one results page,
  (iii) values that changed between a visit and its day-later revisit,
  (iv)  programmatic heuristics: timestamps, URLs, dictionary words,
        and values of seven characters or less,

followed by manual allow/deny pattern lists. Whatever survives is the uid
set. Every stage is a pure function of (table, config) and only ever
removes tokens, so funnel counts decrease monotonically.
"""
from __future__ import annotations

import fnmatch
import gzip
import re
import warnings as _warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from urllib.parse import parse_qsl, unquote, urlsplit

from . import sitemap
from .trace import AdClickEvent, RequestEvent, Trace

__all__ = [
    "REASONS",
    "FUNNEL_STAGES",
    "SingleInstanceCorpus",
    "NoRevisitData",
    "Token",
    "TokenVerdict",
    "UidConfig",
    "TokenTable",
    "UidReport",
    "bundled_wordlist",
    "load_manual_patterns",
    "extract_tokens",
    "filter_cross_instance",
    "filter_ad_url_variance",
    "filter_session",
    "heuristic_filter",
    "apply_heuristics",
    "apply_manual",
    "classify_uids",
]

REASONS = ("cross_instance_constant", "ad_url_variant", "session_changed",
           "timestamp", "url_like", "english_words", "too_short", "manual_deny")

FUNNEL_STAGES = ("extracted", "cross_instance", "ad_url_variance",
                 "session", "heuristics", "manual")


class SingleInstanceCorpus(UserWarning):
    """Cross-instance filter skipped: fewer than two browser instances."""


class NoRevisitData(UserWarning):
    """Session filter skipped: corpus has no revisit pairs."""


@dataclass(frozen=True, order=True)
class Token:
    name: str
    value: str
    source_kind: str            # query_param | cookie | local_storage
    site: str                   # registrable domain where observed
    instance_id: str            # browser instance (revisits collapse onto it)
    phase: str
    ad_index: int | None = None  # which displayed ad's URL it came from
    page_key: str = ""          # one results page = one trace
    from_revisit: bool = False

    @property
    def pair(self) -> tuple[str, str]:
        return (self.name, self.value)


@dataclass(frozen=True)
class TokenVerdict:
    name: str
    value: str
    verdict: str                # "uid" | "discarded"
    reason: str | None = None
    stage: str | None = None
    flags: tuple[str, ...] = ()

    @property
    def kept(self) -> bool:
        return self.verdict == "uid"


@dataclass(frozen=True)
class UidConfig:
    timestamp_window: tuple[int, int] | None = None  # epoch seconds
    min_length: int = 8
    wordlist: frozenset[str] | None = None           # None: bundled list
    cross_instance_min_share: int = 2
    manual_allow: tuple[tuple[str, str], ...] = ()
    manual_deny: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.min_length < 1:
            raise ValueError("min_length must be >= 1")
        if self.timestamp_window is not None:
            t_min, t_max = self.timestamp_window
            if t_min >= t_max:
                raise ValueError("timestamp_window must satisfy t_min < t_max")
        if self.cross_instance_min_share < 2:
            raise ValueError("cross_instance_min_share must be >= 2")

    def resolved(self, corpus: list[Trace]) -> "UidConfig":
        """Fill derived defaults: timestamp window from the corpus capture
        span (start - 180 days, end + 1 day), bundled wordlist."""
        cfg = self
        if cfg.timestamp_window is None and corpus:
            start = min(t.capture_start for t in corpus) // 1000
            end = max(t.capture_end for t in corpus) // 1000
            cfg = replace(cfg, timestamp_window=(start - 180 * 86400, end + 86400))
        if cfg.wordlist is None:
            cfg = replace(cfg, wordlist=bundled_wordlist())
        return cfg


def bundled_wordlist() -> frozenset[str]:
    global _WORDS
    if _WORDS is None:
        raw = (resources.files("navaudit.data") / "english_words.txt.gz").read_bytes()
        _WORDS = frozenset(gzip.decompress(raw).decode("utf-8").split())
    return _WORDS


_WORDS: frozenset[str] | None = None


def load_manual_patterns(path: str | Path) -> tuple[tuple[str, str], ...]:
    """Read an allow/deny pattern file.

    One pattern per line: ``name=<exact name>``, ``value=<exact value>``, or
    ``name~<glob>``; ``#`` starts a comment.
    """
    patterns: list[tuple[str, str]] = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("name~"):
            patterns.append(("name_glob", line[len("name~"):]))
        elif line.startswith("name="):
            patterns.append(("name", line[len("name="):]))
        elif line.startswith("value="):
            patterns.append(("value", line[len("value="):]))
        else:
            raise ValueError(f"{path}:{lineno}: unrecognized pattern {line!r}")
    return tuple(patterns)


def _pattern_matches(patterns, name: str, value: str) -> bool:
    for kind, text in patterns:
        if kind == "name" and name == text:
            return True
        if kind == "value" and value == text:
            return True
        if kind == "name_glob" and fnmatch.fnmatchcase(name.lower(), text.lower()):
            return True
    return False


@dataclass(frozen=True)
class TokenTable:
    tokens: tuple[Token, ...]
    verdicts: dict[tuple[str, str], TokenVerdict] = field(default_factory=dict)
    flags: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def pairs(self) -> list[tuple[str, str]]:
        return sorted({t.pair for t in self.tokens})

    def alive_pairs(self) -> list[tuple[str, str]]:
        return [p for p in self.pairs() if p not in self.verdicts]

    def distinct_token_count(self) -> int:
        return len({t.pair for t in self.tokens})

    def _with(self, verdicts=None, flags=None, warning: str | None = None) -> "TokenTable":
        return TokenTable(
            tokens=self.tokens,
            verdicts=verdicts if verdicts is not None else self.verdicts,
            flags=flags if flags is not None else self.flags,
            warnings=self.warnings + ((warning,) if warning else ()),
        )


# ---------------------------------------------------------------------------
# extraction

def _site_name(host: str | None, psl) -> str | None:
    if not host:
        return None
    try:
        return sitemap.etld_plus_one(host, psl).name
    except sitemap.EmptyHost:
        return None


def _url_params(url: str) -> list[tuple[str, str]]:
    return [(n, v) for n, v in parse_qsl(urlsplit(url).query, keep_blank_values=False)
            if n and v]


def extract_tokens(corpus: list[Trace], psl=None) -> TokenTable:
    """Pull every candidate token out of a corpus.

    Query parameters come from every request URL and every displayed-ad
    href; storage tokens from the snapshot cookies and localStorage.
    Navigation URLs are skipped since their document requests already
    appear as request events.
    """
    seen: set[Token] = set()
    for t in corpus:
        instance = t.browser_instance
        page_key = f"{t.instance_id}|{'r' if t.is_revisit else 'o'}"
        click_ts = None
        for ev in t.events:
            if isinstance(ev, AdClickEvent):
                click_ts = ev.timestamp
                break

        for ev in t.events:
            if isinstance(ev, RequestEvent):
                site = _site_name(urlsplit(ev.url).hostname, psl)
                if site is None:
                    continue
                phase = "results_page" if click_ts is None or ev.timestamp <= click_ts \
                    else "post_click"
                for name, value in _url_params(ev.url):
                    seen.add(Token(name=name, value=value, source_kind="query_param",
                                   site=site, instance_id=instance, phase=phase,
                                   page_key=page_key, from_revisit=t.is_revisit))
            elif isinstance(ev, AdClickEvent):
                for idx, ad in enumerate(ev.displayed_ads):
                    site = _site_name(urlsplit(ad.href).hostname, psl)
                    if site is None:
                        continue
                    for name, value in _url_params(ad.href):
                        seen.add(Token(name=name, value=value, source_kind="query_param",
                                       site=site, instance_id=instance,
                                       phase="results_page", ad_index=idx,
                                       page_key=page_key, from_revisit=t.is_revisit))

        for snap in t.checkpoints:
            for cookie in snap.cookies:
                if not cookie.name or not cookie.value:
                    continue
                site = _site_name(cookie.domain.lstrip("."), psl)
                if site is None:
                    continue
                seen.add(Token(name=cookie.name, value=cookie.value,
                               source_kind="cookie", site=site, instance_id=instance,
                               phase=snap.phase, page_key=page_key,
                               from_revisit=t.is_revisit))
            for entry in snap.local_storage:
                if not entry.key or not entry.value:
                    continue
                site = _site_name(urlsplit(entry.origin).hostname or entry.origin, psl)
                if site is None:
                    continue
                seen.add(Token(name=entry.key, value=entry.value,
                               source_kind="local_storage", site=site,
                               instance_id=instance, phase=snap.phase,
                               page_key=page_key, from_revisit=t.is_revisit))
    return TokenTable(tokens=tuple(sorted(seen, key=_token_sort_key)))


def _token_sort_key(t: Token):
    return (t.name, t.value, t.source_kind, t.site, t.instance_id,
            t.page_key, t.phase, -1 if t.ad_index is None else t.ad_index)


# ---------------------------------------------------------------------------
# funnel stages

def filter_cross_instance(tt: TokenTable, cfg: UidConfig) -> TokenTable:
    """Discard pairs seen in >= cross_instance_min_share browser instances."""
    instances = {t.instance_id for t in tt.tokens}
    if len(instances) < 2:
        msg = "SingleInstanceCorpus: fewer than two browser instances, filter skipped"
        _warnings.warn(SingleInstanceCorpus(msg))
        return tt._with(warning=msg)
    pair_instances: dict[tuple[str, str], set[str]] = {}
    for t in tt.tokens:
        pair_instances.setdefault(t.pair, set()).add(t.instance_id)
    verdicts = dict(tt.verdicts)
    for pair in tt.alive_pairs():
        if len(pair_instances[pair]) >= cfg.cross_instance_min_share:
            verdicts[pair] = TokenVerdict(pair[0], pair[1], "discarded",
                                          reason="cross_instance_constant",
                                          stage="cross_instance")
    return tt._with(verdicts=verdicts)


def filter_ad_url_variance(tt: TokenTable) -> TokenTable:
    """Discard parameter names whose values differ across one page's ads."""
    by_page_name: dict[tuple[str, str], dict[int, set[str]]] = {}
    for t in tt.tokens:
        if t.ad_index is None:
            continue
        by_ad = by_page_name.setdefault((t.page_key, t.name), {})
        by_ad.setdefault(t.ad_index, set()).add(t.value)
    verdicts = dict(tt.verdicts)
    for (page, name), by_ad in by_page_name.items():
        if len(by_ad) < 2:
            continue  # single-ad page: vacuously passes
        value_sets = list(by_ad.values())
        if all(vs == value_sets[0] for vs in value_sets[1:]):
            continue
        for values in value_sets:
            for value in values:
                pair = (name, value)
                if pair not in verdicts:
                    verdicts[pair] = TokenVerdict(name, value, "discarded",
                                                  reason="ad_url_variant",
                                                  stage="ad_url_variance")
    return tt._with(verdicts=verdicts)


def filter_session(tt: TokenTable, corpus: list[Trace]) -> TokenTable:
    """Compare each instance's original against its day-later revisit.

    A name present on both days keeps values that repeated and discards
    values that appeared on only one day. Names seen on a single day are
    retained but flagged ``unverified_persistence``.
    """
    revisited = {t.browser_instance for t in corpus if t.is_revisit}
    if not revisited:
        msg = "NoRevisitData: corpus has no revisit pairs, filter skipped"
        _warnings.warn(NoRevisitData(msg))
        return tt._with(warning=msg)

    day0: dict[tuple[str, str], set[str]] = {}
    day1: dict[tuple[str, str], set[str]] = {}
    for t in tt.tokens:
        if t.instance_id not in revisited:
            continue
        bucket = day1 if t.from_revisit else day0
        bucket.setdefault((t.instance_id, t.name), set()).add(t.value)

    verdicts = dict(tt.verdicts)
    flags = dict(tt.flags)

    def flag(pair, label):
        if label not in flags.get(pair, ()):
            flags[pair] = flags.get(pair, ()) + (label,)

    for key in set(day0) | set(day1):
        before, after = day0.get(key, set()), day1.get(key, set())
        name = key[1]
        if before and after:
            for value in before ^ after:
                pair = (name, value)
                if pair not in verdicts:
                    verdicts[pair] = TokenVerdict(name, value, "discarded",
                                                  reason="session_changed",
                                                  stage="session")
        else:
            for value in before | after:
                pair = (name, value)
                if pair not in verdicts:
                    flag(pair, "unverified_persistence")
    return tt._with(verdicts=verdicts, flags=flags)


# ---------------------------------------------------------------------------
# heuristics

_TS_DIGITS = re.compile(r"^[0-9]+$")
_WORD_SPLIT = re.compile(r"[-_ .+]+")


def _heuristic_reason(value: str, cfg: UidConfig) -> str | None:
    if _TS_DIGITS.match(value) and cfg.timestamp_window is not None:
        number = int(value)
        t_min, t_max = cfg.timestamp_window
        if t_min <= number <= t_max or t_min * 1000 <= number <= t_max * 1000:
            return "timestamp"
    decoded = unquote(value)
    parts = urlsplit(decoded)
    if (parts.scheme and parts.netloc) or decoded.lower().startswith("www."):
        return "url_like"
    words = cfg.wordlist or frozenset()
    pieces = [p for p in _WORD_SPLIT.split(value.lower()) if p]
    if pieces and all(p in words for p in pieces):
        return "english_words"
    if len(value) <= cfg.min_length - 1:
        return "too_short"
    return None


def heuristic_filter(tok: Token | str, cfg: UidConfig) -> TokenVerdict:
    """Apply the programmatic heuristics to one token (or bare value).

    Checks run in fixed order: timestamp, url_like, english_words,
    too_short; the first hit wins. Survivors come back with verdict "uid".
    """
    name, value = (tok.name, tok.value) if isinstance(tok, Token) else ("", tok)
    reason = _heuristic_reason(value, cfg)
    if reason is None:
        return TokenVerdict(name, value, "uid", stage="heuristics")
    return TokenVerdict(name, value, "discarded", reason=reason, stage="heuristics")


def apply_heuristics(tt: TokenTable, cfg: UidConfig) -> TokenTable:
    """Funnel stage (iv). Manual allow patterns exempt a pair from the
    heuristics; the exemption is recorded as a ``manual_allow`` flag."""
    verdicts = dict(tt.verdicts)
    flags = dict(tt.flags)
    for name, value in tt.alive_pairs():
        if _pattern_matches(cfg.manual_allow, name, value):
            flags[(name, value)] = flags.get((name, value), ()) + ("manual_allow",)
            continue
        reason = _heuristic_reason(value, cfg)
        if reason is not None:
            verdicts[(name, value)] = TokenVerdict(name, value, "discarded",
                                                   reason=reason, stage="heuristics")
    return tt._with(verdicts=verdicts, flags=flags)


def apply_manual(tt: TokenTable, cfg: UidConfig) -> TokenTable:
    """Final stage: deny patterns drop survivors unconditionally."""
    verdicts = dict(tt.verdicts)
    for name, value in tt.alive_pairs():
        if _pattern_matches(cfg.manual_deny, name, value):
            verdicts[(name, value)] = TokenVerdict(name, value, "discarded",
                                                   reason="manual_deny", stage="manual")
    return tt._with(verdicts=verdicts)


# ---------------------------------------------------------------------------
# the full funnel

@dataclass(frozen=True)
class UidReport:
    uid_pairs: frozenset[tuple[str, str]]
    verdicts: dict[tuple[str, str], TokenVerdict]
    funnel: tuple[tuple[str, int], ...]
    warnings: tuple[str, ...]
    tokens: tuple[Token, ...]

    def to_dict(self) -> dict:
        by_pair: dict[tuple[str, str], list[Token]] = {}
        for t in self.tokens:
            by_pair.setdefault(t.pair, []).append(t)
        uids = []
        for name, value in sorted(self.uid_pairs):
            toks = by_pair.get((name, value), [])
            uids.append({
                "name": name,
                "value": value,
                "source_kinds": sorted({t.source_kind for t in toks}),
                "sites": sorted({t.site for t in toks}),
                "instances": len({t.instance_id for t in toks}),
                "phases": sorted({t.phase for t in toks}),
                "flags": list(self.verdicts[(name, value)].flags),
            })
        return {
            "funnel": [{"stage": s, "alive": n} for s, n in self.funnel],
            "uids": uids,
            "verdicts": [
                {"name": v.name, "value": v.value, "verdict": v.verdict,
                 "reason": v.reason, "stage": v.stage, "flags": list(v.flags)}
                for _, v in sorted(self.verdicts.items())
            ],
            "warnings": list(self.warnings),
        }


def classify_uids(corpus: list[Trace], cfg: UidConfig | None = None,
                  psl=None) -> UidReport:
    """Run the full funnel over a corpus and return uid set + verdicts.

    Funnel counts are distinct (name, value) pairs still alive after each
    stage, starting with the extraction count.
    """
    cfg = (cfg or UidConfig()).resolved(corpus)
    tt = extract_tokens(corpus, psl)
    funnel = [("extracted", tt.distinct_token_count())]

    tt = filter_cross_instance(tt, cfg)
    funnel.append(("cross_instance", len(tt.alive_pairs())))
    tt = filter_ad_url_variance(tt)
    funnel.append(("ad_url_variance", len(tt.alive_pairs())))
    tt = filter_session(tt, corpus)
    funnel.append(("session", len(tt.alive_pairs())))
    tt = apply_heuristics(tt, cfg)
    funnel.append(("heuristics", len(tt.alive_pairs())))
    tt = apply_manual(tt, cfg)
    funnel.append(("manual", len(tt.alive_pairs())))

    verdicts = dict(tt.verdicts)
    for name, value in tt.alive_pairs():
        verdicts[(name, value)] = TokenVerdict(name, value, "uid", stage="manual",
                                               flags=tt.flags.get((name, value), ()))
    # discarded pairs keep any flags they accumulated before being dropped
    for pair, verdict in list(verdicts.items()):
        extra = tt.flags.get(pair, ())
        if extra and verdict.flags != extra and verdict.verdict == "discarded":
            verdicts[pair] = replace(verdict, flags=extra)

    return UidReport(
        uid_pairs=frozenset(p for p, v in verdicts.items() if v.kept),
        verdicts=verdicts,
        funnel=tuple(funnel),
        warnings=tt.warnings,
        tokens=tt.tokens,
    )
