#!/usr/bin/env python3
"""Generate the bundled trace fixture corpora.

Builds every corpus under tests/fixtures/ from scratch: the uid funnel
corpus, the redirect-path corpus, the smuggling pair, the single-purpose
traces, the cli error corpora, plus the filter list, entity list, and uid
allow/deny pattern files. Before writing anything it re-derives the
hand-computed expectations the test suite freezes (funnel counts, path
shapes, smuggle findings) and aborts if the generated corpora drift.

Run from the repository root:

    python3 tools/make_fixtures.py
"""
from __future__ import annotations

import json
import sys
from collections import Counter
from pathlib import Path
from urllib.parse import quote, quote_plus

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from navaudit import redirects, smuggling, uid  # noqa: E402
from navaudit.trace import trace_from_dict, validate_corpus  # noqa: E402

FIX = ROOT / "tests" / "fixtures"

DAY = 86_400_000
BASE = 1_667_260_800_000  # 2022-11-01T00:00:00Z


# ---------------------------------------------------------------------------
# builders

class TraceBuilder:
    def __init__(self, engine_id: str, query: str, instance_id: str, base: int,
                 revisit_of: str | None = None):
        self.base = base
        self._ts = base
        self._seq = 0
        self.doc = {
            "schema_version": 1,
            "engine_id": engine_id,
            "query": query,
            "instance_id": instance_id,
            "capture_start": base,
            "capture_end": base,  # patched in finish()
            "revisit_of": revisit_of,
            "events": [],
            "checkpoints": [],
        }

    def _next(self) -> int:
        self._ts += 113
        return self._ts

    def nav(self, from_url: str, to_url: str, cause: str, frame: str = "main") -> None:
        self.doc["events"].append({
            "type": "navigation", "frame_id": frame, "from_url": from_url,
            "to_url": to_url, "cause": cause, "timestamp": self._next(),
        })

    def request(self, url: str, resource_type: str, *, frame: str = "main",
                initiator: str = "", headers: dict | None = None) -> str:
        self._seq += 1
        rid = f"rq{self._seq:02d}"
        self.doc["events"].append({
            "type": "request", "request_id": rid, "url": url, "method": "GET",
            "resource_type": resource_type, "frame_id": frame,
            "initiator_origin": initiator, "headers": headers or {},
            "timestamp": self._next(),
        })
        return rid

    def response(self, ref: str, status: int, headers: dict | None = None) -> None:
        self.doc["events"].append({
            "type": "response", "request_ref": ref, "status": status,
            "headers": headers or {}, "timestamp": self._next(),
        })

    def click(self, ads: list[dict], clicked: int = 0,
              descriptor: str = "div.ad-results a:nth-of-type(1)") -> None:
        self.doc["events"].append({
            "type": "ad_click", "ad_element_descriptor": descriptor,
            "declared_landing_domain": ads[clicked]["landing_domain"],
            "href_at_click": ads[clicked]["href"],
            "displayed_ads": ads, "timestamp": self._next(),
        })

    def checkpoint(self, phase: str, cookies: list | None = None,
                   local_storage: list | None = None) -> None:
        self.doc["checkpoints"].append({
            "phase": phase, "cookies": cookies or [],
            "local_storage": local_storage or [],
        })

    def finish(self) -> dict:
        self.doc["capture_end"] = self._ts + 10_000
        return self.doc


def ck(name: str, value: str, domain: str, fpo: str, expiry: int | None = None) -> dict:
    return {"name": name, "value": value, "domain": domain, "path": "/",
            "expiry": expiry, "first_party_origin": fpo}


def ls_(origin: str, key: str, value: str) -> dict:
    return {"origin": origin, "key": key, "value": value}


# ---------------------------------------------------------------------------
# uid funnel corpus: engine "bing", five instances, two revisits

QUERIES = {1: "running shoes", 2: "coffee maker", 3: "winter jacket",
           4: "garden chair", 5: "desk lamp"}

MUID = {1: "2f8e1a0b9c3d4e5f6a7b", 2: "3a9f2b1c0d4e5f6a7b8c",
        3: "4b0a3c2d1e5f6a7b8c9d", 4: "5c1b4d3e2f6a7b8c9d0e",
        5: "6d2c5e4f3a7b8c9d0e1f", 6: "7e3d6f5a4b8c9d0e1f2a"}

MSC = {1: "msc01e7d3a9f14b82c6d50e9a7b31f4",
       2: "msc02f8e4b0a25c93d7e61f0a8c42a5",
       3: "msc03a9f5c1b36d04e8f72a1b9d53b6",
       4: "msc04b0a6d2c47e15f9a83b2c0e64c7",
       5: "msc05c1b7e3d58f26a0b94c3d1f75d8",
       6: "msc06d2c8f4e69a37b1c05d4e2a86e9"}

# the verbatim GCLID-shaped anchor value that must survive the heuristics
GCLID_ANCHOR = "CAESbeD2ZWCwqFv3e-2k_"

SESS_DAY0 = {1: "1667260801", 3: "1667260803", 4: "1667260804", 5: "1667260805"}
SESS_DAY1_U01 = "1667347201"

BING_ORIGIN = "https://www.bing.example"


def _cid(i: int, side: str) -> str:
    return f"cd{i:02d}{side}9f3e1b2c4d5"


def uid_trace(i: int, *, revisit: bool = False) -> dict:
    inst = f"u{i:02d}"
    base = BASE + (i - 1) * 3_600_000 + (DAY if revisit else 0)
    t = TraceBuilder("bing", QUERIES[i], inst, base,
                     revisit_of=inst if revisit else None)
    results = f"{BING_ORIGIN}/search?q={quote_plus(QUERIES[i])}&pos={i}"
    t.nav("about:blank", results, "link_click")
    r1 = t.request(results, "document")
    t.response(r1, 200, {"content-type": "text/html"})
    r2 = t.request(f"{BING_ORIGIN}/assets/app.js", "script", initiator=BING_ORIGIN)
    t.response(r2, 200, {"content-type": "text/javascript"})

    dest = f"https://shop{i}.example/"
    dest_enc = quote(dest, safe="")
    ad_a = f"https://track.bing-r.example/click?cid={_cid(i, 'a')}&dest={dest_enc}"
    ad_b = f"https://track.bing-r.example/click?cid={_cid(i, 'b')}&dest={dest_enc}"
    ads = [{"href": ad_a, "landing_domain": f"shop{i}.example"},
           {"href": ad_b, "landing_domain": f"shop{i}.example"}]
    t.click(ads)

    # day-later pass of u01 deliberately lands without a click id
    if revisit and i == 1:
        landing = dest
    else:
        landing = f"{dest}?msclkid={MSC[i]}"
        if i == 3:
            landing += f"&gclid={GCLID_ANCHOR}"

    t.nav(results, ad_a, "link_click")
    r3 = t.request(ad_a, "document", initiator=BING_ORIGIN)
    t.response(r3, 302, {"location": landing})
    t.nav(ad_a, landing, "server_redirect")
    r4 = t.request(landing, "document")
    t.response(r4, 200, {"content-type": "text/html"})

    cookies = [ck("MUID", MUID[i], ".bing.example", BING_ORIGIN,
                  expiry=base // 1000 + 31_536_000)]
    sess = SESS_DAY1_U01 if (revisit and i == 1) else SESS_DAY0.get(i)
    if sess:
        cookies.append(ck("sessid", sess, ".bing.example", BING_ORIGIN))
    if i in (1, 2, 3):
        cookies.append(ck("region", "eu-west-fleet-one", ".bing.example", BING_ORIGIN))
    cookies.append(ck("v", "build-2024-rollout", ".bing.example", BING_ORIGIN))
    storage = []
    if i == 1:
        storage.append(ls_(BING_ORIGIN, "theme-pref", "dark.mode"))
    if i == 2:
        storage.append(ls_(BING_ORIGIN, "news_source", "www.shopnews.example"))
    if i == 4:
        storage.append(ls_(BING_ORIGIN, "build_fingerprint", "fp-9f8e7d6c5b4a"))
    if i == 5:
        storage.append(ls_(BING_ORIGIN, "ab_bucket", "exp-42-assignment-u5"))

    t.checkpoint("pre_query")
    t.checkpoint("results_page", cookies, storage)
    t.checkpoint("post_click", cookies, storage)
    t.checkpoint("destination_dwell_end", cookies, storage)
    return t.finish()


def uid_corpus() -> dict[str, dict]:
    docs = {}
    for i in range(1, 6):
        docs[f"u{i:02d}.trace.json"] = uid_trace(i)
    docs["u01r.trace.json"] = uid_trace(1, revisit=True)
    docs["u02r.trace.json"] = uid_trace(2, revisit=True)
    return docs


EXPECTED_UIDS = frozenset(
    [("MUID", MUID[i]) for i in range(1, 6)]
    + [("msclkid", MSC[i]) for i in range(1, 6)]
    + [("gclid", GCLID_ANCHOR),
       ("build_fingerprint", "fp-9f8e7d6c5b4a")]
)

EXPECTED_FUNNEL = (("extracted", 47), ("cross_instance", 45),
                   ("ad_url_variance", 35), ("session", 33),
                   ("heuristics", 13), ("manual", 12))


# ---------------------------------------------------------------------------
# redirect-path corpus: engine "pathlab", twelve hand-traced chains

ENGINE_URL = "https://engine.example/ads"
RD1 = "https://rd1.example/hop"
RD2 = "https://rd2.example/hop"
RD3 = "https://rd3.example/hop"
RD4 = "https://rd4.example/hop"


def _shop(i: int) -> str:
    return f"https://shop-r{i:02d}.example/land"


# steps: (url entered, navigation cause, status on the previous page's response)
CHAINS: dict[int, list[tuple[str, str, int | None]]] = {
    1: [(_shop(1), "link_click", None)],
    2: [(RD1, "link_click", None), (_shop(2), "server_redirect", 302)],
    3: [(RD1, "link_click", None), (RD2, "server_redirect", 302),
        (_shop(3), "server_redirect", 302)],
    4: [(RD1, "link_click", None), (RD2, "server_redirect", 302),
        (_shop(4), "script", None)],
    5: [("https://ads.engine.example/r05", "link_click", None),
        (_shop(5), "server_redirect", 302)],
    6: [(RD1, "link_click", None), (_shop(6), "server_redirect", 303)],
    7: [(RD1, "link_click", None), (_shop(7), "server_redirect", 307)],
    8: [(RD1, "link_click", None), (RD2, "server_redirect", 301),
        (_shop(8), "server_redirect", 308)],
    9: [(RD1, "link_click", None), (RD2, "server_redirect", 302),
        (RD3, "server_redirect", 302), (RD4, "server_redirect", 302),
        (_shop(9), "server_redirect", 302)],
    10: [(RD1, "link_click", None), (_shop(10), "script", None)],
    11: [("https://rd1.example/a", "link_click", None),
         ("https://rd1.example/b", "server_redirect", 302),
         (_shop(11), "server_redirect", 302)],
    12: [(_shop(12), "link_click", None),
         ("https://shop-r12.example/page2", "script", None)],
}

CHAIN_QUERIES = ["route alpha", "route bravo", "route charlie", "route delta",
                 "route echo", "route foxtrot", "route golf", "route hotel",
                 "route india", "route juliet", "route kilo", "route lima"]

# hand-traced: (site_sequence, intermediate count, server hops, client hops)
EXPECTED_CHAINS: dict[int, tuple[tuple[str, ...], int, int, int]] = {
    1: (("engine.example", "shop-r01.example"), 0, 0, 0),
    2: (("engine.example", "rd1.example", "shop-r02.example"), 1, 1, 0),
    3: (("engine.example", "rd1.example", "rd2.example", "shop-r03.example"), 2, 2, 0),
    4: (("engine.example", "rd1.example", "rd2.example", "shop-r04.example"), 2, 1, 1),
    5: (("engine.example", "shop-r05.example"), 0, 1, 0),
    6: (("engine.example", "rd1.example", "shop-r06.example"), 1, 1, 0),
    7: (("engine.example", "rd1.example", "shop-r07.example"), 1, 1, 0),
    8: (("engine.example", "rd1.example", "rd2.example", "shop-r08.example"), 2, 2, 0),
    9: (("engine.example", "rd1.example", "rd2.example", "rd3.example",
         "rd4.example", "shop-r09.example"), 4, 4, 0),
    10: (("engine.example", "rd1.example", "shop-r10.example"), 1, 0, 1),
    11: (("engine.example", "rd1.example", "shop-r11.example"), 1, 2, 0),
    12: (("engine.example", "shop-r12.example"), 0, 0, 1),
}

EXPECTED_HISTOGRAM = {0: 3, 1: 5, 2: 3, 4: 1}
EXPECTED_BOUNCE_RATE = 0.75


def chain_trace(idx: int) -> dict:
    steps = CHAINS[idx]
    base = BASE + 40_000_000 + (idx - 1) * 600_000
    t = TraceBuilder("pathlab", CHAIN_QUERIES[idx - 1], f"r{idx:02d}", base)
    t.nav("about:blank", ENGINE_URL, "link_click")
    r = t.request(ENGINE_URL, "document")
    t.response(r, 200, {"content-type": "text/html"})
    landing_domain = f"shop-r{idx:02d}.example"
    t.click([{"href": steps[0][0], "landing_domain": landing_domain}])

    prev = ENGINE_URL
    for k, (url, cause, _) in enumerate(steps):
        t.nav(prev, url, cause)
        rid = t.request(url, "document")
        upcoming = steps[k + 1] if k + 1 < len(steps) else None
        if upcoming is not None and upcoming[1] == "server_redirect":
            t.response(rid, upcoming[2], {"location": upcoming[0]})
        else:
            t.response(rid, 200, {"content-type": "text/html"})
        prev = url

    for phase in ("pre_query", "results_page", "post_click", "destination_dwell_end"):
        t.checkpoint(phase)
    return t.finish()


def redirect_corpus() -> dict[str, dict]:
    return {f"r{i:02d}.trace.json": chain_trace(i) for i in range(1, 13)}


# ---------------------------------------------------------------------------
# smuggling corpus: engine "startlab", one carrying chain + one clean chain

S01_MSCLKID = "MSCS01A9X8C7V6B5N4M3"
S01_GCLID = "GCLS01Z1X2C3V4B5N6M7"
S01_TKA_UID = "TKAUID01Q2W3E4R5T6Y7"
S01_GCL_AW = f"GCL.1667260900.{S01_GCLID}"


def smuggle_trace_s01() -> dict:
    t = TraceBuilder("startlab", "hello world", "s01", BASE + 50_000_000)
    results = "https://startlab.example/search?q=hello+world"
    t.nav("about:blank", results, "link_click")
    r1 = t.request(results, "document")
    t.response(r1, 200, {"content-type": "text/html"})

    dest_enc = quote("https://shop-s.example/", safe="")
    hop1 = f"https://track-a.example/jump?msclkid={S01_MSCLKID}&u={dest_enc}"
    hop2 = f"https://track-b.example/hop?msclkid={S01_MSCLKID}&u={dest_enc}&gclid={S01_GCLID}"
    hop3 = f"https://shop-s.example/?msclkid={S01_MSCLKID}&gclid={S01_GCLID}"
    t.click([{"href": hop1, "landing_domain": "shop-s.example"}])

    t.nav(results, hop1, "link_click")
    r2 = t.request(hop1, "document", initiator="https://startlab.example")
    t.response(r2, 302, {
        "location": hop2,
        "set-cookie": f"tka_uid={S01_TKA_UID}; Domain=.track-a.example; Path=/",
    })
    t.nav(hop1, hop2, "server_redirect")
    r3 = t.request(hop2, "document")
    t.response(r3, 302, {"location": hop3})
    t.nav(hop2, hop3, "server_redirect")
    r4 = t.request(hop3, "document")
    t.response(r4, 200, {"content-type": "text/html"})

    tka = ck("tka_uid", S01_TKA_UID, ".track-a.example", "https://track-a.example")
    dwell = [
        tka,
        ck("msclk_echo", S01_MSCLKID, ".shop-s.example", "https://shop-s.example"),
        ck("_gcl_aw", S01_GCL_AW, ".shop-s.example", "https://shop-s.example"),
        ck("consent", "ok", ".shop-s.example", "https://shop-s.example"),
    ]
    t.checkpoint("pre_query")
    t.checkpoint("results_page")
    t.checkpoint("post_click", [tka])
    t.checkpoint("destination_dwell_end", dwell)
    return t.finish()


def smuggle_trace_s02() -> dict:
    t = TraceBuilder("startlab", "dark mode", "s02", BASE + 50_600_000)
    results = "https://startlab.example/search?q=dark+mode"
    t.nav("about:blank", results, "link_click")
    r1 = t.request(results, "document")
    t.response(r1, 200, {"content-type": "text/html"})

    hop1 = f"https://track-a.example/go?u={quote('https://shop-c.example/', safe='')}"
    hop2 = "https://shop-c.example/"
    t.click([{"href": hop1, "landing_domain": "shop-c.example"}])
    t.nav(results, hop1, "link_click")
    r2 = t.request(hop1, "document", initiator="https://startlab.example")
    t.response(r2, 302, {"location": hop2})
    t.nav(hop1, hop2, "server_redirect")
    r3 = t.request(hop2, "document")
    t.response(r3, 200, {"content-type": "text/html"})

    t.checkpoint("pre_query")
    t.checkpoint("results_page")
    t.checkpoint("post_click")
    t.checkpoint("destination_dwell_end",
                 [ck("consent", "ok", ".shop-c.example", "https://shop-c.example")])
    return t.finish()


def smuggle_corpus() -> dict[str, dict]:
    return {"s01.trace.json": smuggle_trace_s01(),
            "s02.trace.json": smuggle_trace_s02()}


# ---------------------------------------------------------------------------
# single-purpose traces

def simple_trace() -> dict:
    """Fourteen-event reference trace used by the schema documentation."""
    t = TraceBuilder("bing", "laptop stand", "u06", BASE + 60_000_000)
    results = f"{BING_ORIGIN}/search?q=laptop+stand&pos=9"
    dest = "https://shop6.example/"
    click_url = f"https://track.bing-r.example/click?dest={quote(dest, safe='')}"
    landing = f"{dest}?msclkid={MSC[6]}"

    t.nav("about:blank", results, "link_click")                      # 1
    r1 = t.request(results, "document")                              # 2
    t.response(r1, 200, {"content-type": "text/html"})               # 3
    r2 = t.request(f"{BING_ORIGIN}/assets/app.js", "script",
                   initiator=BING_ORIGIN)                            # 4
    t.response(r2, 200, {"content-type": "text/javascript"})         # 5
    t.click([{"href": click_url, "landing_domain": "shop6.example"}])  # 6
    r3 = t.request(f"{BING_ORIGIN}/ping?pos=9", "xhr",
                   initiator=BING_ORIGIN)                            # 7
    t.response(r3, 204)                                              # 8
    t.nav(results, click_url, "link_click")                          # 9
    r4 = t.request(click_url, "document", initiator=BING_ORIGIN)     # 10
    t.response(r4, 302, {"location": landing})                       # 11
    t.nav(click_url, landing, "server_redirect")                     # 12
    r5 = t.request(landing, "document")                              # 13
    t.response(r5, 200, {"content-type": "text/html"})               # 14

    muid = [ck("MUID", MUID[6], ".bing.example", BING_ORIGIN,
               expiry=t.base // 1000 + 31_536_000)]
    t.checkpoint("pre_query")
    t.checkpoint("results_page", muid)
    t.checkpoint("post_click", muid)
    t.checkpoint("destination_dwell_end", muid)
    return t.finish()


HEAVY_DEST = "https://shop-heavy.example"

# (url, resource_type, frame) planted on the destination page; every one of
# these must match the fixture filter list
HEAVY_TRACKERS = [
    ("https://trackpix.example/p.gif", "image", "main"),
    ("https://cdn.metric-hub.example/lib/analytics.js", "script", "main"),
    ("https://doubleclick.example/ad.png", "image", "main"),
    ("https://googleadservices.example/conv.js", "script", "main"),
    ("https://beacon-api.example/collect", "xhr", "main"),
    ("https://pixel-farm.example/pixel123.gif", "image", "main"),
    ("https://stats-relay.example/sync", "xhr", "main"),
    ("https://adgrid.example/frame", "document", "f1"),
    ("https://cdn.example/clickecho/tag.js", "script", "main"),
]


def heavy_trace() -> dict:
    t = TraceBuilder("adheavy", "quiet evening offers", "h01", BASE + 61_000_000)
    results = "https://adheavy.example/offers"
    land = f"{HEAVY_DEST}/land"

    t.nav("about:blank", results, "link_click")
    r1 = t.request(results, "document")
    t.response(r1, 200, {"content-type": "text/html"})
    # a tracker fires on the results page too; it must stay out of the
    # destination-scoped statistics
    rp = t.request("https://trackpix.example/pre.gif", "image",
                   initiator="https://adheavy.example")
    t.response(rp, 200)

    t.click([{"href": land, "landing_domain": "shop-heavy.example"}])
    t.nav(results, land, "link_click")
    rd = t.request(land, "document")
    t.response(rd, 200, {"content-type": "text/html"})

    for url, rtype, frame in HEAVY_TRACKERS:
        rid = t.request(url, rtype, frame=frame, initiator=HEAVY_DEST)
        t.response(rid, 200)
    # blocked-then-excepted and plain first-party requests, for contrast
    rv = t.request("https://allowed.metric-hub.example/safe.js", "script",
                   initiator=HEAVY_DEST)
    t.response(rv, 200)
    rf = t.request(f"{HEAVY_DEST}/app.js", "script", initiator=HEAVY_DEST)
    t.response(rf, 200)

    for phase in ("pre_query", "results_page", "post_click", "destination_dwell_end"):
        t.checkpoint(phase)
    return t.finish()


def singles() -> dict[str, dict]:
    return {"bing_simple.trace.json": simple_trace(),
            "destination_heavy.trace.json": heavy_trace()}


# ---------------------------------------------------------------------------
# cli error corpora

def mini_trace(engine: str, inst: str, query: str, base: int) -> dict:
    t = TraceBuilder(engine, query, inst, base)
    results = f"https://{engine}.example/ads"
    dest = f"https://dest-{inst}.example/"
    t.nav("about:blank", results, "link_click")
    r1 = t.request(results, "document")
    t.response(r1, 200)
    t.click([{"href": dest, "landing_domain": f"dest-{inst}.example"}])
    t.nav(results, dest, "link_click")
    r2 = t.request(dest, "document")
    t.response(r2, 200)
    for phase in ("pre_query", "results_page", "post_click", "destination_dwell_end"):
        t.checkpoint(phase)
    return t.finish()


def corrupt_corpus() -> dict[str, object]:
    """8 valid + 2 schema-invalid files; analyze skips 2, exits 0."""
    docs: dict[str, object] = {}
    for i in range(1, 9):
        docs[f"c{i:02d}.trace.json"] = mini_trace(
            "fleet", f"c{i:02d}", f"fleet {i}", BASE + 70_000_000 + i * 100_000)
    missing = mini_trace("fleet", "c09", "fleet 9", BASE + 71_000_000)
    del missing["events"]
    docs["c09.trace.json"] = missing
    extra = mini_trace("fleet", "c10", "fleet 10", BASE + 71_100_000)
    extra["surprise"] = 1
    docs["c10.trace.json"] = extra
    return docs


def hardfail_corpus() -> dict[str, object]:
    """4 valid files + 1 that is not JSON at all; 20% > 10%, analyze exits 2."""
    docs: dict[str, object] = {}
    for i in range(1, 5):
        docs[f"h{i:02d}.trace.json"] = mini_trace(
            "fleet", f"h{i:02d}", f"fleet hard {i}", BASE + 72_000_000 + i * 100_000)
    docs["h05.trace.json"] = "{this file is deliberately not JSON\n"
    return docs


# ---------------------------------------------------------------------------
# filter list / entity list / uid pattern files

FILTER_RULES = """\
! fixture filter set for the planted destination trackers
||trackpix.example^
||metric-hub.example^$script
||doubleclick.example^$third-party
||googleadservices.example^
||beacon-api.example^$xhr
/pixel[0-9]{3}/
||stats-relay.example^$domain=shop-heavy.example
||adgrid.example^$subdocument
clickecho
@@||metric-hub.example/safe.js
! cosmetic rules are out of scope and must be skipped, not rejected
##.ad-banner
"""

ENTITIES = {
    "entities": {
        "Google": {"properties": ["doubleclick.example", "googleadservices.example"]},
        "Microsoft": {"properties": ["bing.example", "bing-r.example"]},
        "MetricWorks": {"properties": ["metric-hub.example", "beacon-api.example"]},
        "RedirectCo": {"properties": ["rd1.example", "rd2.example"]},
    }
}

UID_DENY = """\
# experiment bucket assignment: stable per install but set by the site's
# A/B framework, not an identifier handed to the ad chain
name=ab_bucket
"""

UID_ALLOW = """\
# rescue session cookies from the programmatic heuristics (used by tests)
name=sessid
"""


# ---------------------------------------------------------------------------
# verification against the hand-computed expectations

def _traces(docs: dict[str, dict]) -> list:
    return [trace_from_dict(doc, source_path=name)
            for name, doc in sorted(docs.items())]


def verify_uid(docs: dict[str, dict]) -> None:
    corpus = _traces(docs)
    validate_corpus(corpus)
    cfg = uid.UidConfig(manual_deny=(("name", "ab_bucket"),))
    rep = uid.classify_uids(corpus, cfg)
    assert rep.funnel == EXPECTED_FUNNEL, rep.funnel
    assert rep.uid_pairs == EXPECTED_UIDS, sorted(rep.uid_pairs ^ EXPECTED_UIDS)
    anchor = uid.heuristic_filter(GCLID_ANCHOR, cfg.resolved(corpus))
    assert anchor.kept, anchor

    # reid ground truth: one stable identifier, one rotating session value
    by_name = {t.source_path: t for t in corpus}
    findings = smuggling.detect_first_party_reid(
        by_name["u01.trace.json"], by_name["u01r.trace.json"],
        rep.uid_pairs, "bing.example")
    assert len(findings) == 1 and findings[0].stable, findings
    assert findings[0].name == "MUID", findings


def verify_redirects(docs: dict[str, dict]) -> None:
    corpus = _traces(docs)
    validate_corpus(corpus)
    histogram: Counter = Counter()
    bounced = 0
    for t in corpus:
        idx = int(t.instance_id[1:])
        path = redirects.build_navigation_path(t)
        seq, inter, servers, clients = EXPECTED_CHAINS[idx]
        assert path.site_sequence == seq, (idx, path.site_sequence)
        assert len(path.intermediate_sites) == inter, (idx, path.intermediate_sites)
        n_serv = sum(1 for h in path.hops if h.cause == "server_redirect")
        n_cli = sum(1 for h in path.hops if h.cause == "client_redirect")
        assert (n_serv, n_cli) == (servers, clients), (idx, n_serv, n_cli)
        histogram[inter] += 1
        bounced += 1 if redirects.detect_bounce_tracking(path) else 0
    assert dict(histogram) == EXPECTED_HISTOGRAM, histogram
    assert bounced / len(corpus) == EXPECTED_BOUNCE_RATE, bounced


def verify_smuggle(docs: dict[str, dict]) -> None:
    corpus = _traces(docs)
    validate_corpus(corpus)
    by_name = {t.source_path: t for t in corpus}
    s01 = by_name["s01.trace.json"]
    path = redirects.build_navigation_path(s01)
    planted = frozenset({("msclkid", S01_MSCLKID), ("gclid", S01_GCLID)})
    findings = smuggling.detect_uid_smuggling(path, planted)
    got = {(f.name, f.first_seen_hop, f.delivered_to_destination, f.known_click_id)
           for f in findings if f.name != "u"}
    assert got == {("msclkid", "track-a.example", True, "MSCLKID"),
                   ("gclid", "track-b.example", True, "GCLID")}, got

    persisted = smuggling.detect_persistence(s01, path, findings)
    shaped = {(p.param_name, p.storage_key, p.match_kind) for p in persisted}
    assert shaped == {("msclkid", "msclk_echo", "exact"),
                      ("gclid", "_gcl_aw", "substring")}, shaped
    exact_only = smuggling.detect_persistence(s01, path, findings, substring=False)
    assert {(p.param_name, p.match_kind) for p in exact_only} == \
        {("msclkid", "exact")}, exact_only

    redirs = smuggling.redirectors_with_uid_cookies(s01, path)
    assert redirs == frozenset({"track-a.example"}), redirs

    s02 = by_name["s02.trace.json"]
    path2 = redirects.build_navigation_path(s02)
    assert smuggling.detect_uid_smuggling(path2, frozenset()) == ()
    assert smuggling.detect_persistence(s02, path2, ()) == ()
    assert smuggling.redirectors_with_uid_cookies(s02, path2) == frozenset()


def verify_singles(docs: dict[str, dict]) -> None:
    simple = trace_from_dict(docs["bing_simple.trace.json"], "bing_simple.trace.json")
    assert len(simple.events) == 14, len(simple.events)
    heavy = trace_from_dict(docs["destination_heavy.trace.json"],
                            "destination_heavy.trace.json")
    from navaudit import filterlist
    rs = filterlist.parse_rules(FILTER_RULES, "test_rules.txt")
    hits = filterlist.classify_trace_trackers(heavy, rs)
    assert len(hits) == 10, [h.url for h in hits]
    path = redirects.build_navigation_path(heavy)
    arrival = redirects.arrival_timestamp(heavy, path)
    dest_hits = [h for h in hits if h.timestamp >= arrival]
    assert len(dest_hits) == 9, [h.url for h in dest_hits]
    assert {h.tracker_site for h in dest_hits} == {
        "trackpix.example", "metric-hub.example", "doubleclick.example",
        "googleadservices.example", "beacon-api.example", "pixel-farm.example",
        "stats-relay.example", "adgrid.example", "cdn.example"}, dest_hits


# ---------------------------------------------------------------------------
# writing

def _write_json(path: Path, doc: object) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")


def write_all() -> None:
    corpora = {
        "uid": uid_corpus(),
        "redirects": redirect_corpus(),
        "smuggle": smuggle_corpus(),
        "singles": singles(),
    }
    verify_uid(corpora["uid"])
    verify_redirects(corpora["redirects"])
    verify_smuggle(corpora["smuggle"])
    verify_singles(corpora["singles"])

    for sub, docs in corpora.items():
        target = FIX / "traces" / sub
        target.mkdir(parents=True, exist_ok=True)
        for name, doc in docs.items():
            _write_json(target / name, doc)

    for sub, docs in (("corrupt", corrupt_corpus()), ("hardfail", hardfail_corpus())):
        target = FIX / "traces" / sub
        target.mkdir(parents=True, exist_ok=True)
        for name, doc in docs.items():
            if isinstance(doc, str):
                (target / name).write_text(doc, "utf-8")
            else:
                _write_json(target / name, doc)

    (FIX / "filters").mkdir(parents=True, exist_ok=True)
    (FIX / "filters" / "test_rules.txt").write_text(FILTER_RULES, "utf-8")
    (FIX / "entities").mkdir(parents=True, exist_ok=True)
    _write_json(FIX / "entities" / "entities.json", ENTITIES)
    (FIX / "uid").mkdir(parents=True, exist_ok=True)
    (FIX / "uid" / "deny.txt").write_text(UID_DENY, "utf-8")
    (FIX / "uid" / "allow.txt").write_text(UID_ALLOW, "utf-8")

    # the full mixed corpus must still load and cross-validate
    all_docs: dict[str, dict] = {}
    for docs in corpora.values():
        all_docs.update(docs)
    validate_corpus(_traces(all_docs))

    total = sum(len(d) for d in corpora.values()) + 15
    print(f"wrote {total} fixture files under {FIX}")


if __name__ == "__main__":
    write_all()
