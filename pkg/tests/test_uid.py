"""Identifier funnel: extraction, filter stages, heuristics, full runs."""
from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from navaudit.uid import (
    FUNNEL_STAGES, NoRevisitData, SingleInstanceCorpus, Token, UidConfig,
    TokenTable, apply_heuristics, apply_manual, classify_uids, extract_tokens,
    filter_ad_url_variance, filter_cross_instance, filter_session,
    heuristic_filter, load_manual_patterns,
)

from conftest import ALLOW_FILE, DENY_FILE

# frozen before the corpus was generated: five browser instances, two of
# them revisited a day later, every discard reason exercised at least once
EXPECTED_FUNNEL = (("extracted", 47), ("cross_instance", 45),
                   ("ad_url_variance", 35), ("session", 33),
                   ("heuristics", 13), ("manual", 12))

MUID = ["2f8e1a0b9c3d4e5f6a7b", "3a9f2b1c0d4e5f6a7b8c", "4b0a3c2d1e5f6a7b8c9d",
        "5c1b4d3e2f6a7b8c9d0e", "6d2c5e4f3a7b8c9d0e1f"]
MSC = ["msc01e7d3a9f14b82c6d50e9a7b31f4", "msc02f8e4b0a25c93d7e61f0a8c42a5",
       "msc03a9f5c1b36d04e8f72a1b9d53b6", "msc04b0a6d2c47e15f9a83b2c0e64c7",
       "msc05c1b7e3d58f26a0b94c3d1f75d8"]
GCLID_ANCHOR = "CAESbeD2ZWCwqFv3e-2k_"

EXPECTED_UIDS = frozenset(
    [("MUID", v) for v in MUID] + [("msclkid", v) for v in MSC]
    + [("gclid", GCLID_ANCHOR), ("build_fingerprint", "fp-9f8e7d6c5b4a")])

CFG = UidConfig(manual_deny=(("name", "ab_bucket"),))

# window covering the fixture capture span, in epoch seconds
WINDOW = (1_667_260_800 - 180 * 86_400, 1_667_433_600)


def tok(name, value, *, instance="i1", ad=None, page="p1", site="x.example",
        kind="query_param", revisit=False, phase="results_page") -> Token:
    return Token(name=name, value=value, source_kind=kind, site=site,
                 instance_id=instance, phase=phase, ad_index=ad,
                 page_key=page, from_revisit=revisit)


def table(*tokens) -> TokenTable:
    return TokenTable(tokens=tuple(tokens))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            UidConfig(min_length=0)
        with pytest.raises(ValueError):
            UidConfig(timestamp_window=(10, 10))
        with pytest.raises(ValueError):
            UidConfig(cross_instance_min_share=1)

    def test_resolved_window_from_corpus(self, uid_corpus):
        cfg = UidConfig().resolved(uid_corpus)
        start = min(t.capture_start for t in uid_corpus) // 1000
        end = max(t.capture_end for t in uid_corpus) // 1000
        assert cfg.timestamp_window == (start - 180 * 86_400, end + 86_400)
        assert cfg.wordlist and "shoes" in cfg.wordlist

    def test_resolved_keeps_explicit_window(self, uid_corpus):
        cfg = UidConfig(timestamp_window=(1, 2)).resolved(uid_corpus)
        assert cfg.timestamp_window == (1, 2)


class TestManualPatterns:
    def test_parse_kinds(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("# comment\nname=gclid\n\nvalue=abc=def\nname~*clk*\n", "utf-8")
        assert load_manual_patterns(f) == (
            ("name", "gclid"), ("value", "abc=def"), ("name_glob", "*clk*"))

    def test_bad_line_rejected(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("gclid\n", "utf-8")
        with pytest.raises(ValueError):
            load_manual_patterns(f)

    def test_fixture_files(self):
        assert ("name", "ab_bucket") in load_manual_patterns(DENY_FILE)
        assert ("name", "sessid") in load_manual_patterns(ALLOW_FILE)


class TestExtraction:
    def test_distinct_pair_count(self, uid_corpus):
        assert extract_tokens(uid_corpus).distinct_token_count() == 47

    def test_phases_split_at_click(self, uid_corpus):
        tt = extract_tokens(uid_corpus)
        phases = {t.phase for t in tt.tokens if t.name == "msclkid"
                  and t.source_kind == "query_param"}
        assert phases == {"post_click"}
        assert {t.phase for t in tt.tokens if t.name == "q"} == {"results_page"}

    def test_ad_tokens_carry_index(self, uid_corpus):
        tt = extract_tokens(uid_corpus)
        cids = [t for t in tt.tokens if t.name == "cid"]
        # both displayed ads, plus the clicked ad's own document request
        assert {t.ad_index for t in cids} == {0, 1, None}
        assert all(t.site == "bing-r.example" for t in cids)

    def test_query_values_are_percent_decoded(self, uid_corpus):
        tt = extract_tokens(uid_corpus)
        dests = {t.value for t in tt.tokens if t.name == "dest"}
        assert "https://shop1.example/" in dests

    def test_cookie_domain_normalized(self, uid_corpus):
        tt = extract_tokens(uid_corpus)
        muids = [t for t in tt.tokens if t.name == "MUID"]
        assert muids and all(t.site == "bing.example" for t in muids)
        assert all(t.source_kind == "cookie" for t in muids)

    def test_revisit_tokens_collapse_onto_instance(self, uid_corpus):
        tt = extract_tokens(uid_corpus)
        u01 = [t for t in tt.tokens if t.instance_id == "u01"]
        assert any(t.from_revisit for t in u01)
        assert not any(t.instance_id == "u01r" for t in tt.tokens)


class TestFunnelStages:
    def test_cross_instance_discards_shared_values(self):
        tt = table(tok("v", "build-1", instance="a"),
                   tok("v", "build-1", instance="b"),
                   tok("id", "unique-a", instance="a"))
        out = filter_cross_instance(tt, UidConfig())
        assert out.verdicts[("v", "build-1")].reason == "cross_instance_constant"
        assert ("id", "unique-a") in out.alive_pairs()

    def test_cross_instance_min_share(self):
        tt = table(tok("v", "build-1", instance="a"),
                   tok("v", "build-1", instance="b"),
                   tok("id", "x", instance="c"))
        out = filter_cross_instance(tt, UidConfig(cross_instance_min_share=3))
        assert ("v", "build-1") in out.alive_pairs()

    def test_single_instance_warns_and_skips(self):
        tt = table(tok("a", "1", instance="only"), tok("b", "2", instance="only"))
        with pytest.warns(SingleInstanceCorpus):
            out = filter_cross_instance(tt, UidConfig())
        assert out.verdicts == {}
        assert any("SingleInstanceCorpus" in w for w in out.warnings)

    def test_ad_variance_discards_differing_values(self):
        tt = table(tok("cid", "aaa", ad=0), tok("cid", "bbb", ad=1),
                   tok("lang", "en", ad=0), tok("lang", "en", ad=1))
        out = filter_ad_url_variance(tt)
        assert out.verdicts[("cid", "aaa")].reason == "ad_url_variant"
        assert out.verdicts[("cid", "bbb")].reason == "ad_url_variant"
        assert ("lang", "en") in out.alive_pairs()

    def test_ad_variance_ignores_single_ad_pages(self):
        tt = table(tok("cid", "aaa", ad=0))
        assert filter_ad_url_variance(tt).verdicts == {}

    def test_session_discards_changed_values(self):
        corpus_stub = [_Revisit("i1")]
        tt = table(tok("sid", "day0", instance="i1"),
                   tok("sid", "day1", instance="i1", revisit=True),
                   tok("uid", "same", instance="i1"),
                   tok("uid", "same", instance="i1", revisit=True))
        out = filter_session(tt, corpus_stub)
        assert out.verdicts[("sid", "day0")].reason == "session_changed"
        assert out.verdicts[("sid", "day1")].reason == "session_changed"
        assert ("uid", "same") in out.alive_pairs()
        assert out.flags.get(("uid", "same")) is None

    def test_session_flags_single_day_names(self):
        tt = table(tok("once", "v1", instance="i1"))
        out = filter_session(tt, [_Revisit("i1")])
        assert ("once", "v1") in out.alive_pairs()
        assert out.flags[("once", "v1")] == ("unverified_persistence",)

    def test_session_without_revisits_warns(self):
        tt = table(tok("a", "1"))
        with pytest.warns(NoRevisitData):
            out = filter_session(tt, [])
        assert any("NoRevisitData" in w for w in out.warnings)

    def test_heuristics_respect_manual_allow(self):
        cfg = UidConfig(manual_allow=(("name", "sid"),),
                        timestamp_window=WINDOW, wordlist=frozenset())
        tt = table(tok("sid", "1667260801"), tok("other", "1667260801"))
        out = apply_heuristics(tt, cfg)
        assert ("sid", "1667260801") in out.alive_pairs()
        assert out.flags[("sid", "1667260801")] == ("manual_allow",)
        assert out.verdicts[("other", "1667260801")].reason == "timestamp"

    def test_manual_deny_is_final(self):
        cfg = UidConfig(manual_deny=(("value", "keepaway11"),))
        tt = table(tok("x", "keepaway11"))
        out = apply_manual(tt, cfg)
        v = out.verdicts[("x", "keepaway11")]
        assert (v.reason, v.stage) == ("manual_deny", "manual")


class _Revisit:
    """Minimal stand-in for a revisit trace in filter_session."""
    def __init__(self, instance):
        self.browser_instance = instance
        self.is_revisit = True


HEURISTIC_CFG = UidConfig(timestamp_window=WINDOW,
                          wordlist=frozenset({"running", "dark", "mode", "cat"}))


class TestHeuristics:
    @pytest.mark.parametrize("value,reason", [
        ("1667260801", "timestamp"),
        ("1667260801000", "timestamp"),          # same instant in milliseconds
        ("9999999999", None),                    # outside the window
        ("https://x.example/p", "url_like"),
        ("https%3A%2F%2Fx.example%2Fp", "url_like"),
        ("www.shopnews.example", "url_like"),
        ("dark.mode", "english_words"),
        ("running", "english_words"),
        ("ab12xyz", "too_short"),
        ("zqxjk9mwvb82", None),
        (GCLID_ANCHOR, None),
    ])
    def test_reasons(self, value, reason):
        v = heuristic_filter(value, HEURISTIC_CFG)
        assert v.reason == reason
        assert v.kept == (reason is None)

    def test_order_english_beats_too_short(self):
        assert heuristic_filter("cat", HEURISTIC_CFG).reason == "english_words"

    @settings(max_examples=100)
    @given(st.text(min_size=1, max_size=7))
    def test_short_values_never_survive(self, value):
        assert not heuristic_filter(value, HEURISTIC_CFG).kept


class TestFullFunnel:
    def test_funnel_counts(self, uid_corpus):
        rep = classify_uids(uid_corpus, CFG)
        assert rep.funnel == EXPECTED_FUNNEL
        assert [s for s, _ in rep.funnel] == list(FUNNEL_STAGES)
        assert rep.warnings == ()

    def test_uid_set(self, uid_corpus):
        rep = classify_uids(uid_corpus, CFG)
        assert rep.uid_pairs == EXPECTED_UIDS

    def test_discard_reasons(self, uid_corpus):
        v = classify_uids(uid_corpus, CFG).verdicts
        assert v[("region", "eu-west-fleet-one")].reason == "cross_instance_constant"
        assert v[("cid", "cd01a9f3e1b2c4d5")].reason == "ad_url_variant"
        assert v[("sessid", "1667260801")].reason == "session_changed"
        assert v[("sessid", "1667347201")].reason == "session_changed"
        assert v[("sessid", "1667260803")].reason == "timestamp"
        assert v[("q", "running shoes")].reason == "english_words"
        assert v[("pos", "1")].reason == "too_short"
        assert v[("dest", "https://shop1.example/")].reason == "url_like"
        assert v[("theme-pref", "dark.mode")].reason == "english_words"
        assert v[("news_source", "www.shopnews.example")].reason == "url_like"
        assert v[("ab_bucket", "exp-42-assignment-u5")].reason == "manual_deny"

    def test_unverified_persistence_flag(self, uid_corpus):
        rep = classify_uids(uid_corpus, CFG)
        v = rep.verdicts[("msclkid", MSC[0])]
        assert v.kept and "unverified_persistence" in v.flags
        # MUID repeated on both days: no flag
        assert rep.verdicts[("MUID", MUID[0])].flags == ()

    def test_allow_pattern_rescues_pairs(self, uid_corpus):
        cfg = UidConfig(manual_deny=(("name", "ab_bucket"),),
                        manual_allow=(("name", "sessid"),))
        rep = classify_uids(uid_corpus, cfg)
        rescued = {p for p in rep.uid_pairs if p[0] == "sessid"}
        assert rescued == {("sessid", "1667260803"), ("sessid", "1667260804"),
                           ("sessid", "1667260805")}
        assert rep.uid_pairs == EXPECTED_UIDS | rescued

    def test_funnel_is_monotone(self, uid_corpus):
        counts = [n for _, n in classify_uids(uid_corpus, CFG).funnel]
        assert counts == sorted(counts, reverse=True)

    def test_to_dict_shape(self, uid_corpus):
        doc = classify_uids(uid_corpus, CFG).to_dict()
        assert {e["stage"] for e in doc["funnel"]} == set(FUNNEL_STAGES)
        muid = next(u for u in doc["uids"] if u["name"] == "MUID")
        assert muid["source_kinds"] == ["cookie"]
        assert muid["sites"] == ["bing.example"]
        assert any(w["reason"] == "manual_deny" for w in doc["verdicts"])
