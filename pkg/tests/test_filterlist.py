"""Filter grammar, matching semantics, and oracle cross-checks."""
from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from navaudit.filterlist import (
    InvalidUrl, classify_trace_trackers, match, parse_rule_files, parse_rules,
)
from navaudit.sitemap import bundled_psl

from conftest import FILTER_FILE
from naive_matcher import evaluate, parse_naive
from oracle_corpus import make_corpus

PSL = bundled_psl()


def one(text: str):
    rs = parse_rules(text)
    assert rs.rule_count == 1, rs.warnings
    return rs


class TestParsing:
    def test_fixture_list_counts(self, ruleset):
        assert ruleset.rule_count == 10
        assert ruleset.comment_count == 2
        assert ruleset.cosmetic_count == 1
        assert ruleset.warnings == ()
        assert ruleset.source_names == ("test_rules.txt",)

    def test_exception_kind(self):
        rs = one("@@||ads.example^")
        assert rs.rules[0].kind == "exception"
        assert rs.rules[0].anchor == "domain"

    def test_anchors_and_wildcard_collapse(self):
        r = one("|https://cdn.***example/a|").rules[0]
        assert (r.anchor, r.end_anchor) == ("start", True)
        assert r.pattern == "https://cdn.*example/a"

    def test_regex_rule_keeps_body(self):
        r = one("/pix[0-9]{2}/").rules[0]
        assert r.is_regex and r.pattern == "pix[0-9]{2}"

    def test_bad_regex_dropped_with_warning(self):
        rs = parse_rules("/pix[0-9/\n")
        assert rs.rule_count == 0
        assert any("bad regex" in w for w in rs.warnings)

    def test_option_suffix_requires_option_shape(self):
        # "$" inside a path stays literal when the suffix is not option-like
        r = one("example.com/a$b/c").rules[0]
        assert r.pattern == "example.com/a$b/c"
        assert r.options.resource_types is None

    def test_trailing_dollar_is_literal(self):
        assert one("banner$").rules[0].pattern == "banner$"

    def test_options_parsed(self):
        r = one("||x.example^$script,xmlhttprequest,domain=a.example|~b.example,~third-party").rules[0]
        o = r.options
        assert o.resource_types == frozenset({"script", "xhr"})
        assert o.domains_include == ("a.example",)
        assert o.domains_exclude == ("b.example",)
        assert o.third_party is False

    def test_unsupported_option_recorded_not_enforced(self):
        rs = one("||x.example^$ping")
        assert rs.rules[0].options.unsupported == ("ping",)
        assert any("unsupported option" in w for w in rs.warnings)
        # the rule still matches as if the option were absent
        assert match(rs, "https://x.example/a").matched

    def test_cosmetic_and_comment_lines_skipped(self):
        rs = parse_rules("! note\n[Adblock Plus 2.0]\n##.ad\nexample.com#@#.x\nads\n")
        assert rs.rule_count == 1
        assert rs.comment_count == 2
        assert rs.cosmetic_count == 2

    def test_rule_files_concatenate_in_order(self, tmp_path):
        (tmp_path / "a.txt").write_text("first\n! c\n", "utf-8")
        (tmp_path / "b.txt").write_text("second\n", "utf-8")
        rs = parse_rule_files([tmp_path / "a.txt", tmp_path / "b.txt"])
        assert [r.pattern for r in rs.rules] == ["first", "second"]
        assert rs.source_names == ("a.txt", "b.txt")
        assert rs.comment_count == 1

    def test_to_text_reparse_equivalent(self, ruleset):
        assert parse_rules(ruleset.to_text()) == ruleset


class TestMatching:
    def test_domain_anchor_and_subdomain(self, ruleset):
        assert match(ruleset, "https://trackpix.example/p.gif", psl=PSL).matched
        assert match(ruleset, "https://a.b.trackpix.example/x", psl=PSL).matched
        assert not match(ruleset, "https://nottrackpix.example/x", psl=PSL).matched

    def test_dot_is_not_a_separator(self, ruleset):
        # ||trackpix.example^ must not fire when more labels follow
        r = match(ruleset, "https://trackpix.example.attacker.test/x", psl=PSL)
        assert not r.matched

    def test_separator_matches_end_of_url(self, ruleset):
        assert match(ruleset, "https://trackpix.example", psl=PSL).matched

    def test_type_option(self, ruleset):
        url = "https://cdn.metric-hub.example/lib/analytics.js"
        assert match(ruleset, url, resource_type="script", psl=PSL).matched
        assert not match(ruleset, url, resource_type="image", psl=PSL).matched
        # untyped requests count as "other"
        assert not match(ruleset, url, psl=PSL).matched

    def test_resource_type_mapping(self, ruleset):
        beacon = "https://beacon-api.example/collect"
        assert match(ruleset, beacon, resource_type="fetch", psl=PSL).matched
        assert match(ruleset, beacon, resource_type="xhr", psl=PSL).matched
        assert not match(ruleset, beacon, resource_type="script", psl=PSL).matched
        frame = "https://adgrid.example/frame"
        assert match(ruleset, frame, resource_type="document", psl=PSL).matched
        assert not match(ruleset, frame, resource_type="image", psl=PSL).matched

    def test_third_party_option(self, ruleset):
        url = "https://doubleclick.example/ad.png"
        assert match(ruleset, url, source_site="shop.example", psl=PSL).matched
        assert not match(ruleset, url, source_site="doubleclick.example", psl=PSL).matched
        # explicit flag wins over derivation
        assert not match(ruleset, url, source_site="shop.example",
                         is_third_party=False, psl=PSL).matched
        # without any context the request counts as first-party
        assert not match(ruleset, url, psl=PSL).matched

    def test_domain_option(self, ruleset):
        url = "https://stats-relay.example/sync"
        assert match(ruleset, url, source_site="shop-heavy.example", psl=PSL).matched
        assert not match(ruleset, url, source_site="elsewhere.example", psl=PSL).matched
        assert not match(ruleset, url, psl=PSL).matched

    def test_regex_rule(self, ruleset):
        assert match(ruleset, "https://pixel-farm.example/pixel123.gif", psl=PSL).matched
        assert not match(ruleset, "https://pixel-farm.example/pixel12.gif", psl=PSL).matched

    def test_plain_substring_case_insensitive(self, ruleset):
        assert match(ruleset, "https://cdn.example/CLICKECHO/tag.js", psl=PSL).matched

    def test_exception_vetoes_block(self, ruleset):
        r = match(ruleset, "https://allowed.metric-hub.example/safe.js",
                  resource_type="script", psl=PSL)
        assert not r.matched
        assert r.winning_rule is None
        assert r.exception_applied
        assert r.exception_rule.raw == "@@||metric-hub.example/safe.js"

    def test_exception_ignored_without_block(self, ruleset):
        # no block rule applies to an image from metric-hub, so the
        # exception never comes into play
        r = match(ruleset, "https://allowed.metric-hub.example/safe.js",
                  resource_type="image", psl=PSL)
        assert not r.matched and not r.exception_applied

    def test_first_block_rule_wins(self):
        rs = parse_rules("second-token\n||host.example^\n")
        r = match(rs, "https://host.example/second-token")
        assert r.winning_rule.raw == "second-token"

    def test_start_and_end_anchor(self):
        rs = parse_rules("|https://cdn.\nads.js|\n")
        assert match(rs, "https://cdn.example/x").winning_rule.raw == "|https://cdn."
        assert not match(parse_rules("|https://cdn.\n"), "https://www.cdn.example/x").matched
        assert match(rs, "https://site.example/ads.js").winning_rule.raw == "ads.js|"
        assert not match(parse_rules("ads.js|\n"), "https://site.example/ads.js?x=1").matched

    def test_wildcard_spans_segments(self):
        rs = parse_rules("/img*720p\n")
        assert match(rs, "https://a.example/img/q/x-720p.jpg").matched
        assert not match(rs, "https://a.example/img/q/x-360p.jpg").matched

    @pytest.mark.parametrize("url", ["/relative/path", "ftp://x.example/a",
                                     "data:text/plain,hi", "https://", "about:blank"])
    def test_invalid_urls_raise(self, ruleset, url):
        with pytest.raises(InvalidUrl):
            match(ruleset, url, psl=PSL)


class TestOracleAgreement:
    """The production matcher and the naive character-level matcher must
    agree on generated rule sets; the exhaustive run lives in the
    acceptance suite."""

    @pytest.mark.parametrize("index", [2, 3, 4])
    def test_generated_corpus(self, index):
        text, probes = make_corpus(index)
        rs = parse_rules(text)
        naive = parse_naive(text)
        for url, source, rtype, third in probes:
            got = match(rs, url, source_site=source, resource_type=rtype,
                        is_third_party=third, psl=PSL)
            want = evaluate(naive, url, source_site=source, resource_type=rtype,
                            is_third_party=third, psl=PSL)
            assert {
                "matched": got.matched,
                "winning_rule": got.winning_rule.raw if got.winning_rule else None,
                "exception_applied": got.exception_applied,
                "exception_rule": got.exception_rule.raw if got.exception_rule else None,
            } == want, (url, source, rtype, third)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000_000))
    def test_single_rule_agreement(self, seed):
        from oracle_corpus import make_probe, make_rule
        rng = random.Random(seed)
        text = "\n".join(make_rule(rng) for _ in range(3)) + "\n"
        rs = parse_rules(text)
        naive = parse_naive(text)
        for _ in range(10):
            url, source, rtype, third = make_probe(rng)
            got = match(rs, url, source_site=source, resource_type=rtype,
                        is_third_party=third, psl=PSL)
            want = evaluate(naive, url, source_site=source, resource_type=rtype,
                            is_third_party=third, psl=PSL)
            assert got.matched == want["matched"]
            assert (got.winning_rule.raw if got.winning_rule else None) == want["winning_rule"]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000_000))
    def test_exception_never_reports_match(self, seed):
        from oracle_corpus import make_probe, make_rule
        rng = random.Random(seed)
        text = "\n".join("@@" + make_rule(rng).removeprefix("@@") for _ in range(4))
        rs = parse_rules(text)
        url, source, rtype, third = make_probe(rng)
        r = match(rs, url, source_site=source, resource_type=rtype,
                  is_third_party=third, psl=PSL)
        assert not r.matched and not r.exception_applied


EXPECTED_HEAVY_RULES = {
    "https://trackpix.example/pre.gif": "||trackpix.example^",
    "https://trackpix.example/p.gif": "||trackpix.example^",
    "https://cdn.metric-hub.example/lib/analytics.js": "||metric-hub.example^$script",
    "https://doubleclick.example/ad.png": "||doubleclick.example^$third-party",
    "https://googleadservices.example/conv.js": "||googleadservices.example^",
    "https://beacon-api.example/collect": "||beacon-api.example^$xhr",
    "https://pixel-farm.example/pixel123.gif": "/pixel[0-9]{3}/",
    "https://stats-relay.example/sync": "||stats-relay.example^$domain=shop-heavy.example",
    "https://adgrid.example/frame": "||adgrid.example^$subdocument",
    "https://cdn.example/clickecho/tag.js": "clickecho",
}


class TestTraceClassification:
    def test_heavy_trace_hits(self, singles_corpus, ruleset):
        trace = next(t for t in singles_corpus if t.instance_id == "h01")
        hits = classify_trace_trackers(trace, ruleset, psl=PSL)
        assert {h.url: h.rule for h in hits} == EXPECTED_HEAVY_RULES
        by_url = {h.url: h for h in hits}
        assert by_url["https://adgrid.example/frame"].tracker_site == "adgrid.example"
        assert by_url["https://cdn.metric-hub.example/lib/analytics.js"].third_party
        # results-page tracker keeps its own source host
        assert by_url["https://trackpix.example/pre.gif"].source_host == "adheavy.example"
        assert by_url["https://trackpix.example/p.gif"].source_host == "shop-heavy.example"

    def test_quiet_trace_has_no_hits(self, singles_corpus, ruleset):
        trace = next(t for t in singles_corpus if t.instance_id == "u06")
        assert classify_trace_trackers(trace, ruleset, psl=PSL) == ()
