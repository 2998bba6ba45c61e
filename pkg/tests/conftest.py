"""Shared fixtures: bundled corpora, parsed filter/entity lists, CLI runner."""
from __future__ import annotations

import os
import shutil
from pathlib import Path

import pytest

from navaudit import cli, filterlist, sitemap, trace as trace_mod

FIXTURES = Path(__file__).parent / "fixtures"
TRACES = FIXTURES / "traces"
FILTER_FILE = FIXTURES / "filters" / "test_rules.txt"
ENTITY_FILE = FIXTURES / "entities" / "entities.json"
DENY_FILE = FIXTURES / "uid" / "deny.txt"
ALLOW_FILE = FIXTURES / "uid" / "allow.txt"
PSL_VECTOR_FILE = FIXTURES / "psl" / "registrable_domain_vectors.txt"

# corpora assembled into the full analyze run
COMBINED_SUBDIRS = ("uid", "redirects", "smuggle", "singles")


def load_fixture_corpus(name: str):
    traces, skipped = trace_mod.load_corpus(TRACES / name, strict=True)
    assert not skipped
    return traces


@pytest.fixture(scope="session")
def ruleset() -> filterlist.RuleSet:
    return filterlist.parse_rule_files([FILTER_FILE])


@pytest.fixture(scope="session")
def entities() -> sitemap.EntityList:
    return sitemap.EntityList.from_json(ENTITY_FILE)


@pytest.fixture(scope="session")
def uid_corpus():
    return load_fixture_corpus("uid")


@pytest.fixture(scope="session")
def redirect_corpus():
    return load_fixture_corpus("redirects")


@pytest.fixture(scope="session")
def smuggle_corpus():
    return load_fixture_corpus("smuggle")


@pytest.fixture(scope="session")
def singles_corpus():
    return load_fixture_corpus("singles")


@pytest.fixture(scope="session")
def combined_dir(tmp_path_factory) -> Path:
    """All well-formed fixture traces in one flat directory."""
    target = tmp_path_factory.mktemp("combined-traces")
    for sub in COMBINED_SUBDIRS:
        for path in sorted((TRACES / sub).glob("*.trace.json")):
            shutil.copy(path, target / path.name)
    return target


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance-gate verdict lines after the test summary."""
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.VERDICT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.VERDICT_LINES:
            terminalreporter.write_line(line)


@pytest.fixture()
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""

    def run(argv: list[str], env: dict[str, str] | None = None):
        saved: dict[str, str | None] = {}
        for key, value in (env or {}).items():
            saved[key] = os.environ.get(key)
            os.environ[key] = value
        try:
            code = cli.main(argv)
        finally:
            for key, value in saved.items():
                if value is None:
                    os.environ.pop(key, None)
                else:
                    os.environ[key] = value
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run
