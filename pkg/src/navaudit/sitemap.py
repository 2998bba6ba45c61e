"""Site identity: registrable domains (eTLD+1) and organization lookup.

A "site" throughout this codebase is the registrable domain of a host,
derived with the Public Suffix List algorithm from a bundled list snapshot.
Organizations come from an entity list that maps many domains to one owner,
so chains like doubleclick.net -> google.com collapse to a single name.
"""
from __future__ import annotations

import functools
import ipaddress
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

__all__ = [
    "EmptyHost",
    "Site",
    "Unknown",
    "PublicSuffixList",
    "EntityList",
    "bundled_psl",
    "etld_plus_one",
    "entity_of",
    "organization_label",
]


class EmptyHost(ValueError):
    """Raised when a host string is empty or only whitespace."""


@dataclass(frozen=True, order=True)
class Site:
    """A host reduced to its registrable domain.

    ``registrable`` is False for IP literals, bare public suffixes,
    single-label hosts and malformed names; those keep their input form.
    """

    registrable_domain: str
    registrable: bool = True

    @property
    def name(self) -> str:
        return self.registrable_domain

    def __str__(self) -> str:
        return self.registrable_domain


@dataclass(frozen=True)
class Unknown:
    """Stand-in organization for a site absent from the entity list.

    Each unlisted site counts as its own organization.
    """

    site: str

    def __str__(self) -> str:
        return self.site


_PORT_RE = re.compile(r"^(.*[^:]):(\d+)$")


class PublicSuffixList:
    """Matcher over public-suffix rules (exact, wildcard ``*.``, exception ``!``).

    Rules are indexed in both their written form and punycode so unicode and
    xn-- hosts resolve alike.
    """

    def __init__(self, text: str):
        self._exact: set[str] = set()
        self._wildcard: set[str] = set()  # base after the "*." prefix
        self._exception: set[str] = set()
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("//"):
                continue
            # list files may carry trailing whitespace-separated comments
            line = line.split()[0].lower()
            self._add_rule(line)
            punycoded = _to_punycode(line)
            if punycoded and punycoded != line:
                self._add_rule(punycoded)

    def _add_rule(self, rule: str) -> None:
        if rule.startswith("!"):
            self._exception.add(rule[1:])
        elif rule.startswith("*."):
            self._wildcard.add(rule[2:])
        else:
            self._exact.add(rule)

    def public_suffix_length(self, labels: list[str]) -> int:
        """Number of labels in the prevailing public suffix.

        Falls back to the implicit ``*`` rule (last label) when nothing
        matches, per the published algorithm.
        """
        n = len(labels)
        best = 1
        for i in range(n):
            suffix = ".".join(labels[i:])
            if suffix in self._exception:
                # an exception rule wins outright; its suffix is one label
                # shorter than the rule itself
                return n - i - 1
            if suffix in self._exact:
                best = max(best, n - i)
            if n - i >= 2 and ".".join(labels[i + 1:]) in self._wildcard:
                best = max(best, n - i)
        return best

    def registrable_domain(self, host: str) -> str | None:
        labels = host.split(".")
        if any(label == "" for label in labels):
            return None
        ps_len = self.public_suffix_length(labels)
        if len(labels) <= ps_len:
            return None
        return ".".join(labels[-(ps_len + 1):])


def _to_punycode(rule: str) -> str | None:
    prefix = ""
    if rule.startswith("!"):
        prefix, rule = "!", rule[1:]
    out = []
    for label in rule.split("."):
        if label == "*" or label.isascii():
            out.append(label)
            continue
        try:
            out.append(label.encode("idna").decode("ascii"))
        except UnicodeError:
            return None
    return prefix + ".".join(out)


@functools.lru_cache(maxsize=1)
def bundled_psl() -> PublicSuffixList:
    text = (resources.files("navaudit.data") / "public_suffix_list.dat").read_text("utf-8")
    return PublicSuffixList(text)


def _is_ip_literal(host: str) -> bool:
    candidate = host[1:-1] if host.startswith("[") and host.endswith("]") else host
    try:
        ipaddress.ip_address(candidate)
        return True
    except ValueError:
        return False


def etld_plus_one(host: str, psl: PublicSuffixList | None = None) -> Site:
    """Reduce ``host`` to its registrable domain.

    Raises EmptyHost for empty input. IP literals, single-label hosts and
    hosts without a registrable domain come back unchanged with
    ``registrable=False``.
    """
    if host is None or not host.strip():
        raise EmptyHost("host is empty")
    norm = host.strip().lower()
    if _is_ip_literal(norm):
        return Site(norm, registrable=False)
    port_match = _PORT_RE.match(norm)
    if port_match and ":" not in port_match.group(1):
        norm = port_match.group(1)
        if _is_ip_literal(norm):
            return Site(norm, registrable=False)
    if norm.endswith(".") and len(norm) > 1:
        norm = norm[:-1]
    if "." not in norm:
        return Site(norm, registrable=False)
    registrable = (psl or bundled_psl()).registrable_domain(norm)
    if registrable is None:
        return Site(norm, registrable=False)
    return Site(registrable, registrable=True)


class EntityList:
    """Domain to organization mapping in the Disconnect entity-list shape.

    Accepts either ``{"entities": {name: {"properties": [...]}}}`` or the
    flat ``{name: {"properties": [...]}}`` form; ``resources`` domains are
    folded in when present. First owner wins on duplicate domains and the
    collision is kept as a warning.
    """

    def __init__(self, entities: dict[str, list[str]] | None = None):
        self.entities: dict[str, frozenset[str]] = {}
        self.warnings: list[str] = []
        self._by_domain: dict[str, str] = {}
        for name, domains in (entities or {}).items():
            self._add(name, domains)

    def _add(self, name: str, domains) -> None:
        kept = []
        for domain in domains:
            domain = domain.strip().lower()
            if not domain:
                continue
            owner = self._by_domain.get(domain)
            if owner is not None and owner != name:
                self.warnings.append(
                    f"domain {domain!r} claimed by {owner!r} and {name!r}; keeping {owner!r}"
                )
                continue
            self._by_domain[domain] = name
            kept.append(domain)
        self.entities[name] = self.entities.get(name, frozenset()) | frozenset(kept)

    @classmethod
    def from_json(cls, source: str | Path | dict) -> "EntityList":
        if isinstance(source, (str, Path)):
            data = json.loads(Path(source).read_text("utf-8"))
        else:
            data = source
        if isinstance(data.get("entities"), dict):
            data = data["entities"]
        el = cls()
        for name, entry in data.items():
            if isinstance(entry, dict):
                domains = list(entry.get("properties", [])) + list(entry.get("resources", []))
            else:
                domains = list(entry)
            el._add(name, domains)
        return el

    def owner_of(self, domain: str) -> str | None:
        return self._by_domain.get(domain.lower())


def entity_of(site: Site | str, entities: EntityList) -> str | Unknown:
    """Organization that owns ``site``; Unknown(site) when unlisted."""
    name = site.name if isinstance(site, Site) else site
    owner = entities.owner_of(name)
    return owner if owner is not None else Unknown(name)


def organization_label(site: Site | str, entities: EntityList) -> str:
    """Entity name when listed, else the site itself as its own organization."""
    return str(entity_of(site, entities))
