"""Source-site classification and pluggable geo extraction from page URLs.

Street-view pages encode the camera pose directly in the URL; a rule
registry (domain suffix + regex + named extractor) turns those into
structured metadata. Extraction is strictly best-effort: a URL that does
not match, or that decodes to out-of-range values, yields no metadata and
never rejects the submission that carried it.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence
from urllib.parse import urlsplit

from .errors import ConfigError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeoMetadata:
    """Camera pose parsed from a street-view URL, all angles in degrees."""

    latitude: float
    longitude: float
    heading: float
    pitch: float
    fov: float
    provider: str = "google_streetview"

    def range_violations(self) -> list[str]:
        problems = []
        if not -90.0 <= self.latitude <= 90.0:
            problems.append(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            problems.append(f"longitude {self.longitude} outside [-180, 180]")
        if not 0.0 <= self.heading < 360.0:
            problems.append(f"heading {self.heading} outside [0, 360)")
        if not 0.0 <= self.pitch <= 180.0:
            problems.append(f"pitch {self.pitch} outside [0, 180]")
        if not 0.0 < self.fov <= 180.0:
            problems.append(f"fov {self.fov} outside (0, 180]")
        if not self.provider:
            problems.append("provider is empty")
        return problems

    def to_json(self) -> dict:
        return {
            "latitude": self.latitude,
            "longitude": self.longitude,
            "heading": self.heading,
            "pitch": self.pitch,
            "fov": self.fov,
            "provider": self.provider,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GeoMetadata":
        return cls(
            latitude=float(data["latitude"]),
            longitude=float(data["longitude"]),
            heading=float(data["heading"]),
            pitch=float(data["pitch"]),
            fov=float(data["fov"]),
            provider=str(data["provider"]),
        )


class SourceTag(str, Enum):
    GOOGLE = "google"
    BAIDU = "baidu"
    FLICKR = "flickr"
    OTHER = "other"


# "google" followed by one TLD label (com, fi, de) or a country pair
# (co.uk, com.au). Deliberately not a full public-suffix lookup.
_GOOGLE_HOST = re.compile(r"(^|\.)google(\.[a-z]{2,3})(\.[a-z]{2})?$")


def _host_has_suffix(host: str, suffix: str) -> bool:
    return host == suffix or host.endswith("." + suffix)


def classify_source(url: str) -> SourceTag:
    """Bucket a page URL by host; anything unrecognized or unparseable is OTHER."""
    try:
        host = (urlsplit(url).hostname or "").lower()
    except ValueError:
        log.warning("unparseable URL, classifying as other: %r", url)
        return SourceTag.OTHER
    if not host:
        return SourceTag.OTHER
    if _GOOGLE_HOST.search(host) or _host_has_suffix(host, "googleusercontent.com"):
        return SourceTag.GOOGLE
    if _host_has_suffix(host, "baidu.com"):
        return SourceTag.BAIDU
    if _host_has_suffix(host, "flickr.com") or _host_has_suffix(host, "staticflickr.com"):
        return SourceTag.FLICKR
    return SourceTag.OTHER


@dataclass(frozen=True)
class UrlParserRule:
    """One registry entry: host suffix + URL pattern + extractor routine name."""

    name: str
    domain_suffix: str
    path_pattern: str
    extractor_id: str

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "domain_suffix": self.domain_suffix,
            "path_pattern": self.path_pattern,
            "extractor_id": self.extractor_id,
        }

    @classmethod
    def from_json(cls, data: dict) -> "UrlParserRule":
        try:
            return cls(
                name=str(data["name"]),
                domain_suffix=str(data["domain_suffix"]),
                path_pattern=str(data["path_pattern"]),
                extractor_id=str(data["extractor_id"]),
            )
        except KeyError as exc:
            raise ConfigError(f"URL rule is missing key {exc.args[0]!r}") from exc


Extractor = Callable[["re.Match[str]"], Optional[GeoMetadata]]

# The observable street-view path segment: @lat,lon,3a,FOVy,HEADINGh,PITCHt
# with each field an optionally signed decimal.
GSV_PATTERN = (
    r"@(-?\d+(?:\.\d+)?),(-?\d+(?:\.\d+)?),3a,"
    r"(-?\d+(?:\.\d+)?)y,(-?\d+(?:\.\d+)?)h,(-?\d+(?:\.\d+)?)t"
)


def _extract_google_streetview(match: "re.Match[str]") -> Optional[GeoMetadata]:
    lat, lon, fov, heading, pitch = (float(g) for g in match.groups())
    return GeoMetadata(
        latitude=lat,
        longitude=lon,
        heading=heading,
        pitch=pitch,
        fov=fov,
        provider="google_streetview",
    )


def _extract_nothing(match: "re.Match[str]") -> Optional[GeoMetadata]:
    # Extension point for domains that only classify (e.g. panorama-id
    # URLs that carry no plain coordinates).
    return None


EXTRACTORS: dict[str, Extractor] = {
    "google_streetview": _extract_google_streetview,
    "none": _extract_nothing,
}


@dataclass(frozen=True)
class _CompiledRule:
    rule: UrlParserRule
    pattern: "re.Pattern[str]"
    extractor: Extractor


@dataclass(frozen=True)
class UrlRuleRegistry:
    """Ordered, immutable rule list; earlier rules win."""

    compiled: tuple[_CompiledRule, ...] = ()

    @property
    def rules(self) -> tuple[UrlParserRule, ...]:
        return tuple(c.rule for c in self.compiled)

    def __len__(self) -> int:
        return len(self.compiled)


def register_rule(registry: UrlRuleRegistry, rule: UrlParserRule) -> UrlRuleRegistry:
    """Append a rule, failing fast on a bad pattern or unknown extractor."""
    try:
        pattern = re.compile(rule.path_pattern)
    except re.error as exc:
        raise ConfigError(f"URL rule {rule.name!r} has a non-compiling pattern: {exc}") from exc
    extractor = EXTRACTORS.get(rule.extractor_id)
    if extractor is None:
        raise ConfigError(
            f"URL rule {rule.name!r} references unknown extractor {rule.extractor_id!r}"
        )
    return UrlRuleRegistry(registry.compiled + (_CompiledRule(rule, pattern, extractor),))


DEFAULT_RULES = (
    UrlParserRule(
        name="google_streetview",
        domain_suffix="google.com",
        path_pattern=GSV_PATTERN,
        extractor_id="google_streetview",
    ),
)


def default_registry() -> UrlRuleRegistry:
    return build_registry(DEFAULT_RULES)


def build_registry(rules: Sequence[UrlParserRule]) -> UrlRuleRegistry:
    registry = UrlRuleRegistry()
    for rule in rules:
        registry = register_rule(registry, rule)
    return registry


def parse_url(url: str, registry: UrlRuleRegistry) -> Optional[GeoMetadata]:
    """Run the first rule whose domain and pattern both match; None when absent.

    Out-of-range extractor output is discarded with a warning rather than
    propagated: geo is auxiliary data and must never fail a submission.
    """
    try:
        host = (urlsplit(url).hostname or "").lower()
    except ValueError:
        log.warning("unparseable URL, skipping geo extraction: %r", url)
        return None
    if not host:
        return None
    for entry in registry.compiled:
        if not _host_has_suffix(host, entry.rule.domain_suffix.lower()):
            continue
        match = entry.pattern.search(url)
        if match is None:
            continue
        try:
            geo = entry.extractor(match)
        except (ValueError, OverflowError) as exc:
            log.warning("rule %r failed to extract from %r: %s", entry.rule.name, url, exc)
            return None
        if geo is None:
            return None
        problems = geo.range_violations()
        if problems:
            log.warning("discarding out-of-range geo from %r: %s", url, "; ".join(problems))
            return None
        return geo
    return None


def render_gsv_url(geo: GeoMetadata) -> str:
    """Canonical street-view URL for a pose; the test oracle for parse_url."""
    problems = geo.range_violations()
    if problems:
        raise ValueError("; ".join(problems))
    return (
        "https://www.google.com/maps/@"
        f"{geo.latitude:.6f},{geo.longitude:.6f},3a,"
        f"{geo.fov:.6f}y,{geo.heading:.6f}h,{geo.pitch:.6f}t"
    )
