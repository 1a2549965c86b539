"""URL parsing and the 14 binary phishing features.

Five features (ip address, long URL, '@', '-' in host, sub-domains) are read
from the URL string. The https feature is lexical for non-https URLs and
needs certificate evidence otherwise. The remaining eight need facts about
the live site (DNS, WHOIS, page content); those arrive as ``HostEvidence``,
usually loaded from an offline JSON-lines cache.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidEvidence, MalformedUrl, MissingEvidence

FEATURE_NAMES = (
    "https_protocol",
    "ip_address",
    "long_url",
    "at_symbol",
    "prefix_suffix",
    "subdomains",
    "anchor_urls",
    "link_hiding",
    "dns_record",
    "page_redirects",
    "popup_windows",
    "domain_age",
    "server_form_handler",
    "unusual_url",
)
N_FEATURES = len(FEATURE_NAMES)

LONG_URL_THRESHOLD = 54
SUBDOMAIN_DOTS = 3
ANCHOR_RATIO_THRESHOLD = 0.20
MAX_REDIRECTS = 1
MAX_POPUPS = 2
MIN_DOMAIN_AGE_DAYS = 365

_SCHEME_RE = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*://")
_DEC_OCTET_RE = re.compile(r"[0-9]{1,3}")
_HEX_RE = re.compile(r"0[xX]([0-9a-fA-F]+)")


@dataclass(frozen=True)
class ParsedUrl:
    """Structural decomposition of a URL.

    ``query`` and ``fragment`` are None when their delimiter is absent, so
    ``unparse()`` rebuilds ``raw`` exactly.
    """

    raw: str
    scheme: str
    host: str
    host_is_ipv4: bool
    host_is_hex_ip: bool
    path: str
    query: str | None
    fragment: str | None
    userinfo_present: bool
    authority: str = field(repr=False, default="")

    def unparse(self) -> str:
        out = self.raw[: len(self.scheme)] + "://" + self.authority + self.path
        if self.query is not None:
            out += "?" + self.query
        if self.fragment is not None:
            out += "#" + self.fragment
        return out


def _is_ipv4(host: str) -> bool:
    labels = host.split(".")
    return len(labels) == 4 and all(
        _DEC_OCTET_RE.fullmatch(lab) and int(lab) <= 255 for lab in labels
    )


def decode_hex_ip(host: str) -> str | None:
    """Dotted-decimal address for a hex-obfuscated host, else None.

    Accepts four 0x-prefixed octets (``0xC0.0xA8.0x00.0x01``) or a single
    0x literal that fits in 32 bits (``0xC0A80001``).
    """
    labels = host.split(".")
    if len(labels) == 4:
        octets = []
        for lab in labels:
            m = _HEX_RE.fullmatch(lab)
            if not m:
                return None
            value = int(m.group(1), 16)
            if value > 0xFF:
                return None
            octets.append(value)
        return ".".join(str(o) for o in octets)
    if len(labels) == 1:
        m = _HEX_RE.fullmatch(host)
        if not m:
            return None
        value = int(m.group(1), 16)
        if value > 0xFFFFFFFF:
            return None
        return ".".join(str((value >> s) & 0xFF) for s in (24, 16, 8, 0))
    return None


def parse_url(raw: str) -> ParsedUrl:
    if not isinstance(raw, str) or not raw:
        raise MalformedUrl(raw, "empty")
    m = _SCHEME_RE.match(raw)
    if not m:
        raise MalformedUrl(raw, "no scheme:// separator")
    scheme = raw[: m.end() - 3].lower()
    rest = raw[m.end():]

    cut = len(rest)
    for delim in "/?#":
        i = rest.find(delim)
        if i != -1:
            cut = min(cut, i)
    authority, tail = rest[:cut], rest[cut:]

    fragment = None
    if "#" in tail:
        tail, fragment = tail.split("#", 1)
    query = None
    if "?" in tail:
        tail, query = tail.split("?", 1)
    path = tail

    userinfo_present = "@" in authority
    hostport = authority.rsplit("@", 1)[1] if userinfo_present else authority
    if hostport.startswith("["):
        close = hostport.find("]")
        if close == -1:
            raise MalformedUrl(raw, "unterminated IPv6 literal")
        host, port_part = hostport[: close + 1], hostport[close + 1:]
        if port_part and not port_part.startswith(":"):
            raise MalformedUrl(raw, "junk after IPv6 literal")
        port = port_part[1:]
    else:
        host, _, port = hostport.partition(":")
    if port and not port.isdigit():
        raise MalformedUrl(raw, f"bad port {port!r}")
    if not host:
        raise MalformedUrl(raw, "empty host")
    if any(ch.isspace() for ch in host):
        raise MalformedUrl(raw, "whitespace in host")
    host = host.lower()

    return ParsedUrl(
        raw=raw,
        scheme=scheme,
        host=host,
        host_is_ipv4=_is_ipv4(host),
        host_is_hex_ip=decode_hex_ip(host) is not None,
        path=path,
        query=query,
        fragment=fragment,
        userinfo_present=userinfo_present,
        authority=authority,
    )


@dataclass(frozen=True)
class HostEvidence:
    """Facts about the site behind a URL. None means "not observed"."""

    https_issuer_trusted: bool | None = None
    dns_has_record: bool | None = None
    domain_age_days: int | None = None
    anchor_ratio: float | None = None
    mouseover_mismatch: bool | None = None
    redirect_count: int | None = None
    popup_count: int | None = None
    form_handler_cross_domain: bool | None = None
    whois_registered: bool | None = None

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name in _BOOL_FIELDS:
                if not isinstance(value, bool):
                    raise InvalidEvidence(f"{f.name} must be a boolean, got {value!r}")
            elif f.name == "anchor_ratio":
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise InvalidEvidence(f"anchor_ratio must be a number, got {value!r}")
                if not 0.0 <= value <= 1.0:
                    raise InvalidEvidence(f"anchor_ratio must lie in [0, 1], got {value!r}")
            else:
                if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                    raise InvalidEvidence(f"{f.name} must be a nonnegative integer, got {value!r}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "HostEvidence":
        unknown = set(data) - _EVIDENCE_FIELDS
        if unknown:
            raise InvalidEvidence(f"unknown evidence keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


_EVIDENCE_FIELDS = frozenset(f.name for f in fields(HostEvidence))
_BOOL_FIELDS = frozenset(
    {
        "https_issuer_trusted",
        "dns_has_record",
        "mouseover_mismatch",
        "form_handler_cross_domain",
        "whois_registered",
    }
)


class MissingEvidencePolicy(enum.Enum):
    BENIGN_DEFAULT = "benign"
    SUSPICIOUS_DEFAULT = "suspicious"
    ERROR_ON_MISSING = "error"


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[int, ...]
    evidence_mask: tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != N_FEATURES or len(self.evidence_mask) != N_FEATURES:
            raise ValueError(f"feature vectors have exactly {N_FEATURES} slots")
        if any(v not in (0, 1) for v in self.values):
            raise ValueError(f"feature values must be 0 or 1: {self.values}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(FEATURE_NAMES, self.values))


# slot -> (evidence field, predicate that returns True for the phishing value)
_EVIDENCE_RULES = {
    6: ("anchor_ratio", lambda v: v > ANCHOR_RATIO_THRESHOLD),
    7: ("mouseover_mismatch", lambda v: v is True),
    8: ("dns_has_record", lambda v: v is False),
    9: ("redirect_count", lambda v: v > MAX_REDIRECTS),
    10: ("popup_count", lambda v: v > MAX_POPUPS),
    11: ("domain_age_days", lambda v: v < MIN_DOMAIN_AGE_DAYS),
    12: ("form_handler_cross_domain", lambda v: v is True),
    13: ("whois_registered", lambda v: v is False),
}


def extract_features(
    url: ParsedUrl,
    evidence: HostEvidence | None = None,
    policy: MissingEvidencePolicy = MissingEvidencePolicy.BENIGN_DEFAULT,
) -> FeatureVector:
    """Compute the 14-slot binary feature vector for a parsed URL.

    Slots whose evidence is absent take the policy default (0 for benign, 1
    for suspicious) and are marked False in ``evidence_mask``. In
    ``ERROR_ON_MISSING`` mode all absent fields are reported at once.
    """
    if evidence is None:
        evidence = HostEvidence()
    values = [0] * N_FEATURES
    mask = [True] * N_FEATURES
    missing = []

    if url.scheme != "https":
        values[0] = 1
    elif evidence.https_issuer_trusted is None:
        mask[0] = False
        missing.append("https_issuer_trusted")
    else:
        values[0] = 0 if evidence.https_issuer_trusted else 1

    is_ip = url.host_is_ipv4 or url.host_is_hex_ip
    values[1] = int(is_ip)
    values[2] = int(len(url.raw) > LONG_URL_THRESHOLD)
    values[3] = int("@" in url.raw[len(url.scheme) + 3:])
    values[4] = int("-" in url.host)
    values[5] = int(not is_ip and url.host.count(".") >= SUBDOMAIN_DOTS)

    for slot, (name, is_phishy) in _EVIDENCE_RULES.items():
        observed = getattr(evidence, name)
        if observed is None:
            mask[slot] = False
            missing.append(name)
        else:
            values[slot] = int(is_phishy(observed))

    if missing:
        if policy is MissingEvidencePolicy.ERROR_ON_MISSING:
            raise MissingEvidence(missing, url.raw)
        default = int(policy is MissingEvidencePolicy.SUSPICIOUS_DEFAULT)
        for slot in range(N_FEATURES):
            if not mask[slot]:
                values[slot] = default

    return FeatureVector(tuple(values), tuple(mask))


def featurize(
    raw: str,
    evidence: HostEvidence | None = None,
    policy: MissingEvidencePolicy = MissingEvidencePolicy.BENIGN_DEFAULT,
) -> FeatureVector:
    return extract_features(parse_url(raw), evidence, policy)


def load_evidence_cache(path) -> dict[str, HostEvidence]:
    """Read a JSON-lines evidence cache keyed by URL.

    Blank lines are ignored; a URL listed twice keeps its last entry.
    """
    cache = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidEvidence(f"{path}:{lineno}: {exc}") from None
            if not isinstance(record, dict) or not isinstance(record.get("url"), str):
                raise InvalidEvidence(f"{path}:{lineno}: expected an object with a 'url' string")
            url = record.pop("url")
            try:
                cache[url] = HostEvidence.from_dict(record)
            except (InvalidEvidence, TypeError) as exc:
                raise InvalidEvidence(f"{path}:{lineno}: {exc}") from None
    return cache


def write_evidence_cache(path, items: Iterable[tuple[str, HostEvidence]]) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        for url, ev in items:
            fh.write(json.dumps({"url": url, **ev.to_dict()}) + "\n")
