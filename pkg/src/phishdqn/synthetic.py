"""Synthetic URL corpora with complete evidence, for tests and smoke runs.

``url_for_bits`` builds a URL plus evidence whose extracted feature vector
equals a requested bit pattern, so corpora can be specified at the feature
level and still exercise the full parse/extract pipeline.
"""

from __future__ import annotations

import numpy as np

from .dataset import LabeledUrl
from .url_lexer import N_FEATURES, HostEvidence

_WORDS = ("mail", "shop", "bank", "login", "web", "app", "news", "pay", "cloud", "info", "acct", "safe", "my", "go")
_TLDS = ("com", "net", "org", "io", "co", "biz")

# Class-conditional probability of each feature firing in ``balanced_corpus``.
PHISH_RATES = (0.70, 0.25, 0.60, 0.10, 0.35, 0.40, 0.60, 0.20, 0.40, 0.30, 0.15, 0.60, 0.40, 0.45)
BENIGN_RATES = (0.30, 0.02, 0.30, 0.02, 0.12, 0.15, 0.20, 0.03, 0.05, 0.10, 0.05, 0.10, 0.08, 0.05)


def feasible(bits) -> bool:
    """IP hosts carry no '-' and always score 0 on sub-domains."""
    return not (bits[1] and (bits[4] or bits[5]))


def rule_label(bits) -> int:
    """ip_address OR at_symbol OR (long_url AND prefix_suffix)."""
    return int(bits[1] or bits[3] or (bits[2] and bits[4]))


def _word(rng) -> str:
    return _WORDS[rng.integers(len(_WORDS))]


def _host(rng, bits) -> str:
    if bits[1]:
        octets = rng.integers(1, 256, size=4)
        if rng.random() < 0.2:
            return ".".join(f"0x{o:02x}" for o in octets)
        return ".".join(str(o) for o in octets)
    n_dots = int(rng.integers(3, 5)) if bits[5] else int(rng.integers(1, 3))
    labels = [_word(rng) for _ in range(n_dots)] + [_TLDS[rng.integers(len(_TLDS))]]
    if bits[4]:
        i = int(rng.integers(n_dots))
        labels[i] = f"{labels[i]}-{_word(rng)}"
    return ".".join(labels)


def _evidence(rng, bits, https: bool) -> HostEvidence:
    return HostEvidence(
        https_issuer_trusted=(not bits[0]) if https else None,
        anchor_ratio=round(float(rng.uniform(0.21, 0.95)), 2) if bits[6] else round(float(rng.uniform(0.0, 0.20)), 2),
        mouseover_mismatch=bool(bits[7]),
        dns_has_record=not bits[8],
        redirect_count=int(rng.integers(2, 6)) if bits[9] else int(rng.integers(0, 2)),
        popup_count=int(rng.integers(3, 8)) if bits[10] else int(rng.integers(0, 3)),
        domain_age_days=int(rng.integers(0, 365)) if bits[11] else int(rng.integers(365, 6000)),
        form_handler_cross_domain=bool(bits[12]),
        whois_registered=not bits[13],
    )


def url_for_bits(bits, rng: np.random.Generator, max_tries: int = 200) -> tuple[str, HostEvidence]:
    """A URL and evidence whose features are exactly ``bits``."""
    bits = [int(b) for b in bits]
    if len(bits) != N_FEATURES or not feasible(bits):
        raise ValueError(f"infeasible feature pattern {bits}")
    for _ in range(max_tries):
        https = (not bits[0]) or rng.random() < 0.5
        scheme = "https" if https else "http"
        host = _host(rng, bits)
        path = "/" + _word(rng)
        userinfo = ""
        if bits[3]:
            if rng.random() < 0.5:
                userinfo = _word(rng) + "@"
            else:
                path += "@" + _word(rng)
        url = f"{scheme}://{userinfo}{host}{path}"
        if bits[2]:
            goal = int(rng.integers(55, 110))
            while len(url) < goal:
                url += "/" + _word(rng)
            if len(url) <= 54:
                continue
        elif len(url) > 54:
            continue
        return url, _evidence(rng, bits, https)
    raise RuntimeError(f"could not build a URL for {bits}")


def _draw_bits(rng, rates) -> list[int]:
    while True:
        bits = [int(rng.random() < p) for p in rates]
        if feasible(bits):
            return bits


RULE_RATES = (0.5, 0.2, 0.5, 0.25, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5)


def rule_corpus(n: int = 512, seed: int = 0) -> tuple[list[LabeledUrl], dict[str, HostEvidence]]:
    """Corpus labeled by ``rule_label``; noise features are independent coin flips."""
    rng = np.random.default_rng(seed)
    records, cache = [], {}
    while len(records) < n:
        bits = _draw_bits(rng, RULE_RATES)
        url, ev = url_for_bits(bits, rng)
        if url in cache:
            continue
        records.append(LabeledUrl(url, rule_label(bits)))
        cache[url] = ev
    return records, cache


def balanced_corpus(n: int = 2000, seed: int = 0) -> tuple[list[LabeledUrl], dict[str, HostEvidence]]:
    """Half phishing, half benign; features drawn from class-conditional rates."""
    rng = np.random.default_rng(seed)
    labels = [1] * (n // 2) + [0] * (n - n // 2)
    labels = [labels[i] for i in rng.permutation(n)]
    records, cache = [], {}
    for label in labels:
        rates = PHISH_RATES if label else BENIGN_RATES
        while True:
            url, ev = url_for_bits(_draw_bits(rng, rates), rng)
            if url not in cache:
                break
        records.append(LabeledUrl(url, label))
        cache[url] = ev
    return records, cache
