"""Labeled URL corpora: CSV I/O, vectorization, stratified splits and folds.

Split shuffles use ``Lcg64`` rather than numpy so the same seed yields the
same partition in any language:

    state_0   = seed mod 2**64
    state_k+1 = (6364136223846793005 * state_k + 1442695040888963407) mod 2**64
    u32       = state_k+1 >> 32
    below(n)  = (u32 * n) >> 32
    shuffle   = Fisher-Yates, i from len-1 down to 1, swap(i, below(i + 1))
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadLabel, DegenerateSplit, MalformedUrl
from .url_lexer import (
    FEATURE_NAMES,
    FeatureVector,
    HostEvidence,
    MissingEvidencePolicy,
    N_FEATURES,
    extract_features,
    load_evidence_cache,
    parse_url,
)

_LABEL_WORDS = {"0": 0, "1": 1, "legitimate": 0, "phishing": 1}


class Lcg64:
    MULTIPLIER = 6364136223846793005
    INCREMENT = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u32(self) -> int:
        self.state = (self.MULTIPLIER * self.state + self.INCREMENT) & self.MASK
        return self.state >> 32

    def below(self, n: int) -> int:
        return (self.next_u32() * n) >> 32

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class LabeledUrl:
    url: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


def _parse_label(value: str, row: int) -> int:
    try:
        return _LABEL_WORDS[value.strip().lower()]
    except KeyError:
        raise BadLabel(row, value) from None


def load_csv(path) -> list[LabeledUrl]:
    """Load ``url,label`` rows in file order.

    A first row whose label column reads ``label`` is taken as a header.
    Unquoted commas inside the URL are tolerated: the last column is the label.
    """
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise BadLabel(i, "")
            url, label = ",".join(row[:-1]), row[-1]
            if i == 0 and label.strip().lower() == "label":
                continue
            records.append(LabeledUrl(url, _parse_label(label, i)))
    return records


def write_csv(records: Sequence[LabeledUrl], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["url", "label"])
        for rec in records:
            writer.writerow([rec.url, rec.label])


@dataclass
class VectorizedDataset:
    samples: list[tuple[FeatureVector, int]]
    urls: list[str] = field(default_factory=list)
    skipped: list[tuple[int, str, str]] = field(default_factory=list)

    @property
    def source_counts(self) -> tuple[int, int]:
        n_phish = sum(label for _, label in self.samples)
        return len(self.samples) - n_phish, n_phish

    def __len__(self):
        return len(self.samples)

    @property
    def features(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, N_FEATURES))
        return np.array([fv.values for fv, _ in self.samples], dtype=np.float64)

    @property
    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.samples], dtype=np.int64)

    def subset(self, indices: Sequence[int]) -> "VectorizedDataset":
        return VectorizedDataset(
            samples=[self.samples[i] for i in indices],
            urls=[self.urls[i] for i in indices] if self.urls else [],
        )

    @classmethod
    def from_arrays(cls, features, labels) -> "VectorizedDataset":
        features = np.asarray(features)
        samples = [
            (FeatureVector(tuple(int(v) for v in row), (True,) * N_FEATURES), int(y))
            for row, y in zip(features, labels)
        ]
        return cls(samples)


def vectorize(
    records: Sequence[LabeledUrl],
    evidence_cache=None,
    policy: MissingEvidencePolicy = MissingEvidencePolicy.BENIGN_DEFAULT,
    on_parse_error: str = "skip",
) -> VectorizedDataset:
    """Parse and featurize every record, keeping input order.

    ``evidence_cache`` is a path to a JSON-lines cache, an already-loaded
    ``{url: HostEvidence}`` mapping, or None. Unparseable URLs are dropped
    and listed in ``skipped`` (``on_parse_error="skip"``) or become an
    all-ones vector with an all-False mask (``"suspicious"``).
    """
    if on_parse_error not in ("skip", "suspicious"):
        raise ValueError(f"on_parse_error must be 'skip' or 'suspicious', got {on_parse_error!r}")
    if evidence_cache is None or evidence_cache == "":
        cache = {}
    elif isinstance(evidence_cache, dict):
        cache = evidence_cache
    else:
        cache = load_evidence_cache(evidence_cache)

    out = VectorizedDataset(samples=[])
    for i, rec in enumerate(records):
        try:
            parsed = parse_url(rec.url)
        except MalformedUrl as exc:
            if on_parse_error == "skip":
                out.skipped.append((i, rec.url, exc.reason))
                continue
            fv = FeatureVector((1,) * N_FEATURES, (False,) * N_FEATURES)
        else:
            fv = extract_features(parsed, cache.get(rec.url, HostEvidence()), policy)
        out.samples.append((fv, rec.label))
        out.urls.append(rec.url)
    return out


def write_feature_csv(data: VectorizedDataset, path, mask_path=None) -> None:
    """Export the 14 feature columns plus label; optionally the mask sidecar."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*FEATURE_NAMES, "label"])
        for fv, label in data.samples:
            writer.writerow([*fv.values, label])
    if mask_path is not None:
        with open(mask_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FEATURE_NAMES)
            for fv, _ in data.samples:
                writer.writerow([int(m) for m in fv.evidence_mask])


def feature_csv_text(data: VectorizedDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*FEATURE_NAMES, "label"])
    for fv, label in data.samples:
        writer.writerow([*fv.values, label])
    return buf.getvalue()


@dataclass(frozen=True)
class SplitPlan:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int
    ratio: float


def _shuffled_classes(labels: Sequence[int], rng: Lcg64) -> list[list[int]]:
    by_class = [[i for i, y in enumerate(labels) if y == c] for c in (0, 1)]
    for members in by_class:
        rng.shuffle(members)
    return by_class


def _labels_of(data) -> list[int]:
    if isinstance(data, VectorizedDataset):
        return [label for _, label in data.samples]
    return [int(y) for y in data]


def split(data, ratio: float = 0.8, seed: int = 42) -> SplitPlan:
    """Stratified, seeded train/test split.

    The train size is round(ratio * n); it is shared between the classes by
    largest remainder so each class ratio stays within one sample of the
    whole. Ties on the remainder go to class 0.
    """
    labels = _labels_of(data)
    n = len(labels)
    if n == 0:
        raise DegenerateSplit("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise DegenerateSplit(f"ratio must lie strictly between 0 and 1, got {ratio}")
    n_train = int(np.floor(ratio * n + 0.5))
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(f"ratio {ratio} on {n} samples leaves one side empty")

    by_class = _shuffled_classes(labels, Lcg64(seed))
    quotas = [len(members) * n_train / n for members in by_class]
    alloc = [int(np.floor(q)) for q in quotas]
    order = sorted(range(2), key=lambda c: -(quotas[c] - alloc[c]))
    for c in order[: n_train - sum(alloc)]:
        alloc[c] += 1

    train, test = [], []
    for members, k in zip(by_class, alloc):
        train.extend(members[:k])
        test.extend(members[k:])
    return SplitPlan(tuple(sorted(train)), tuple(sorted(test)), seed, ratio)


def kfold(data, k: int = 2, seed: int = 42) -> list[SplitPlan]:
    """Stratified k-fold partition.

    Each class is shuffled, the two shuffled lists are concatenated and
    dealt round-robin into folds, so fold sizes differ by at most one.
    """
    labels = _labels_of(data)
    n = len(labels)
    if k < 2:
        raise DegenerateSplit(f"k must be at least 2, got {k}")
    if n < k:
        raise DegenerateSplit(f"{n} samples cannot fill {k} folds")

    by_class = _shuffled_classes(labels, Lcg64(seed))
    folds = [[] for _ in range(k)]
    for pos, idx in enumerate(by_class[0] + by_class[1]):
        folds[pos % k].append(idx)

    plans = []
    for f in range(k):
        test = sorted(folds[f])
        train = sorted(i for g in range(k) if g != f for i in folds[g])
        plans.append(SplitPlan(tuple(train), tuple(test), seed, (k - 1) / k))
    return plans
