"""Per-output-channel decoupling weights.

Each channel's activations are binarized at an adaptive threshold and scored
by mutual information against target/neutral labels; the normalized scores
``alpha`` weight how strongly each channel participates in an edit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .matkernel import as_matrix

__all__ = [
    "DecouplerAlpha",
    "JointCounts",
    "build_decoupler",
    "channel_mi",
    "channel_thresholds",
]


@dataclass(frozen=True)
class JointCounts:
    """2x2 contingency counts ``n_zy`` of (activation state, label) pairs."""

    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self):
        if min(self.n00, self.n01, self.n10, self.n11) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11


def channel_mi(counts: JointCounts, base: float | None = None) -> float:
    """Mutual information of a 2x2 count table, in nats by default.

    Cells with zero joint probability contribute nothing. ``base`` switches
    the logarithm base (the normalized weights are base-invariant, which
    tests exploit).
    """
    k = counts.total
    if k <= 0:
        raise ValueError("total count must be positive")
    if base is None:
        log = math.log
    else:
        log = lambda x: math.log(x, base)  # noqa: E731
    n = ((counts.n00, counts.n01), (counts.n10, counts.n11))
    pz = ((counts.n00 + counts.n01) / k, (counts.n10 + counts.n11) / k)
    py = ((counts.n00 + counts.n10) / k, (counts.n01 + counts.n11) / k)
    mi = 0.0
    for z in (0, 1):
        for y in (0, 1):
            pzy = n[z][y] / k
            if pzy > 0.0:
                mi += pzy * log(pzy / (pz[z] * py[y]))
    return max(mi, 0.0)


def _validate_samples(w, features, labels):
    w_ = as_matrix(w, "w")
    f = as_matrix(features, "features")
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != f.shape[0]:
        raise ValueError("labels must be one entry per feature row")
    if not np.equal(np.mod(y, 1), 0).all() or (y < 0).any():
        raise ValueError("labels must be nonnegative integers (0 = neutral)")
    y = y.astype(np.int64)
    if f.shape[1] != w_.shape[1]:
        raise ValueError(
            f"feature length {f.shape[1]} does not match weight input size {w_.shape[1]}"
        )
    if f.shape[0] < 2:
        raise ValueError("need at least two activation samples")
    if not (y == 0).any() or not (y > 0).any():
        raise ValueError("samples must include at least one neutral and one target input")
    return w_, f, y


def channel_thresholds(w, features, labels) -> np.ndarray:
    """Per-channel median activation over the pooled target + neutral samples."""
    w_, f, _ = _validate_samples(w, features, labels)
    return np.median(f @ w_.T, axis=0)


@dataclass(frozen=True)
class DecouplerAlpha:
    """Channel weights ``alpha`` in [0, 1] with their underlying MI scores.

    ``mi_raw`` is the per-channel maximum over concepts of ``per_concept_mi``;
    ``degenerate`` flags the all-zero-MI case, where ``alpha`` is identically
    zero instead of normalized.
    """

    alpha: np.ndarray
    mi_raw: np.ndarray
    per_concept_mi: np.ndarray
    concept_labels: tuple[int, ...]
    degenerate: bool


def build_decoupler(w, features, labels, base: float | None = None) -> DecouplerAlpha:
    """Score every output channel of ``w`` against the labeled samples.

    Activations are binarized per channel at the pooled median (ties at the
    threshold count as inactive). For each concept label the 2x2 table is
    built from that concept's samples (y=1) against the neutral samples
    (y=0); per-channel MI is the maximum over concepts and ``alpha`` is that
    maximum normalized by its largest value.
    """
    w_, f, y = _validate_samples(w, features, labels)
    acts = f @ w_.T
    tau = channel_thresholds(w_, f, y)
    z = acts > tau  # strict comparison: threshold ties are state 0
    d_out = w_.shape[0]

    concepts = tuple(int(k) for k in np.unique(y[y > 0]))
    neutral = y == 0
    per = np.zeros((d_out, len(concepts)))
    for j, k in enumerate(concepts):
        mask = neutral | (y == k)
        zk = z[mask]
        yk = y[mask] > 0
        n11 = (zk & yk[:, None]).sum(axis=0)
        n10 = (zk & ~yk[:, None]).sum(axis=0)
        n01 = (~zk & yk[:, None]).sum(axis=0)
        n00 = (~zk & ~yk[:, None]).sum(axis=0)
        for i in range(d_out):
            per[i, j] = channel_mi(
                JointCounts(int(n00[i]), int(n01[i]), int(n10[i]), int(n11[i])), base=base
            )

    mi = per.max(axis=1)
    mi_max = float(mi.max())
    if mi_max <= 0.0:
        return DecouplerAlpha(np.zeros(d_out), mi, per, concepts, True)
    return DecouplerAlpha(mi / mi_max, mi, per, concepts, False)
