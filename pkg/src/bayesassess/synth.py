"""Synthetic prediction pools with known per-class accuracy and a controllable
calibration offset; stands in for real model score files in tests and demos.
"""

from dataclasses import dataclass

import numpy as np

from .pool import Pool, PredictionRecord, build_pool


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int
    size: int
    accuracy_profile: tuple[float, ...]
    calibration_offset: float = 0.0
    seed: int = 0
    class_weights: tuple[float, ...] | None = None  # predicted-class frequencies

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.size < self.num_classes:
            raise ValueError("pool size must be >= number of classes")
        profile = tuple(float(a) for a in self.accuracy_profile)
        if len(profile) != self.num_classes:
            raise ValueError("accuracy_profile length must equal num_classes")
        if any(not 0.0 <= a <= 1.0 for a in profile):
            raise ValueError("accuracies must lie in [0, 1]")
        object.__setattr__(self, "accuracy_profile", profile)
        if self.class_weights is not None:
            w = np.asarray(self.class_weights, dtype=np.float64)
            if w.size != self.num_classes or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-6:
                raise ValueError("class_weights must be a length-K probability vector")
            object.__setattr__(self, "class_weights", tuple(float(v) for v in w))


def synth_pool(spec: SynthSpec) -> Pool:
    """Generate a fully labeled pool.

    Each record's predicted class k is drawn from class_weights (uniform by
    default); correctness is Bernoulli(accuracy_profile[k]); the confidence
    equals accuracy + calibration_offset clamped to a valid range, with the
    leftover mass spread evenly over the other classes. Wrong records get a
    uniformly random other class as the true label.
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.num_classes
    acc = np.asarray(spec.accuracy_profile)
    weights = np.asarray(spec.class_weights) if spec.class_weights is not None else None

    predicted = rng.choice(k, size=spec.size, p=weights)
    correct = rng.random(spec.size) < acc[predicted]
    # confidence must exceed 1/K so the argmax stays at the intended class
    conf = np.clip(acc[predicted] + spec.calibration_offset, 1.0 / k + 1e-6, 1.0 - 1e-9)
    wrong_shift = rng.integers(1, k, size=spec.size)  # offset to a different class

    width = len(str(spec.size - 1))
    records = []
    for i in range(spec.size):
        p = int(predicted[i])
        label = p if correct[i] else int((p + wrong_shift[i]) % k)
        scores = np.full(k, (1.0 - conf[i]) / (k - 1))
        scores[p] = conf[i]
        records.append(PredictionRecord(
            id=f"s{i:0{width}d}", scores=scores / scores.sum(), label=label))
    return build_pool(records)


def linspace_profile(low: float, high: float, num_classes: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(low, high, num_classes))
