"""Prediction pools: ingestion, partitioning into groups, weights, cost matrices.

A pool holds per-instance model outputs (score vectors) plus an optional
hidden true label used by replay oracles. Nothing about the model itself or
the raw inputs is ever stored.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCORE_SUM_TOL = 1e-6
WEIGHT_SUM_TOL = 1e-9

PARTITION_KINDS = ("predicted-class", "score-bin", "class-and-bin", "attribute")


class IngestError(ValueError):
    """Raised when a prediction file fails validation; carries the line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class PredictionRecord:
    """One model prediction: a score vector, an optional true label, attributes.

    `scores` is renormalized to sum exactly to 1 (inputs must already be
    within SCORE_SUM_TOL of 1). The predicted class is the argmax with ties
    broken toward the lowest class index; the confidence is the max score.
    """

    id: str
    scores: np.ndarray
    label: int | None = None
    attributes: dict[str, str] = field(default_factory=dict)

    @property
    def predicted(self) -> int:
        return int(np.argmax(self.scores))

    @property
    def confidence(self) -> float:
        return float(self.scores[self.predicted])


def _validate_scores(raw, line=None) -> np.ndarray:
    scores = np.asarray(raw, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise IngestError("scores must be a non-empty vector", line)
    if np.any(scores < -SCORE_SUM_TOL) or np.any(scores > 1 + SCORE_SUM_TOL):
        raise IngestError("score entries must lie in [0, 1]", line)
    total = float(scores.sum())
    if not math.isclose(total, 1.0, abs_tol=SCORE_SUM_TOL):
        raise IngestError(f"scores sum to {total:.8f}, expected 1 within {SCORE_SUM_TOL}", line)
    return np.clip(scores, 0.0, 1.0) / total


def make_record(id, scores, label=None, attributes=None, num_classes=None, line=None) -> PredictionRecord:
    scores = _validate_scores(scores, line)
    if num_classes is not None and scores.size != num_classes:
        raise IngestError(f"score vector has length {scores.size}, expected {num_classes}", line)
    if label is not None:
        label = int(label)
        if not 0 <= label < scores.size:
            raise IngestError(f"label {label} out of range for {scores.size} classes", line)
    attrs = {str(k): str(v) for k, v in (attributes or {}).items()}
    return PredictionRecord(id=str(id), scores=scores, label=label, attributes=attrs)


@dataclass(frozen=True)
class Pool:
    """An immutable, ordered collection of prediction records with uniform K."""

    records: tuple[PredictionRecord, ...]
    num_classes: int

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def index_of(self, record_id: str) -> int:
        return self._id_index[record_id]

    def record(self, record_id: str) -> PredictionRecord:
        return self.records[self.index_of(record_id)]

    @property
    def _id_index(self) -> dict[str, int]:
        cache = getattr(self, "_id_index_cache", None)
        if cache is None:
            cache = {r.id: i for i, r in enumerate(self.records)}
            object.__setattr__(self, "_id_index_cache", cache)
        return cache

    @property
    def fully_labeled(self) -> bool:
        return all(r.label is not None for r in self.records)

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for r in self.records:
                row = {"id": r.id, "scores": [float(s) for s in r.scores]}
                if r.label is not None:
                    row["label"] = r.label
                if r.attributes:
                    row["attributes"] = r.attributes
                fh.write(json.dumps(row) + "\n")


def build_pool(records) -> Pool:
    records = tuple(records)
    if not records:
        raise IngestError("pool is empty")
    k = records[0].scores.size
    seen = set()
    for r in records:
        if r.scores.size != k:
            raise IngestError(f"record {r.id!r}: inconsistent number of classes ({r.scores.size} != {k})")
        if r.id in seen:
            raise IngestError(f"duplicate record id {r.id!r}")
        seen.add(r.id)
    return Pool(records=records, num_classes=k)


def ingest_predictions(path, format="jsonl") -> Pool:
    """Parse a predictions file (jsonl or csv) into a validated Pool.

    K is inferred from the first record and enforced on the rest. Errors
    name the offending line.
    """
    if format == "jsonl":
        records = list(_iter_jsonl(path))
    elif format == "csv":
        records = list(_iter_csv(path))
    else:
        raise ValueError(f"unknown format {format!r}")
    return build_pool(records)


def _iter_jsonl(path):
    num_classes = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"malformed JSON ({exc.msg})", line_no) from exc
            if not isinstance(row, dict) or "id" not in row or "scores" not in row:
                raise IngestError("row must be an object with 'id' and 'scores'", line_no)
            rec = make_record(
                row["id"], row["scores"], row.get("label"), row.get("attributes"),
                num_classes=num_classes, line=line_no,
            )
            num_classes = rec.scores.size
            yield rec


def _iter_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty CSV file") from None
        if not header or header[0] != "id":
            raise IngestError("CSV header must start with 'id'", 1)
        score_cols = [i for i, name in enumerate(header) if name.startswith("score_")]
        expected = [f"score_{j}" for j in range(len(score_cols))]
        if [header[i] for i in score_cols] != expected:
            raise IngestError("score columns must be score_0..score_{K-1} in order", 1)
        has_label = header[-1] == "label"
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"expected {len(header)} columns, got {len(row)}", line_no)
            try:
                scores = [float(row[i]) for i in score_cols]
            except ValueError as exc:
                raise IngestError(f"non-numeric score ({exc})", line_no) from exc
            label = None
            if has_label and row[-1] != "":
                try:
                    label = int(row[-1])
                except ValueError as exc:
                    raise IngestError(f"non-integer label {row[-1]!r}", line_no) from exc
            yield make_record(row[0], scores, label, None, num_classes=len(score_cols), line=line_no)


@dataclass(frozen=True)
class PartitionSpec:
    """How to carve the pool into disjoint groups (bandit arms)."""

    kind: str
    num_bins: int = 10
    attribute_name: str | None = None

    def __post_init__(self):
        if self.kind not in PARTITION_KINDS:
            raise PartitionError(f"unknown partition kind {self.kind!r}")
        if self.num_bins < 1:
            raise PartitionError("num_bins must be >= 1")
        if (self.kind == "attribute") != (self.attribute_name is not None):
            raise PartitionError("attribute_name is required iff kind='attribute'")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind in ("score-bin", "class-and-bin"):
            d["num_bins"] = self.num_bins
        if self.attribute_name is not None:
            d["attribute_name"] = self.attribute_name
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            num_bins=int(d.get("num_bins", 10)),
            attribute_name=d.get("attribute_name"),
        )


@dataclass(frozen=True)
class GroupIndex:
    """A disjoint, exhaustive partition of a pool with empirical group stats.

    Empty groups are retained (weight 0) so group indices stay stable across
    runs; their mean confidence is stored as the neutral value 0.5.
    """

    kind: str
    names: tuple[str, ...]
    group_of: dict[str, int]
    members: tuple[tuple[int, ...], ...]  # record positions in pool order
    weights: np.ndarray
    mean_confidence: np.ndarray

    @property
    def num_groups(self) -> int:
        return len(self.names)

    def member_ids(self, pool: Pool, g: int) -> list[str]:
        return [pool.records[i].id for i in self.members[g]]


def score_bin_of(confidence: float, num_bins: int) -> int:
    """Equal-width bin index for a confidence; the last bin is closed at 1.0."""
    return min(int(confidence * num_bins), num_bins - 1)


def assign_groups(pool: Pool, spec: PartitionSpec) -> GroupIndex:
    k, b = pool.num_classes, spec.num_bins
    if spec.kind == "predicted-class":
        names = [f"class:{j}" for j in range(k)]
        idx_of = lambda r: r.predicted
    elif spec.kind == "score-bin":
        names = [f"bin:{j}" for j in range(b)]
        idx_of = lambda r: score_bin_of(r.confidence, b)
    elif spec.kind == "class-and-bin":
        names = [f"class:{j}|bin:{i}" for j in range(k) for i in range(b)]
        idx_of = lambda r: r.predicted * b + score_bin_of(r.confidence, b)
    else:  # attribute
        attr = spec.attribute_name
        values = set()
        for r in pool:
            if attr not in r.attributes:
                raise PartitionError(f"record {r.id!r} is missing attribute {attr!r}")
            values.add(r.attributes[attr])
        ordered = sorted(values)
        value_idx = {v: i for i, v in enumerate(ordered)}
        names = [f"{attr}={v}" for v in ordered]
        idx_of = lambda r: value_idx[r.attributes[attr]]

    num_groups = len(names)
    members = [[] for _ in range(num_groups)]
    group_of = {}
    for pos, r in enumerate(pool):
        g = idx_of(r)
        members[g].append(pos)
        group_of[r.id] = g

    counts = np.array([len(m) for m in members], dtype=np.float64)
    weights = counts / len(pool)
    mean_conf = np.full(num_groups, 0.5)
    for g, mem in enumerate(members):
        if mem:
            mean_conf[g] = float(np.mean([pool.records[i].confidence for i in mem]))

    return GroupIndex(
        kind=spec.kind,
        names=tuple(names),
        group_of=group_of,
        members=tuple(tuple(m) for m in members),
        weights=weights,
        mean_confidence=mean_conf,
    )


def estimate_group_weights(index: GroupIndex) -> np.ndarray:
    """Empirical group frequencies p_g from the partition membership counts."""
    counts = np.array([len(m) for m in index.members], dtype=np.float64)
    total = counts.sum()
    if total == 0:
        raise ValueError("cannot estimate weights for an empty pool")
    weights = counts / total
    assert abs(weights.sum() - 1.0) < WEIGHT_SUM_TOL
    return weights


@dataclass(frozen=True)
class CostMatrix:
    """K x K non-negative costs; c[j, k] = cost of predicting k when truth is j."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"cost matrix must be square, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("cost matrix entries must be non-negative")
        object.__setattr__(self, "c", c)

    @property
    def num_classes(self) -> int:
        return self.c.shape[0]

    def column(self, k: int) -> np.ndarray:
        return self.c[:, k]

    @classmethod
    def zero_one(cls, num_classes: int) -> "CostMatrix":
        return cls(1.0 - np.eye(num_classes))


def load_cost_matrix(path) -> CostMatrix:
    """Read a headerless CSV of K rows x K non-negative numbers."""
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"cost matrix line {line_no}: non-numeric entry ({exc})") from exc
    if not rows:
        raise ValueError("cost matrix file is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or widths.pop() != len(rows):
        raise ValueError(f"cost matrix must be square, got {len(rows)} rows of widths {sorted(len(r) for r in rows)}")
    return CostMatrix(np.array(rows))
