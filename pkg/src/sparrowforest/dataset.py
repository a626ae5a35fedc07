"""Loading, cleaning, statistics and encoding for the VR-experience table.

The table has six columns: Age, Gender, VRHeadset, Duration, MotionSickness
and ImmersionLevel. ImmersionLevel is the binary target (1 = unable to
immerse, 2 = well immersed). All operations here are pure functions of their
inputs and never mutate a dataset in place.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EmptyFileError, RowError, SchemaError

COLUMN_NAMES = (
    "Age",
    "Gender",
    "VRHeadset",
    "Duration",
    "MotionSickness",
    "ImmersionLevel",
)

# Categorical codes are assigned alphabetically, 1-based.
GENDERS = ("Female", "Male", "Other")
HEADSETS = ("HTC Vive", "Oculus Rift", "PlayStation VR")
GENDER_CODES = {name: i + 1 for i, name in enumerate(GENDERS)}
HEADSET_CODES = {name: i + 1 for i, name in enumerate(HEADSETS)}

NUMERIC_COLUMNS = ("Age", "Duration", "MotionSickness")

N_FEATURES = 5  # age, gender code, headset code, duration, motion sickness


def _check_age(v: int) -> int:
    if v < 0:
        raise ValueError("age must be >= 0")
    return v


def _check_gender(v: str) -> str:
    if v not in GENDER_CODES:
        raise ValueError(f"unknown gender {v!r}")
    return v


def _check_headset(v: str) -> str:
    if v not in HEADSET_CODES:
        raise ValueError(f"unknown headset {v!r}")
    return v


def _check_duration(v: float) -> float:
    if not v > 0:
        raise ValueError("duration must be > 0")
    return v


def _check_motion_sickness(v: int) -> int:
    if not 1 <= v <= 10:
        raise ValueError("motion_sickness must be in [1, 10]")
    return v


def _check_immersion(v: int) -> int:
    if v not in (1, 2):
        raise ValueError("immersion must be 1 or 2")
    return v


def _parse_int(text: str) -> int:
    # Accept integral floats ("40.0") since CSV exports vary.
    try:
        return int(text)
    except ValueError:
        f = float(text)
        if f != int(f):
            raise ValueError(f"not an integer: {text!r}")
        return int(f)


@dataclass(frozen=True)
class Record:
    """One VR session row."""

    age: int
    gender: str
    headset: str
    duration: float
    motion_sickness: int
    immersion: int

    def __post_init__(self):
        _check_age(self.age)
        _check_gender(self.gender)
        _check_headset(self.headset)
        _check_duration(self.duration)
        _check_motion_sickness(self.motion_sickness)
        _check_immersion(self.immersion)

    def as_row(self) -> tuple:
        return (
            self.age,
            self.gender,
            self.headset,
            self.duration,
            self.motion_sickness,
            self.immersion,
        )


@dataclass
class Dataset:
    """An ordered collection of records; cleaning filters, never reorders."""

    records: list[Record] = field(default_factory=list)
    column_names: tuple[str, ...] = COLUMN_NAMES

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(frozen=True)
class ColumnStats:
    maximum: float
    minimum: float
    mean: float
    std_dev: float
    median: float
    variance: float


# (converter, range check) per canonical column
_FIELD_PARSERS = {
    "Age": (_parse_int, _check_age),
    "Gender": (str.strip, _check_gender),
    "VRHeadset": (str.strip, _check_headset),
    "Duration": (float, _check_duration),
    "MotionSickness": (_parse_int, _check_motion_sickness),
    "ImmersionLevel": (_parse_int, _check_immersion),
}


def load_csv(path) -> Dataset:
    """Parse a UTF-8 comma-separated file into a Dataset.

    Header names are matched case-insensitively; extra columns are ignored
    with a warning. Any missing or unparseable cell is a hard error (the
    table is expected to have no vacancies), reported with its 1-based data
    row number and column name.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFileError(f"{path}: file is empty") from None

        lowered = [h.strip().lower() for h in header]
        col_idx: dict[str, int] = {}
        for name in COLUMN_NAMES:
            try:
                col_idx[name] = lowered.index(name.lower())
            except ValueError:
                raise SchemaError(f"{path}: missing required column {name!r}") from None
        extras = [h for h in header if h.strip().lower() not in {n.lower() for n in COLUMN_NAMES}]
        if extras:
            warnings.warn(f"{path}: ignoring extra columns {extras}", stacklevel=2)

        records = []
        for row_no, cells in enumerate(reader, start=1):
            if not cells:
                continue  # blank line
            values = {}
            for name in COLUMN_NAMES:
                idx = col_idx[name]
                if idx >= len(cells) or cells[idx].strip() == "":
                    raise RowError(row_no, name, "missing value")
                convert, check = _FIELD_PARSERS[name]
                try:
                    values[name] = check(convert(cells[idx].strip()))
                except ValueError as exc:
                    raise RowError(row_no, name, str(exc)) from None
            records.append(
                Record(
                    age=values["Age"],
                    gender=values["Gender"],
                    headset=values["VRHeadset"],
                    duration=values["Duration"],
                    motion_sickness=values["MotionSickness"],
                    immersion=values["ImmersionLevel"],
                )
            )
    return Dataset(records)


def write_csv(d: Dataset, path) -> None:
    """Write a dataset back out with the canonical header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMN_NAMES)
        for r in d.records:
            writer.writerow(r.as_row())


def deduplicate(d: Dataset) -> Dataset:
    """Drop exact full-row duplicates, keeping the first occurrence."""
    seen = set()
    out = []
    for r in d.records:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return Dataset(out, d.column_names)


def _column_values(d: Dataset, name: str) -> np.ndarray:
    getter = {
        "Age": lambda r: float(r.age),
        "Gender": lambda r: float(GENDER_CODES[r.gender]),
        "VRHeadset": lambda r: float(HEADSET_CODES[r.headset]),
        "Duration": lambda r: r.duration,
        "MotionSickness": lambda r: float(r.motion_sickness),
        "ImmersionLevel": lambda r: float(r.immersion),
    }.get(name)
    if getter is None:
        raise DataError(f"unknown column {name!r}")
    return np.array([getter(r) for r in d.records], dtype=np.float64)


def remove_outliers_3sigma(d: Dataset, numeric_columns: Sequence[str] = NUMERIC_COLUMNS) -> Dataset:
    """Drop rows farther than three standard deviations from a column mean.

    Thresholds come from the statistics of the *input* dataset, in a single
    pass; the filter is not re-applied to its own output. Columns with zero
    standard deviation drop nothing.
    """
    if not d.records:
        return Dataset([], d.column_names)
    keep = np.ones(len(d.records), dtype=bool)
    for name in numeric_columns:
        values = _column_values(d, name)
        mu = float(np.mean(values))
        sigma = _sample_std(values)
        if sigma == 0.0:
            continue
        keep &= np.abs(values - mu) <= 3.0 * sigma
    return Dataset([r for r, k in zip(d.records, keep) if k], d.column_names)


def _sample_std(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def column_stats(values: Sequence[float]) -> ColumnStats:
    """Six summary statistics of one column (sample variance, n-1).

    Sums accumulate left to right over the input order; this is part of the
    contract so that independent re-computations agree bit-for-bit.
    """
    vals = [float(v) for v in values]
    n = len(vals)
    if n == 0:
        raise DataError("cannot summarize an empty column")
    total = 0.0
    for v in vals:
        total += v
    mean = total / n
    ss = 0.0
    for v in vals:
        ss += (v - mean) ** 2
    var = ss / (n - 1) if n > 1 else 0.0
    ordered = sorted(vals)
    mid = n // 2
    median = ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2.0
    return ColumnStats(
        maximum=ordered[-1],
        minimum=ordered[0],
        mean=mean,
        std_dev=math.sqrt(var),
        median=median,
        variance=var,
    )


def describe(d: Dataset) -> dict[str, ColumnStats]:
    """Summary statistics per column, with categoricals on their 1..3 codes."""
    if not d.records:
        raise DataError("cannot describe an empty dataset")
    return {name: column_stats(_column_values(d, name)) for name in COLUMN_NAMES}


def _sigfig(v: float, digits: int = 6) -> float:
    return float(f"{v:.{digits}g}")


def stats_to_json(stats: dict[str, ColumnStats]) -> str:
    """Serialize describe() output, numbers trimmed to 6 significant digits."""
    doc = {
        name: {
            "maximum": _sigfig(s.maximum),
            "minimum": _sigfig(s.minimum),
            "mean": _sigfig(s.mean),
            "std_dev": _sigfig(s.std_dev),
            "median": _sigfig(s.median),
            "variance": _sigfig(s.variance),
        }
        for name, s in stats.items()
    }
    return json.dumps(doc, indent=2)


def encode(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Dataset -> (feature matrix, label vector).

    Feature order: age, gender code, headset code, duration, motion sickness.
    Gender and headset map alphabetically onto 1..3.
    """
    n = len(d.records)
    X = np.empty((n, N_FEATURES), dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    for i, r in enumerate(d.records):
        X[i, 0] = r.age
        X[i, 1] = GENDER_CODES[r.gender]
        X[i, 2] = HEADSET_CODES[r.headset]
        X[i, 3] = r.duration
        X[i, 4] = r.motion_sickness
        y[i] = r.immersion
    return X, y


def _class_quotas(counts: dict[int, int], train_fraction: float) -> dict[int, int]:
    # Largest-remainder allocation: per-class floor of fraction*count, then
    # hand out the remaining slots by descending fractional part so that the
    # overall train size is round(fraction * n).
    total = int(math.floor(train_fraction * sum(counts.values()) + 0.5))
    quotas = {label: int(math.floor(train_fraction * c)) for label, c in counts.items()}
    remainder = total - sum(quotas.values())
    order = sorted(
        counts,
        key=lambda lab: (-(train_fraction * counts[lab] - quotas[lab]), -counts[lab], lab),
    )
    for lab in order[:remainder]:
        quotas[lab] += 1
    return quotas


def stratified_split_indices(
    labels: Sequence[int], train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class split of row indices into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must be in (0, 1)")
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2:
        raise DataError("need both classes present to stratify")
    if np.any(counts < 2):
        raise DataError("cannot stratify a class with fewer than 2 members")

    quotas = _class_quotas(
        {int(c): int(n) for c, n in zip(classes, counts)}, train_fraction
    )
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        q = quotas[int(c)]
        train.extend(idx[:q].tolist())
        test.extend(idx[q:].tolist())
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


def stratified_split(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split a dataset into train/test, preserving the class ratio.

    Same seed, same dataset -> identical partitions. The union of the two
    outputs is a permutation-free filtering of the input (original order is
    kept within each side).
    """
    labels = [r.immersion for r in d.records]
    train_idx, test_idx = stratified_split_indices(labels, train_fraction, seed)
    train = Dataset([d.records[i] for i in train_idx], d.column_names)
    test = Dataset([d.records[i] for i in test_idx], d.column_names)
    return train, test


def make_synthetic_dataset(n_rows: int, seed: int, label_noise: float = 0.1) -> Dataset:
    """Generate a synthetic table with the production schema.

    The clean concept is: well immersed (label 2) iff exactly one of
    duration > 30 and motion_sickness > 7 holds; labels are then flipped
    with probability `label_noise`.
    """
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n_rows):
        age = int(rng.integers(18, 61))
        gender = GENDERS[rng.integers(0, len(GENDERS))]
        headset = HEADSETS[rng.integers(0, len(HEADSETS))]
        duration = round(float(rng.uniform(5.0, 60.0)), 2)
        sickness = int(rng.integers(1, 11))
        label = 2 if (duration > 30.0) != (sickness > 7) else 1
        if rng.random() < label_noise:
            label = 3 - label
        records.append(Record(age, gender, headset, duration, sickness, label))
    return Dataset(records)
