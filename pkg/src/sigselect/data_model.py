"""Dataset representation and the SGVF embedding interchange format.

Binary layout (all integers little-endian):

    magic   4 bytes  b"SGVF"
    version u16      currently 1
    n       u32      number of rows
    p       u32      number of features
    c       u32      number of classes
    class table, c records of {name_len u16, name UTF-8 bytes}
    labels  u32[n]
    features f32[n*p], row-major

The binary format is canonical; a CSV reader/writer (header row
``label,f0..f{p-1}``) exists for debugging only and does not preserve
provenance.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, TruncationError

MAGIC = b"SGVF"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sHIII")


@dataclass(frozen=True, eq=False)
class EmbeddingDataset:
    """An n x p feature matrix with dense integer class labels.

    Labels are class ids in ``[0, c)``; ``class_names[label]`` recovers the
    original signer name. Instances are immutable after construction and safe
    to share across threads (the arrays are never written to).
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        self._check_invariants()

    def _check_invariants(self) -> None:
        if self.features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n, p = self.features.shape
        c = len(self.class_names)
        if n < 1 or p < 1:
            raise DataError(f"need at least one row and one feature, got {n}x{p}")
        if c < 2:
            raise DataError(f"need at least 2 classes, got {c}")
        if self.labels.shape != (n,):
            raise DataError("labels must be a length-n vector")
        if self.labels.min() < 0 or self.labels.max() >= c:
            raise DataError("labels must be class ids in [0, c)")
        counts = np.bincount(self.labels, minlength=c)
        if (counts == 0).any():
            empty = np.flatnonzero(counts == 0)
            raise DataError(f"classes without rows: {empty.tolist()}")
        if not np.isfinite(self.features).all():
            bad = int(np.flatnonzero(~np.isfinite(self.features))[0])
            raise DataError(f"non-finite feature value at flat index {bad}")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.provenance == other.provenance
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )


@dataclass(frozen=True)
class FeatureMask:
    """A sorted set of selected column indices."""

    selected: np.ndarray
    n_features: int

    def __post_init__(self) -> None:
        sel = np.ascontiguousarray(self.selected, dtype=np.int64)
        object.__setattr__(self, "selected", sel)
        if sel.ndim != 1 or sel.size == 0:
            raise ValueError("mask must contain at least one index")
        if (np.diff(sel) <= 0).any():
            raise ValueError("mask indices must be strictly increasing")
        if sel[0] < 0 or sel[-1] >= self.n_features:
            raise ValueError(f"mask indices must lie in [0, {self.n_features})")

    @property
    def k(self) -> int:
        return int(self.selected.size)

    def apply(self, features: np.ndarray) -> np.ndarray:
        return features[:, self.selected]


@dataclass
class ValidationReport:
    """Summary of dataset health checks; produced by validate_dataset."""

    n_rows: int
    n_features: int
    n_classes: int
    class_counts: list[int]
    min_value: float
    max_value: float
    n_negative: int
    chi2_eligible: bool
    balanced: bool
    unbalanced_classes: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def validate_dataset(dataset: EmbeddingDataset) -> ValidationReport:
    """Report per-class counts, value range and Chi2 eligibility.

    Never raises: the dataset already satisfies the hard invariants, this
    reports the soft ones (balance, non-negativity).
    """
    counts = dataset.class_counts()
    values, modal_counts = np.unique(counts, return_counts=True)
    modal = int(values[np.argmax(modal_counts)])
    offending = np.flatnonzero(counts != modal)
    n_negative = int((dataset.features < 0).sum())
    return ValidationReport(
        n_rows=dataset.n_rows,
        n_features=dataset.n_features,
        n_classes=dataset.n_classes,
        class_counts=counts.tolist(),
        min_value=float(dataset.features.min()),
        max_value=float(dataset.features.max()),
        n_negative=n_negative,
        chi2_eligible=n_negative == 0,
        balanced=offending.size == 0,
        unbalanced_classes=offending.tolist(),
    )


def write_embedding_file(dataset: EmbeddingDataset, path: str | Path) -> None:
    """Write `dataset` to `path` in the SGVF binary format.

    Output bytes are a pure function of the dataset, so two writes of equal
    datasets are byte-identical.
    """
    dataset._check_invariants()
    n, p = dataset.features.shape
    c = dataset.n_classes
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, n, p, c)]
    for name in dataset.class_names:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise DataError(f"class name too long ({len(raw)} bytes)")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(dataset.labels.astype("<u4").tobytes())
    parts.append(np.ascontiguousarray(dataset.features, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_embedding_file(path: str | Path) -> EmbeddingDataset:
    """Read an SGVF file; exact inverse of write_embedding_file.

    Raises FormatError for bad magic/version/structure, TruncationError when
    declared sizes exceed the payload, DataError for invariant violations.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncationError(f"file too short for header ({len(data)} bytes)")
    magic, version, n, p, c = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    offset = _HEADER.size

    names = []
    for _ in range(c):
        if offset + 2 > len(data):
            raise TruncationError("class table cut short")
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + name_len > len(data):
            raise TruncationError("class name cut short")
        try:
            names.append(data[offset : offset + name_len].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"class name is not valid UTF-8: {exc}") from exc
        offset += name_len

    need = 4 * n
    if offset + need > len(data):
        raise TruncationError(f"labels need {need} bytes, payload has {len(data) - offset}")
    labels = np.frombuffer(data, dtype="<u4", count=n, offset=offset).astype(np.int64)
    offset += need

    need = 4 * n * p
    if offset + need > len(data):
        raise TruncationError(f"features need {need} bytes, payload has {len(data) - offset}")
    feats = np.frombuffer(data, dtype="<f4", count=n * p, offset=offset)
    offset += need
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after features")

    return EmbeddingDataset(
        features=feats.reshape(n, p),
        labels=labels,
        class_names=tuple(names),
        provenance=str(path),
    )


def write_embedding_csv(dataset: EmbeddingDataset, path: str | Path) -> None:
    """Debug CSV dump: header ``label,f0..f{p-1}``, label column holds class names."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"f{j}" for j in range(dataset.n_features)])
        for i in range(dataset.n_rows):
            row = [dataset.class_names[dataset.labels[i]]]
            row.extend(repr(float(v)) for v in dataset.features[i])
            writer.writerow(row)


def read_embedding_csv(path: str | Path) -> EmbeddingDataset:
    """Read the debug CSV format; class ids are assigned by sorted name order."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV file") from None
        if not header or header[0] != "label":
            raise FormatError("CSV header must start with 'label'")
        p = len(header) - 1
        names_col: list[str] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != p + 1:
                raise FormatError(f"line {line_no}: expected {p + 1} columns, got {len(row)}")
            names_col.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"line {line_no}: {exc}") from exc
    if not rows:
        raise DataError("CSV contains no data rows")
    class_names = tuple(sorted(set(names_col)))
    index = {name: i for i, name in enumerate(class_names)}
    labels = np.array([index[name] for name in names_col], dtype=np.int64)
    feats = np.array(rows, dtype=np.float32)
    return EmbeddingDataset(feats, labels, class_names, provenance=f"csv:{path}")
