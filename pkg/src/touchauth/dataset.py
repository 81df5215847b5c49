"""Columnar feature tables and their CSV form."""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .features import FEATURE_NAMES, Direction, FeatureVector

META_COLUMNS = ("user_id", "doc_id", "phone_id", "direction_class")
SESSION_COLUMNS = ("user_id", "doc_id", "week")


@dataclass
class FeatureTable:
    """Feature matrix in stroke order plus one metadata entry per row.

    Row order within a (user_id, doc_id) session is the temporal stroke order.
    """

    X: np.ndarray
    user: np.ndarray
    doc: np.ndarray
    phone: np.ndarray
    direction: np.ndarray  # Direction values as ints
    week: np.ndarray

    def __post_init__(self):
        n = self.X.shape[0]
        for a in (self.user, self.doc, self.phone, self.direction, self.week):
            if a.shape[0] != n:
                raise ValueError("metadata length differs from the feature matrix")

    def __len__(self):
        return self.X.shape[0]

    @classmethod
    def empty(cls) -> "FeatureTable":
        return cls(
            np.empty((0, len(FEATURE_NAMES))),
            np.empty(0, dtype=object),
            np.empty(0, dtype=object),
            np.empty(0, dtype=object),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
        )

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "FeatureTable":
        if not vectors:
            return cls.empty()
        return cls(
            np.vstack([v.values for v in vectors]),
            np.array([v.user_id for v in vectors], dtype=object),
            np.array([v.doc_id for v in vectors], dtype=object),
            np.array([v.phone_id for v in vectors], dtype=object),
            np.array([v.direction_class.value for v in vectors], dtype=np.int64),
            np.array([v.week for v in vectors], dtype=np.int64),
        )

    def subset(self, mask) -> "FeatureTable":
        return FeatureTable(
            self.X[mask], self.user[mask], self.doc[mask], self.phone[mask], self.direction[mask], self.week[mask]
        )

    def users(self) -> list[str]:
        return sorted(set(self.user.tolist()))

    def complete_rows(self) -> np.ndarray:
        return ~np.isnan(self.X).any(axis=1)

    def axis_mask(self, axis: str) -> np.ndarray:
        if axis == "vertical":
            return np.isin(self.direction, [Direction.UP.value, Direction.DOWN.value])
        if axis == "horizontal":
            return np.isin(self.direction, [Direction.LEFT.value, Direction.RIGHT.value])
        raise ValueError(f"unknown direction class {axis!r}")

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        for col in (self.user, self.doc, self.phone):
            h.update("\x1f".join(map(str, col)).encode())
        h.update(self.direction.astype(np.int64).tobytes())
        h.update(self.week.astype(np.int64).tobytes())
        return h.hexdigest()

    def with_weeks(self, weeks: Mapping[tuple[str, str], int]) -> "FeatureTable":
        w = np.array([weeks.get((u, d), 1) for u, d in zip(self.user, self.doc)], dtype=np.int64)
        return FeatureTable(self.X, self.user, self.doc, self.phone, self.direction, w)


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def write_features_csv(table: FeatureTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(FEATURE_NAMES) + list(META_COLUMNS))
    for i in range(len(table)):
        w.writerow(
            [_fmt(v) for v in table.X[i]]
            + [table.user[i], table.doc[i], table.phone[i], Direction(int(table.direction[i])).name.lower()]
        )
    return buf.getvalue()


def read_features_csv(text: str, weeks: Mapping[tuple[str, str], int] | None = None) -> FeatureTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = list(FEATURE_NAMES) + list(META_COLUMNS)
    if header != expected:
        raise ValueError("feature CSV header does not match the canonical feature layout")
    rows = [r for r in reader if r]
    if not rows:
        return FeatureTable.empty()
    nf = len(FEATURE_NAMES)
    X = np.array([[float(c) if c != "" else np.nan for c in r[:nf]] for r in rows], dtype=np.float64)
    user = np.array([r[nf] for r in rows], dtype=object)
    doc = np.array([r[nf + 1] for r in rows], dtype=object)
    phone = np.array([r[nf + 2] for r in rows], dtype=object)
    direction = np.array([Direction[r[nf + 3].upper()].value for r in rows], dtype=np.int64)
    table = FeatureTable(X, user, doc, phone, direction, np.ones(len(rows), dtype=np.int64))
    return table.with_weeks(weeks) if weeks else table


def write_sessions_csv(table: FeatureTable) -> str:
    seen = {}
    for u, d, wk in zip(table.user, table.doc, table.week):
        seen.setdefault((u, d), int(wk))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SESSION_COLUMNS)
    for (u, d), wk in seen.items():
        w.writerow([u, d, wk])
    return buf.getvalue()


def read_sessions_csv(text: str) -> dict[tuple[str, str], int]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SESSION_COLUMNS:
        raise ValueError(f"session manifest header must be {','.join(SESSION_COLUMNS)}")
    return {(r[0], r[1]): int(r[2]) for r in reader if r}


def sessions_in_order(table: FeatureTable, rows: Iterable[int]) -> list[np.ndarray]:
    """Group row indices by (user, doc) keeping first-appearance order."""
    groups: dict[tuple[str, str], list[int]] = {}
    for i in rows:
        groups.setdefault((table.user[i], table.doc[i]), []).append(int(i))
    return [np.array(v, dtype=np.int64) for v in groups.values()]
