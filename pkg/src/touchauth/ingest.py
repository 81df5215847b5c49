"""Raw touch-log parsing, stroke segmentation, click filtering, normalization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

LOG_COLUMNS = (
    "phone_id",
    "user_id",
    "doc_id",
    "time_ms",
    "action",
    "phone_orientation",
    "x",
    "y",
    "pressure",
    "area",
    "finger_orientation",
)
SCREEN_COLUMNS = ("phone_id", "width_px", "height_px")

DEFAULT_MIN_DISPLACEMENT = 0.02
# sample gaps above this are kept but reported
GAP_WARN_MS = 1000.0


class Action(Enum):
    DOWN = 0
    UP = 1
    MOVE = 2
    MULTITOUCH = 3


class PhoneOrientation(Enum):
    PORTRAIT = 0
    LANDSCAPE = 1


class LogFormatError(ValueError):
    """Fatal problem with a touch log or screen-spec file."""


@dataclass(frozen=True)
class TouchEvent:
    phone_id: str
    user_id: str
    doc_id: str
    t: float
    action: Action
    phone_orientation: PhoneOrientation
    x: float
    y: float
    pressure: float
    area: float
    finger_orientation: float


@dataclass(frozen=True)
class ScreenSpec:
    phone_id: str
    width_px: float
    height_px: float

    def __post_init__(self):
        if not (self.width_px > 0 and self.height_px > 0):
            raise ValueError(f"screen {self.phone_id!r} needs positive width and height")


@dataclass(frozen=True)
class ParseDiagnostic:
    row: int | None
    reason: str
    user_id: str | None = None
    doc_id: str | None = None

    def to_json(self) -> str:
        return json.dumps(
            {"row": self.row, "reason": self.reason, "user_id": self.user_id, "doc_id": self.doc_id},
            sort_keys=True,
        )


@dataclass(frozen=True)
class Stroke:
    samples: tuple[TouchEvent, ...]
    prev_stroke_end_t: float | None = None

    def __post_init__(self):
        s = self.samples
        if len(s) < 2:
            raise ValueError("a stroke needs at least two samples")
        if s[0].action is not Action.DOWN or s[-1].action is not Action.UP:
            raise ValueError("a stroke must start with down and end with up")
        if any(e.action is not Action.MOVE for e in s[1:-1]):
            raise ValueError("interior stroke samples must be moves")
        first = s[0]
        for e in s[1:]:
            if (e.user_id, e.doc_id, e.phone_id) != (first.user_id, first.doc_id, first.phone_id):
                raise ValueError("stroke samples come from different sessions")
        t = self.t
        if np.any(np.diff(t) < 0):
            raise ValueError("stroke timestamps decrease")

    @property
    def user_id(self) -> str:
        return self.samples[0].user_id

    @property
    def doc_id(self) -> str:
        return self.samples[0].doc_id

    @property
    def phone_id(self) -> str:
        return self.samples[0].phone_id

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def xy(self) -> np.ndarray:
        return np.array([(e.x, e.y) for e in self.samples], dtype=np.float64)

    @property
    def t(self) -> np.ndarray:
        return np.array([e.t for e in self.samples], dtype=np.float64)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _as_text(raw) -> str:
    if isinstance(raw, (bytes, bytearray)):
        return raw.decode("utf-8-sig")
    return raw


def parse_screen_specs(raw) -> dict[str, ScreenSpec]:
    reader = csv.reader(io.StringIO(_as_text(raw)))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SCREEN_COLUMNS:
        raise LogFormatError(f"screen spec header must be {','.join(SCREEN_COLUMNS)}")
    specs = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            spec = ScreenSpec(row[0].strip(), float(row[1]), float(row[2]))
        except (IndexError, ValueError) as exc:
            raise LogFormatError(f"screen spec line {lineno}: {exc}") from None
        specs[spec.phone_id] = spec
    return specs


def _parse_row(row: Sequence[str]) -> TouchEvent:
    if len(row) != len(LOG_COLUMNS):
        raise ValueError(f"expected {len(LOG_COLUMNS)} columns, got {len(row)}")
    phone, user, doc = (c.strip() for c in row[:3])
    if not phone or not user or not doc:
        raise ValueError("empty identifier")
    names = LOG_COLUMNS[3:]
    vals = {}
    for name, cell in zip(names, row[3:]):
        try:
            v = float(cell)
        except ValueError:
            raise ValueError(f"non-numeric {name}: {cell!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"non-finite {name}")
        vals[name] = v
    if vals["time_ms"] < 0:
        raise ValueError("negative time_ms")
    try:
        action = Action(int(vals["action"]))
        if action.value != vals["action"]:
            raise ValueError
    except ValueError:
        raise ValueError(f"unknown action code {row[4]!r}") from None
    try:
        orient = PhoneOrientation(int(vals["phone_orientation"]))
        if orient.value != vals["phone_orientation"]:
            raise ValueError
    except ValueError:
        raise ValueError(f"unknown phone_orientation {row[5]!r}") from None
    return TouchEvent(
        phone_id=phone,
        user_id=user,
        doc_id=doc,
        t=vals["time_ms"],
        action=action,
        phone_orientation=orient,
        x=vals["x"],
        y=vals["y"],
        pressure=vals["pressure"],
        area=vals["area"],
        finger_orientation=vals["finger_orientation"],
    )


def parse_log(
    raw, screen_specs: Mapping[str, ScreenSpec] | None = None
) -> tuple[list[TouchEvent], list[ParseDiagnostic]]:
    """Parse CSV touch-log text into events sorted by (user_id, doc_id, t).

    Malformed rows are skipped and reported. When ``screen_specs`` is given,
    coordinates are bounds-checked and an unknown phone is fatal.
    """
    text = _as_text(raw)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise LogFormatError("empty log: header row missing") from None
    except csv.Error as exc:
        raise LogFormatError(f"unreadable header: {exc}") from None
    if tuple(h.strip() for h in header) != LOG_COLUMNS:
        raise LogFormatError(f"log header must be {','.join(LOG_COLUMNS)}")

    events: list[TouchEvent] = []
    diags: list[ParseDiagnostic] = []
    rownum = 1
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            rownum += 1
            diags.append(ParseDiagnostic(rownum, f"csv error: {exc}"))
            continue
        rownum += 1
        if not row or all(not c.strip() for c in row):
            continue
        try:
            ev = _parse_row(row)
        except ValueError as exc:
            diags.append(ParseDiagnostic(rownum, str(exc)))
            continue
        if screen_specs is not None:
            spec = screen_specs.get(ev.phone_id)
            if spec is None:
                raise LogFormatError(f"row {rownum}: no screen spec for phone {ev.phone_id!r}")
            if not (0 <= ev.x <= spec.width_px and 0 <= ev.y <= spec.height_px):
                diags.append(
                    ParseDiagnostic(rownum, f"position ({ev.x}, {ev.y}) outside screen", ev.user_id, ev.doc_id)
                )
                continue
        events.append(ev)
    events.sort(key=lambda e: (e.user_id, e.doc_id, e.t))
    return events, diags


def group_sessions(events: Iterable[TouchEvent]) -> dict[tuple[str, str], list[TouchEvent]]:
    """Split sorted events by (user_id, doc_id), keeping order."""
    out: dict[tuple[str, str], list[TouchEvent]] = {}
    for e in events:
        out.setdefault((e.user_id, e.doc_id), []).append(e)
    return out


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------


def segment_strokes(events: Sequence[TouchEvent]) -> tuple[list[Stroke], list[ParseDiagnostic]]:
    """Cut one session's events into down...up strokes.

    A down inside an open stroke discards the open stroke; a multitouch event
    aborts it. Orphan move/up events are dropped. Every discard is reported.
    """
    strokes: list[Stroke] = []
    diags: list[ParseDiagnostic] = []
    cur: list[TouchEvent] | None = None
    last_up: float | None = None

    def note(reason, e):
        diags.append(ParseDiagnostic(None, reason, e.user_id, e.doc_id))

    for e in events:
        if e.action is Action.DOWN:
            if cur is not None:
                note(f"stroke opened at t={cur[0].t} discarded: new down at t={e.t}", e)
            cur = [e]
        elif e.action is Action.MULTITOUCH:
            if cur is not None:
                note(f"stroke opened at t={cur[0].t} aborted by multitouch at t={e.t}", e)
                cur = None
            else:
                note(f"multitouch event at t={e.t} outside a stroke dropped", e)
        elif cur is None:
            note(f"{e.action.name.lower()} event at t={e.t} with no open stroke dropped", e)
        elif e.action is Action.MOVE:
            cur.append(e)
        else:
            cur.append(e)
            for a, b in zip(cur, cur[1:]):
                if b.t - a.t > GAP_WARN_MS:
                    note(f"sample gap of {b.t - a.t:g} ms inside stroke at t={a.t}", e)
                    break
            strokes.append(Stroke(tuple(cur), prev_stroke_end_t=last_up))
            last_up = e.t
            cur = None
    if cur is not None:
        note(f"stroke opened at t={cur[0].t} never closed", cur[0])
    return strokes, diags


def flatten(strokes: Iterable[Stroke]) -> list[TouchEvent]:
    return [e for s in strokes for e in s.samples]


# ---------------------------------------------------------------------------
# normalization and click filtering
# ---------------------------------------------------------------------------


def normalize(stroke: Stroke, screen: ScreenSpec) -> Stroke:
    """Map pixel coordinates to screen fractions in [0, 1]."""
    if screen.phone_id != stroke.phone_id:
        raise ValueError(f"screen spec for {screen.phone_id!r} applied to phone {stroke.phone_id!r}")
    samples = tuple(
        replace(e, x=e.x / screen.width_px, y=e.y / screen.height_px) for e in stroke.samples
    )
    return Stroke(samples, stroke.prev_stroke_end_t)


def displacement_frac(stroke: Stroke) -> float:
    """End-to-end displacement as a fraction of the (unit-square) screen diagonal."""
    a, b = stroke.samples[0], stroke.samples[-1]
    return math.hypot(b.x - a.x, b.y - a.y) / math.sqrt(2.0)


def filter_clicks(strokes: Iterable[Stroke], min_displacement_frac: float = DEFAULT_MIN_DISPLACEMENT) -> list[Stroke]:
    """Drop click-like strokes; ``prev_stroke_end_t`` is left untouched."""
    return [s for s in strokes if displacement_frac(s) >= min_displacement_frac]


def load_strokes(
    raw_log,
    screen_specs: Mapping[str, ScreenSpec],
    min_displacement_frac: float = DEFAULT_MIN_DISPLACEMENT,
) -> tuple[list[Stroke], list[ParseDiagnostic]]:
    """parse -> segment -> normalize -> filter, session by session."""
    events, diags = parse_log(raw_log, screen_specs)
    out: list[Stroke] = []
    for _, evs in group_sessions(events).items():
        strokes, d = segment_strokes(evs)
        diags.extend(d)
        strokes = [normalize(s, screen_specs[s.phone_id]) for s in strokes]
        out.extend(filter_clicks(strokes, min_displacement_frac))
    return out, diags


def write_log(events: Iterable[TouchEvent]) -> str:
    """Serialize events back to the canonical CSV layout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for e in events:
        w.writerow(
            [
                e.phone_id,
                e.user_id,
                e.doc_id,
                repr(float(e.t)),
                e.action.value,
                e.phone_orientation.value,
                repr(float(e.x)),
                repr(float(e.y)),
                repr(float(e.pressure)),
                repr(float(e.area)),
                repr(float(e.finger_orientation)),
            ]
        )
    return buf.getvalue()
