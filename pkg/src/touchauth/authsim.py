"""Continuous-authentication session state machine."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

# (window of feature rows) -> (fused score, accepted)
Decider = Callable[[Sequence[np.ndarray]], "tuple[float, bool]"]


class Phase(Enum):
    CHALLENGE = "challenge"
    ENROLLING = "enrolling"
    AUTHENTICATING = "authenticating"


class Event(Enum):
    ENROLLING = "enrolling"
    ENROLLED = "enrolled"
    WARMUP = "warmup"
    ACCEPT = "accept"
    REJECT = "reject"
    LOCKOUT = "lockout"
    BLOCKED = "blocked"
    NO_DECISION = "no_decision"  # between strided decisions


@dataclass(frozen=True)
class AuthState:
    phase: Phase = Phase.ENROLLING
    n: int = 11
    stride: int = 1
    t_threshold: int = 1
    enrollment_target: int = 200
    convergence_eps: float | None = None
    consecutive_rejections: int = 0
    window: tuple = ()
    enrollment: tuple = ()
    seen: int = 0  # strokes observed since entering Authenticating

    def __post_init__(self):
        if self.n < 1 or self.stride < 1 or self.t_threshold < 1 or self.enrollment_target < 1:
            raise ValueError("n, stride, t_threshold and enrollment_target must be positive")


@dataclass(frozen=True)
class StepResult:
    event: Event
    score: float | None = None


def entry_authenticated(state: AuthState, enrolled: bool = True) -> AuthState:
    """The user passed the entry-point check (password/PIN)."""
    return replace(
        state,
        phase=Phase.AUTHENTICATING if enrolled else Phase.ENROLLING,
        consecutive_rejections=0,
        window=(),
        seen=0,
        enrollment=state.enrollment if not enrolled else (),
    )


def enrollment_converged(vectors: Sequence[np.ndarray], block: int = 50, eps: float = 0.05) -> bool:
    """Mean shift between the last two blocks, in units of the pooled per-feature std, below eps."""
    if len(vectors) < 2 * block:
        return False
    X = np.asarray(vectors[-2 * block:], dtype=np.float64)
    a, b = X[:block].mean(0), X[block:].mean(0)
    sd = X.std(0)
    sd = np.where(sd > 0, sd, 1.0)
    return float(np.max(np.abs(a - b) / sd)) < eps


def step(state: AuthState, stroke, decider: Decider | None) -> tuple[AuthState, StepResult]:
    if state.phase is Phase.CHALLENGE:
        return state, StepResult(Event.BLOCKED)

    if state.phase is Phase.ENROLLING:
        enrollment = state.enrollment + (stroke,)
        done = len(enrollment) >= state.enrollment_target or (
            state.convergence_eps is not None and enrollment_converged(enrollment, eps=state.convergence_eps)
        )
        if done:
            return (
                replace(state, phase=Phase.AUTHENTICATING, enrollment=enrollment, window=(), seen=0),
                StepResult(Event.ENROLLED),
            )
        return replace(state, enrollment=enrollment), StepResult(Event.ENROLLING)

    if decider is None:
        raise ValueError("authenticating requires a trained decider")
    window = (state.window + (stroke,))[-state.n:]
    seen = state.seen + 1
    if seen < state.n:
        return replace(state, window=window, seen=seen), StepResult(Event.WARMUP)
    if (seen - state.n) % state.stride:
        return replace(state, window=window, seen=seen), StepResult(Event.NO_DECISION)
    score, accepted = decider(window)
    if accepted:
        return replace(state, window=window, seen=seen, consecutive_rejections=0), StepResult(Event.ACCEPT, score)
    rejections = state.consecutive_rejections + 1
    if rejections >= state.t_threshold:
        locked = replace(state, phase=Phase.CHALLENGE, window=(), seen=0, consecutive_rejections=0)
        return locked, StepResult(Event.LOCKOUT, score)
    return replace(state, window=window, seen=seen, consecutive_rejections=rejections), StepResult(Event.REJECT, score)


def run(state: AuthState, strokes: Iterable, decider: Decider | None) -> tuple[AuthState, list[dict]]:
    """Feed a stroke stream through the machine and collect a transcript."""
    transcript = []
    for i, s in enumerate(strokes):
        phase = state.phase
        state, res = step(state, s, decider)
        transcript.append(
            {
                "stroke": i,
                "phase": phase.value,
                "event": res.event.value,
                "score": res.score,
                "consecutive_rejections": state.consecutive_rejections,
            }
        )
    return state, transcript


def transcript_jsonl(transcript: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in transcript)


def strokes_to_lockout(transcript: list[dict]) -> int | None:
    """1-based stroke count at which the first lockout fired."""
    for r in transcript:
        if r["event"] == Event.LOCKOUT.value:
            return r["stroke"] + 1
    return None


class ThresholdDecider:
    """Mean of per-stroke model scores over the window, accepted at or above a threshold.

    For kNN the mean neighbour fraction equals the pooled positive-vote ratio.
    """

    def __init__(self, model, threshold: float | None = None, columns: Sequence[int] | None = None):
        self.model = model
        self.threshold = model.default_threshold if threshold is None else threshold
        self.columns = None if columns is None else list(columns)

    def __call__(self, window):
        X = np.vstack(window)
        if self.columns is not None:
            X = X[:, self.columns]
        score = float(self.model.score(X).mean())
        return score, score >= self.threshold


def expected_relogin_interval(frr: float, median_inter_stroke_time: float) -> float:
    """Mean time until the legitimate user is sent back to the password: T_s / FRR."""
    if not 0 <= frr <= 1:
        raise ValueError("frr must lie in [0, 1]")
    if frr == 0:
        return math.inf
    return median_inter_stroke_time / frr
