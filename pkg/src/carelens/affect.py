"""Session affect state: facial-emotion frames, text sentiment, tone fusion.

Facial frames arrive as 7-class distributions every ~2 seconds. Frame
classification is argmax; window aggregation drops neutral frames and ranks
the rest by frequency x mean intensity x a negative-priority multiplier.
Text sentiment comes from a bundled valence lexicon with negation flipping.
Fusion is face-primary / text-secondary with an intensity hysteresis so
small same-emotion fluctuations never flip the tone.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .errors import EmptyWindow, InvalidDistribution

EMOTIONS = ("anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral")

# descending negative-arousal order; neutral never wins aggregation
PRIORITY_WEIGHTS = {
    "anger": 1.6,
    "fear": 1.5,
    "disgust": 1.4,
    "sadness": 1.3,
    "surprise": 1.1,
    "happiness": 1.0,
}
TIE_ORDER = ("anger", "fear", "disgust", "sadness", "surprise", "happiness", "neutral")

NEGATIVE_EMOTIONS = frozenset({"anger", "disgust", "fear", "sadness"})
POSITIVE_EMOTIONS = frozenset({"happiness", "surprise"})

TONE_EMPATHETIC = "empathetic_supportive"
TONE_UPLIFTING = "uplifting_affirmative"
TONE_NEUTRAL = "neutral_professional"

HYSTERESIS_THRESHOLD = 0.10
AGGREGATION_CAP_S = 120.0
SENTIMENT_DEAD_ZONE = 0.1
NEGATION_WINDOW = 3

NEGATION_TOKENS = frozenset(
    "not no never none cannot can't don't doesn't didn't isn't wasn't aren't "
    "won't wouldn't shouldn't couldn't hardly without".split()
)

_TOKEN_RE = re.compile(r"[a-z']+")


@dataclass(frozen=True)
class EmotionObservation:
    session_id: str
    timestamp: float
    distribution: dict[str, float]

    def validated(self) -> "EmotionObservation":
        unknown = set(self.distribution) - set(EMOTIONS)
        if unknown:
            raise InvalidDistribution(f"unknown emotions {sorted(unknown)}")
        values = [self.distribution.get(e, 0.0) for e in EMOTIONS]
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise InvalidDistribution("negative or non-finite proportion")
        total = sum(values)
        if abs(total - 1.0) > 1e-6:
            raise InvalidDistribution(f"proportions sum to {total}")
        return self


@dataclass(frozen=True)
class TextSentiment:
    label: str  # positive | negative | neutral
    score: float


@dataclass(frozen=True)
class AffectState:
    dominant_emotion: Optional[str]
    dominant_intensity: float
    tone: str
    source: str  # face | text | default
    previous: Optional[tuple[str, float]] = None

    def to_dict(self) -> dict:
        return {
            "dominant_emotion": self.dominant_emotion,
            "dominant_intensity": self.dominant_intensity,
            "tone": self.tone,
            "source": self.source,
        }


DEFAULT_AFFECT = AffectState(None, 0.0, TONE_NEUTRAL, "default")


def classify_frame(obs: EmotionObservation) -> tuple[str, float]:
    """Argmax emotion and its proportion; ties follow the fixed priority order."""
    obs.validated()
    best = max(
        EMOTIONS,
        key=lambda e: (obs.distribution.get(e, 0.0), -TIE_ORDER.index(e)),
    )
    return best, obs.distribution.get(best, 0.0)


def aggregate_window(
    frames: Sequence[tuple[str, float]],
) -> tuple[Optional[str], float]:
    """Dominant non-neutral emotion of a window, or (None, 0) if all neutral.

    Weight per emotion = frequency x mean intensity x priority multiplier,
    frequency measured among the non-neutral frames.
    """
    if not frames:
        raise EmptyWindow("no frames to aggregate")
    remaining = [(e, i) for e, i in frames if e != "neutral"]
    if not remaining:
        return None, 0.0
    total = len(remaining)
    stats: dict[str, list[float]] = {}
    for e, i in remaining:
        stats.setdefault(e, []).append(i)
    weights = {
        e: (len(vals) / total) * (sum(vals) / len(vals)) * PRIORITY_WEIGHTS[e]
        for e, vals in stats.items()
    }
    winner = max(weights, key=lambda e: (weights[e], -TIE_ORDER.index(e)))
    mean_intensity = sum(stats[winner]) / len(stats[winner])
    return winner, mean_intensity


def _load_lexicon() -> dict[str, float]:
    text = resources.files("carelens").joinpath("data/lexicon.txt").read_text("utf-8")
    lexicon = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, score = line.rsplit(",", 1)
        lexicon[word] = float(score)
    return lexicon


_LEXICON: Optional[dict[str, float]] = None


def bundled_lexicon() -> dict[str, float]:
    global _LEXICON
    if _LEXICON is None:
        _LEXICON = _load_lexicon()
    return _LEXICON


def analyze_text(
    text: str,
    lexicon: Optional[dict[str, float]] = None,
    dead_zone: float = SENTIMENT_DEAD_ZONE,
) -> TextSentiment:
    """Deterministic lexicon sentiment with negation flipping.

    score = (positive matches - negative matches) / max(1, matches), where a
    match's sign flips if an odd number of negation tokens sits within the
    preceding 3 tokens. |score| under the dead zone reads as neutral.
    """
    lexicon = lexicon if lexicon is not None else bundled_lexicon()
    tokens = _TOKEN_RE.findall(text.lower())
    positives = negatives = 0
    for i, tok in enumerate(tokens):
        valence = lexicon.get(tok)
        if valence is None or valence == 0.0:
            continue
        flips = sum(
            1
            for j in range(max(0, i - NEGATION_WINDOW), i)
            if tokens[j] in NEGATION_TOKENS
        )
        signed = -valence if flips % 2 else valence
        if signed > 0:
            positives += 1
        else:
            negatives += 1
    score = (positives - negatives) / max(1, positives + negatives)
    if abs(score) < dead_zone:
        return TextSentiment("neutral", score)
    return TextSentiment("positive" if score > 0 else "negative", score)


def _tone_for_emotion(emotion: str) -> str:
    if emotion in NEGATIVE_EMOTIONS:
        return TONE_EMPATHETIC
    if emotion in POSITIVE_EMOTIONS:
        return TONE_UPLIFTING
    return TONE_NEUTRAL


def fuse(
    face: tuple[Optional[str], float],
    text: TextSentiment,
    prev: Optional[AffectState] = None,
    hysteresis: float = HYSTERESIS_THRESHOLD,
) -> AffectState:
    """Face-primary, text-secondary fusion into the session tone state."""
    emotion, intensity = face
    if emotion is not None:
        tone = _tone_for_emotion(emotion)
        state = AffectState(emotion, intensity, tone, "face")
    elif text.label != "neutral":
        tone = TONE_EMPATHETIC if text.label == "negative" else TONE_UPLIFTING
        state = AffectState(None, abs(text.score), tone, "text")
    else:
        state = AffectState(None, 0.0, TONE_NEUTRAL, "default")

    if (
        prev is not None
        and prev.dominant_emotion is not None
        and state.dominant_emotion == prev.dominant_emotion
        and abs(state.dominant_intensity - prev.dominant_intensity) < hysteresis
    ):
        # relative-change rule: small same-emotion fluctuation keeps the tone
        state = AffectState(
            prev.dominant_emotion, state.dominant_intensity, prev.tone, state.source
        )

    previous = (
        (prev.dominant_emotion, prev.dominant_intensity)
        if prev is not None and prev.dominant_emotion is not None
        else None
    )
    return AffectState(
        state.dominant_emotion, state.dominant_intensity, state.tone, state.source, previous
    )


class FrameStream:
    """Per-session append-only emotion frame buffer.

    One producer appends while readers aggregate; list append publishes the
    frame atomically and collect() works on a snapshot.
    """

    def __init__(self, cap_s: float = AGGREGATION_CAP_S):
        self.cap_s = cap_s
        self._frames: dict[str, list[EmotionObservation]] = {}
        self._lock = threading.Lock()

    def append(self, obs: EmotionObservation) -> None:
        obs.validated()
        with self._lock:
            self._frames.setdefault(obs.session_id, []).append(obs)

    def collect(
        self, session_id: str, now: float, since: Optional[float] = None
    ) -> list[EmotionObservation]:
        """Frames between max(since, now - cap) and now, ordered by timestamp."""
        floor_ts = now - self.cap_s if since is None else max(since, now - self.cap_s)
        with self._lock:
            frames = list(self._frames.get(session_id, ()))
        return sorted(
            (f for f in frames if floor_ts <= f.timestamp <= now),
            key=lambda f: f.timestamp,
        )

    def prune(self, session_id: str, now: float) -> None:
        with self._lock:
            frames = self._frames.get(session_id)
            if frames:
                self._frames[session_id] = [
                    f for f in frames if f.timestamp >= now - self.cap_s
                ]
