import pytest
from hypothesis import given
from hypothesis import strategies as st

from carelens.affect import (
    EMOTIONS,
    HYSTERESIS_THRESHOLD,
    TONE_EMPATHETIC,
    TONE_NEUTRAL,
    TONE_UPLIFTING,
    AffectState,
    EmotionObservation,
    FrameStream,
    TextSentiment,
    aggregate_window,
    analyze_text,
    bundled_lexicon,
    classify_frame,
    fuse,
)
from carelens.errors import EmptyWindow, InvalidDistribution


def dist(**kwargs):
    d = {e: 0.0 for e in EMOTIONS}
    d.update(kwargs)
    return d


def obs(**kwargs):
    return EmotionObservation("s1", 0.0, dist(**kwargs))


class TestClassifyFrame:
    def test_argmax(self):
        rest = 0.2 / 6
        emotion, intensity = classify_frame(
            obs(happiness=0.8, anger=rest, disgust=rest, fear=rest,
                sadness=rest, surprise=rest, neutral=rest)
        )
        assert emotion == "happiness"
        assert intensity == 0.8

    def test_uniform_tie_resolves_to_anger(self):
        uniform = {e: 1.0 / 7 for e in EMOTIONS}
        emotion, intensity = classify_frame(EmotionObservation("s1", 0.0, uniform))
        assert emotion == "anger"
        assert intensity == pytest.approx(1.0 / 7)

    def test_neutral_wins_at_frame_level(self):
        emotion, intensity = classify_frame(obs(neutral=0.9, sadness=0.1))
        assert emotion == "neutral"
        assert intensity == 0.9

    def test_invalid_sum_rejected(self):
        with pytest.raises(InvalidDistribution):
            classify_frame(obs(happiness=0.5, neutral=0.3))

    def test_negative_entry_rejected(self):
        with pytest.raises(InvalidDistribution):
            classify_frame(obs(happiness=1.2, neutral=-0.2))

    def test_unknown_emotion_rejected(self):
        with pytest.raises(InvalidDistribution):
            classify_frame(EmotionObservation("s1", 0.0, {"joyfulness": 1.0}))

    def test_intensity_equals_distribution_maximum(self):
        d = dist(fear=0.4, sadness=0.35, neutral=0.25)
        _, intensity = classify_frame(EmotionObservation("s1", 0.0, d))
        assert intensity == max(d.values())


class TestAggregateWindow:
    def test_all_neutral_returns_none(self):
        assert aggregate_window([("neutral", 0.9), ("neutral", 0.8)]) == (None, 0.0)

    def test_negative_priority_beats_equal_positive(self):
        frames = [("anger", 0.6)] * 3 + [("happiness", 0.6)] * 3
        emotion, intensity = aggregate_window(frames)
        assert emotion == "anger"
        assert intensity == pytest.approx(0.6)

    def test_frequency_outweighs_single_intense_negative(self):
        frames = [("fear", 0.9)] + [("happiness", 0.5)] * 5
        # w(fear) = (1/6)*0.9*1.5 = 0.225 < w(happiness) = (5/6)*0.5*1.0
        emotion, intensity = aggregate_window(frames)
        assert emotion == "happiness"
        assert intensity == pytest.approx(0.5)

    def test_neutral_frames_are_dropped_before_weighting(self):
        frames = [("neutral", 0.99)] * 10 + [("sadness", 0.4)]
        emotion, _ = aggregate_window(frames)
        assert emotion == "sadness"

    def test_empty_window_rejected(self):
        with pytest.raises(EmptyWindow):
            aggregate_window([])

    def test_never_returns_neutral(self):
        import random

        rng = random.Random(7)
        for _ in range(50):
            frames = [
                (rng.choice(EMOTIONS), rng.random()) for _ in range(rng.randint(1, 12))
            ]
            emotion, _ = aggregate_window(frames)
            assert emotion != "neutral"


class TestAnalyzeText:
    def test_negative_words_in_lexicon(self):
        lexicon = bundled_lexicon()
        assert lexicon["confusing"] < 0
        assert lexicon["frustrating"] < 0
        result = analyze_text("this is confusing and frustrating")
        assert result.label == "negative"
        assert result.score == -1.0

    def test_empty_text_is_neutral_zero(self):
        assert analyze_text("") == TextSentiment("neutral", 0.0)

    def test_negation_flips_within_window(self):
        assert analyze_text("not bad").label == "positive"
        assert analyze_text("not really that bad").label == "positive"
        assert analyze_text("this is really very truly not bad").label == "positive"

    def test_double_negation_cancels(self):
        # "not not bad" -> two negators within the window flip twice
        assert analyze_text("not not bad").label == "negative"

    def test_negation_outside_window_does_not_flip(self):
        assert analyze_text("not the thing I would have called bad").label == "negative"

    def test_dead_zone_reads_neutral(self):
        # one positive, one negative -> score 0 -> neutral
        assert analyze_text("good but confusing").label == "neutral"

    def test_unknown_words_ignored(self):
        assert analyze_text("the quick brown fox").label == "neutral"


class TestFuse:
    def test_paper_hysteresis_case(self):
        prev = AffectState("anger", 1.00, TONE_EMPATHETIC, "face")
        state = fuse(("anger", 0.95), TextSentiment("neutral", 0.0), prev)
        assert state.tone == TONE_EMPATHETIC
        assert state.dominant_emotion == "anger"

    def test_text_fallback_when_face_absent(self):
        state = fuse((None, 0.0), TextSentiment("negative", -0.8), None)
        assert state.tone == TONE_EMPATHETIC
        assert state.source == "text"

    def test_default_neutral_when_both_absent(self):
        state = fuse((None, 0.0), TextSentiment("neutral", 0.0), None)
        assert state.tone == TONE_NEUTRAL
        assert state.source == "default"

    def test_positive_face_uplifting(self):
        state = fuse(("happiness", 0.7), TextSentiment("neutral", 0.0), None)
        assert state.tone == TONE_UPLIFTING
        assert state.source == "face"

    def test_face_beats_conflicting_text(self):
        state = fuse(("anger", 0.8), TextSentiment("positive", 0.9), None)
        assert state.tone == TONE_EMPATHETIC
        assert state.source == "face"

    def test_valence_totality(self):
        for emotion in EMOTIONS:
            if emotion == "neutral":
                continue
            state = fuse((emotion, 0.5), TextSentiment("neutral", 0.0), None)
            assert state.tone in (TONE_EMPATHETIC, TONE_UPLIFTING)

    def test_deterministic(self):
        prev = AffectState("fear", 0.6, TONE_EMPATHETIC, "face")
        args = (("fear", 0.55), TextSentiment("positive", 0.5), prev)
        assert fuse(*args) == fuse(*args)

    @given(
        st.sampled_from([e for e in EMOTIONS if e != "neutral"]),
        st.floats(0.0, 1.0),
        st.floats(-HYSTERESIS_THRESHOLD + 1e-9, HYSTERESIS_THRESHOLD - 1e-9),
    )
    def test_hysteresis_bound_property(self, emotion, intensity, delta):
        new_intensity = min(max(intensity + delta, 0.0), 1.0)
        prev = fuse((emotion, intensity), TextSentiment("neutral", 0.0), None)
        nxt = fuse((emotion, new_intensity), TextSentiment("neutral", 0.0), prev)
        assert nxt.tone == prev.tone

    def test_previous_recorded(self):
        prev = AffectState("anger", 0.9, TONE_EMPATHETIC, "face")
        state = fuse(("happiness", 0.8), TextSentiment("neutral", 0.0), prev)
        assert state.previous == ("anger", 0.9)
        assert state.tone == TONE_UPLIFTING


class TestFrameStream:
    def test_collect_orders_and_caps(self):
        stream = FrameStream(cap_s=120.0)
        for t in (500.0, 100.0, 450.0):
            stream.append(EmotionObservation("s1", t, dist(neutral=1.0)))
        got = stream.collect("s1", now=500.0)
        assert [f.timestamp for f in got] == [450.0, 500.0]  # 100 s is beyond the cap

    def test_since_narrows_the_window(self):
        stream = FrameStream(cap_s=120.0)
        for t in (400.0, 460.0, 480.0):
            stream.append(EmotionObservation("s1", t, dist(neutral=1.0)))
        got = stream.collect("s1", now=500.0, since=450.0)
        assert [f.timestamp for f in got] == [460.0, 480.0]

    def test_sessions_are_isolated(self):
        stream = FrameStream()
        stream.append(EmotionObservation("a", 1.0, dist(neutral=1.0)))
        assert stream.collect("b", now=2.0) == []

    def test_invalid_frames_rejected_at_append(self):
        stream = FrameStream()
        with pytest.raises(InvalidDistribution):
            stream.append(EmotionObservation("a", 1.0, dist(anger=0.5)))

    def test_prune_discards_stale_frames(self):
        stream = FrameStream(cap_s=120.0)
        stream.append(EmotionObservation("a", 10.0, dist(neutral=1.0)))
        stream.append(EmotionObservation("a", 400.0, dist(neutral=1.0)))
        stream.prune("a", now=450.0)
        assert [f.timestamp for f in stream.collect("a", now=450.0)] == [400.0]
