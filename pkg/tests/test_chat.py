import json
import threading

import pytest

from carelens.affect import EMOTIONS
from carelens.chat import (
    DEFAULT_QUERIES,
    ChatLog,
    ChatService,
    ExplanationService,
    ServiceCore,
)
from carelens.cohort import train_cohort
from carelens.errors import SessionNotFound, UnknownParticipant
from carelens.gateway import MockGateway
from carelens.synthetic import generate_synthetic_cohort


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt
        return self.now


@pytest.fixture(scope="module")
def core():
    cohort = generate_synthetic_cohort(2, 60, 7)
    registry = train_cohort(cohort, seed=0)
    return ServiceCore(registry, ExplanationService(registry, cohort))


@pytest.fixture()
def service(core, tmp_path):
    clock = FakeClock()
    svc = ChatService(
        core=core,
        gateway=MockGateway(),
        log_path=tmp_path / "chat_log.jsonl",
        clock=clock,
    )
    svc.test_clock = clock
    return svc


def frame(anger=0.0, neutral=None, **kwargs):
    dist = {e: 0.0 for e in EMOTIONS}
    dist["anger"] = anger
    dist.update(kwargs)
    if neutral is None:
        neutral = 1.0 - sum(dist.values())
    dist["neutral"] = neutral
    return dist


class TestSessions:
    def test_create_and_empty_history(self, service):
        sid = service.create_session("doc@example.org", "p01")
        assert service.get_history(sid) == []

    def test_unknown_participant_rejected(self, service):
        with pytest.raises(UnknownParticipant):
            service.create_session("doc@example.org", "p99")

    def test_ids_are_distinct(self, service):
        a = service.create_session("doc@example.org", "p01")
        b = service.create_session("doc@example.org", "p01")
        assert a != b

    def test_unknown_session_rejected(self, service):
        with pytest.raises(SessionNotFound):
            service.post_message("missing", "hello")
        with pytest.raises(SessionNotFound):
            service.get_history("missing")


class TestPostMessage:
    def test_neutral_frames_with_shap_request(self, service):
        sid = service.create_session("doc@example.org", "p01")
        now = service.test_clock.now
        service.ingest_frame(sid, now - 4, frame(neutral=1.0))
        service.ingest_frame(sid, now - 2, frame(neutral=1.0))
        msg = service.post_message(sid, "explain the prediction", ["shap"])
        assert "[tone=neutral_professional]" in msg.content
        assert "[attachments=1]" in msg.content

    def test_angry_frames_drive_empathetic_tone(self, service):
        sid = service.create_session("doc@example.org", "p01")
        now = service.test_clock.now
        service.ingest_frame(sid, now - 2, frame(anger=0.9, neutral=0.1))
        msg = service.post_message(sid, "explain the prediction")
        assert "[tone=empathetic_supportive]" in msg.content

    def test_text_sentiment_fallback_without_frames(self, service):
        sid = service.create_session("doc@example.org", "p01")
        msg = service.post_message(sid, "this is confusing and frustrating")
        assert "[tone=empathetic_supportive]" in msg.content

    def test_history_has_user_then_assistant(self, service):
        sid = service.create_session("doc@example.org", "p01")
        service.post_message(sid, "explain the prediction")
        history = service.get_history(sid)
        assert [m.role for m in history] == ["user", "assistant"]
        assert history[0].content == "explain the prediction"
        assert history[0].timestamp <= history[1].timestamp

    def test_frames_only_count_since_last_message(self, service):
        sid = service.create_session("doc@example.org", "p01")
        now = service.test_clock.now
        service.ingest_frame(sid, now - 1, frame(anger=0.9, neutral=0.1))
        msg = service.post_message(sid, "explain the prediction")
        assert "[tone=empathetic_supportive]" in msg.content
        # next message sees no new frames and no text signal: tone defaults
        service.test_clock.advance(30)
        msg = service.post_message(sid, "explain the prediction")
        assert "[tone=neutral_professional]" in msg.content

    def test_gateway_exception_still_produces_two_rows(self, core, tmp_path):
        class ExplodingGateway:
            def complete(self, req):
                raise RuntimeError("boom")

        svc = ChatService(
            core=core, gateway=ExplodingGateway(), log_path=tmp_path / "log.jsonl"
        )
        sid = svc.create_session("doc@example.org", "p01")
        msg = svc.post_message(sid, "hello there")
        assert "temporarily unavailable" in msg.content
        assert [m.role for m in svc.get_history(sid)] == ["user", "assistant"]

    def test_concurrent_sessions_have_disjoint_logs(self, service):
        sids = [service.create_session(f"user{i}@example.org", "p01") for i in range(2)]
        errors = []

        def worker(sid, label):
            try:
                for k in range(3):
                    service.post_message(sid, f"{label} message {k}")
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [
            threading.Thread(target=worker, args=(sid, f"s{i}"))
            for i, sid in enumerate(sids)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        for i, sid in enumerate(sids):
            history = service.get_history(sid)
            assert len(history) == 6
            users = [m for m in history if m.role == "user"]
            assert all(m.content.startswith(f"s{i} ") for m in users)


class TestPersistence:
    def test_log_rows_carry_the_four_fields_plus_session(self, service):
        sid = service.create_session("doc@example.org", "p01")
        service.post_message(sid, "explain the prediction")
        rows = [json.loads(l) for l in open(service.log.path)]
        assert len(rows) == 2
        for row in rows:
            assert set(row) == {"session_id", "email", "timestamp", "role", "content"}
            assert row["session_id"] == sid

    def test_replay_reconstructs_history_byte_identically(self, service):
        sid = service.create_session("doc@example.org", "p01")
        service.post_message(sid, "explain the prediction")
        service.test_clock.advance(10)
        service.post_message(sid, "what changed?")
        live = json.dumps(
            [m.to_dict() for m in service.get_history(sid)], sort_keys=True
        )
        replayed = ChatLog.replay(service.log.path)
        again = json.dumps([m.to_dict() for m in replayed[sid]], sort_keys=True)
        assert live == again

    def test_append_only(self, service):
        sid = service.create_session("doc@example.org", "p01")
        service.post_message(sid, "first")
        first_lines = open(service.log.path).read().splitlines()
        service.test_clock.advance(5)
        service.post_message(sid, "second")
        second_lines = open(service.log.path).read().splitlines()
        assert second_lines[: len(first_lines)] == first_lines
        assert len(second_lines) == len(first_lines) + 2

    def test_replay_of_missing_file_is_empty(self, tmp_path):
        assert ChatLog.replay(tmp_path / "absent.jsonl") == {}


class TestQueries:
    def test_default_queries(self, service):
        assert service.predefined_queries() == list(DEFAULT_QUERIES)
        assert len(DEFAULT_QUERIES) == 4

    def test_custom_queries(self, core, tmp_path):
        svc = ChatService(
            core=core,
            gateway=MockGateway(),
            log_path=tmp_path / "log.jsonl",
            queries=["Explain", "Compare"],
        )
        assert svc.predefined_queries() == ["Explain", "Compare"]

    def test_empty_queries(self, core, tmp_path):
        svc = ChatService(
            core=core, gateway=MockGateway(), log_path=tmp_path / "log.jsonl", queries=[]
        )
        assert svc.predefined_queries() == []


class TestExplanationService:
    def test_all_four_kinds(self, core):
        for kind in ("shap", "rules", "cf", "causal"):
            got_kind, artifact, spec, img64 = core.explanations.explain("p01", kind)
            assert got_kind == kind
            assert img64
            assert spec.kind in ("bar", "rules_table", "delta_table", "dag")

    def test_unknown_participant(self, core):
        with pytest.raises(UnknownParticipant):
            core.explanations.explain("p99", "shap")

    def test_unknown_kind(self, core):
        with pytest.raises(ValueError):
            core.explanations.explain("p01", "anchors")

    def test_instance_out_of_range(self, core):
        with pytest.raises(IndexError):
            core.explanations.explain("p01", "shap", instance=10_000)

    def test_results_are_memoized(self, core):
        a = core.explanations.explain("p01", "shap", instance=0)
        b = core.explanations.explain("p01", "shap", instance=0)
        assert a is b
