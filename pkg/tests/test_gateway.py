import httpx

from carelens.affect import TONE_EMPATHETIC
from carelens.gateway import (
    FALLBACK_PREFIX,
    CompletionRequest,
    HttpGateway,
    MockGateway,
    gateway_from_config,
)
from carelens.prompts import Attachment, PromptBundle


def bundle(n_attachments=2, facts=("hr_max plays a more important role",)):
    return PromptBundle(
        tone=TONE_EMPATHETIC,
        system_directive="Respond with empathy and support.",
        history=[],
        user_message="why?",
        attachments=[Attachment(f"img {i}", "aW1n") for i in range(n_attachments)],
        qualitative_facts=list(facts),
    )


def test_mock_template_reflects_bundle():
    resp = MockGateway().complete(CompletionRequest(bundle()))
    assert resp.text.startswith("[tone=empathetic_supportive] [attachments=2]")
    assert resp.text.endswith("why?")
    assert not resp.degraded


def test_mock_is_deterministic():
    req = CompletionRequest(bundle())
    a = MockGateway().complete(req)
    b = MockGateway().complete(req)
    assert a.text == b.text


def test_unreachable_endpoint_degrades_to_fallback():
    gw = HttpGateway("http://127.0.0.1:9/nothing", retry=0)
    resp = gw.complete(CompletionRequest(bundle(), timeout_s=0.2))
    assert resp.degraded
    assert resp.text.startswith(FALLBACK_PREFIX)
    assert "hr_max plays a more important role" in resp.text


def test_malformed_response_degrades_to_fallback(monkeypatch):
    class FakeResponse:
        status_code = 200

        def raise_for_status(self):
            return None

        def json(self):
            return {"unexpected": "shape"}

    monkeypatch.setattr(httpx, "post", lambda *a, **k: FakeResponse())
    gw = HttpGateway("http://example.invalid", retry=0)
    resp = gw.complete(CompletionRequest(bundle()))
    assert resp.degraded
    assert resp.text.startswith(FALLBACK_PREFIX)


def test_http_accepts_plain_text_shape(monkeypatch):
    class FakeResponse:
        status_code = 200

        def raise_for_status(self):
            return None

        def json(self):
            return {"text": "hello from the backend"}

    monkeypatch.setattr(httpx, "post", lambda *a, **k: FakeResponse())
    gw = HttpGateway("http://example.invalid")
    resp = gw.complete(CompletionRequest(bundle()))
    assert resp.text == "hello from the backend"
    assert not resp.degraded


def test_http_accepts_choices_shape(monkeypatch):
    class FakeResponse:
        status_code = 200

        def raise_for_status(self):
            return None

        def json(self):
            return {"choices": [{"message": {"content": "remote text"}}]}

    monkeypatch.setattr(httpx, "post", lambda *a, **k: FakeResponse())
    gw = HttpGateway("http://example.invalid")
    assert gw.complete(CompletionRequest(bundle())).text == "remote text"


def test_gateway_from_config():
    assert isinstance(gateway_from_config({"mock": True}), MockGateway)
    gw = gateway_from_config({"mock": False, "url": "http://example.invalid", "key": "k"})
    assert isinstance(gw, HttpGateway)
    # missing url falls back to the mock rather than failing at startup
    assert isinstance(gateway_from_config({"mock": False}), MockGateway)
