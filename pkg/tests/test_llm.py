from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from automl_agent.llm import (
    Gateway,
    HttpChatBackend,
    LlmError,
    LlmRequest,
    LlmResponse,
    QueueExhaustedError,
    RoleSettings,
    RoutingBackend,
    ScriptedBackend,
    TokenLimitError,
    TokenUsage,
    TransportError,
    complete,
)


def _request(prompt="hi", **kwargs):
    return LlmRequest(role_name="planner", turns=(("user", prompt),), **kwargs)


def test_request_validation():
    with pytest.raises(ValueError, match="temperature"):
        _request(temperature=1.5)
    with pytest.raises(ValueError, match="single-turn"):
        LlmRequest("coder", (("user", "a"), ("assistant", "b"), ("user", "c")))
    with pytest.raises(ValueError, match="user turn"):
        LlmRequest("coder", (("assistant", "b"),), multi_turn=True)


def test_scripted_queues_by_agent_then_role():
    backend = ScriptedBackend({"executer": ["judged"], "planner": ["planned"], "*": ["other"]})
    ask = lambda agent, role: backend.send(LlmRequest(role, (("user", "x"),), agent=agent)).text
    assert ask("executer", "planner") == "judged"
    assert ask("retriever", "planner") == "planned"
    assert ask("coder", "coder") == "other"
    with pytest.raises(QueueExhaustedError):
        ask("coder", "coder")
    assert backend.remaining() == {"executer": 0, "planner": 0, "*": 0}


class _Flaky:
    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    def send(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("503")
        return LlmResponse("ok", 3, 1)


def test_retries_transient_failures_with_backoff():
    waits = []
    backend = _Flaky(2)
    usage = TokenUsage()
    assert complete(_request(), backend, retries=3, backoff=0.5, usage=usage, sleep=waits.append).text == "ok"
    assert waits == [0.5, 1.0]
    assert usage.calls == 1 and usage.total == 4


def test_gives_up_after_the_last_attempt():
    backend = _Flaky(5)
    with pytest.raises(TransportError):
        complete(_request(), backend, retries=3, sleep=lambda _: None)
    assert backend.calls == 3


def test_gateway_applies_role_settings_and_records_transcript():
    seen = []

    class Recorder:
        def send(self, request):
            seen.append(request)
            return LlmResponse("done", 10, 2)

    gateway = Gateway(Recorder(), {"coder": RoleSettings(model="m", temperature=0.5, top_p=1.0)})
    gateway.ask("coder", "coder", "write code")
    gateway.ask("coder", "coder", "again", history=[("user", "write code"), ("assistant", "done")])
    assert seen[0].temperature == 0.5 and seen[0].top_p == 1.0 and seen[0].model == "m"
    assert not seen[0].multi_turn and seen[1].multi_turn and len(seen[1].turns) == 3
    assert gateway.prompts_for("coder") == ["write code", "again"]
    assert gateway.usage.input_tokens == 20 and gateway.usage.output_tokens == 4
    assert json.loads(gateway.transcript_json())[1]["turns"][0] == ["user", "write code"]


def test_routing_backend():
    routed = RoutingBackend({"coder": ScriptedBackend(["c"])}, default=ScriptedBackend(["p"]))
    assert routed.send(LlmRequest("coder", (("user", "x"),))).text == "c"
    assert routed.send(_request()).text == "p"
    with pytest.raises(LlmError, match="no backend"):
        RoutingBackend({}).send(_request())


class _Handler(BaseHTTPRequestHandler):
    replies: list[tuple[int, dict]] = []
    received: list[dict] = []
    headers_seen: list[dict] = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).received.append(body)
        type(self).headers_seen.append(dict(self.headers))
        status, payload = type(self).replies.pop(0)
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_server():
    _Handler.replies, _Handler.received, _Handler.headers_seen = [], [], []
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1", _Handler
    server.shutdown()
    server.server_close()


def _completion(text, finish="stop"):
    return {
        "choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": finish}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 5},
    }


def test_http_backend_round_trip(chat_server, monkeypatch):
    url, handler = chat_server
    monkeypatch.setenv("MLZERO_API_KEY", "secret-key")
    handler.replies = [(200, _completion("hello"))]
    backend = HttpChatBackend(url, "my-model")
    response = backend.send(_request("ping", system_text="be brief", temperature=0.3, top_p=0.9))
    assert response == LlmResponse("hello", 12, 5)
    body = handler.received[0]
    assert body["model"] == "my-model" and body["temperature"] == 0.3 and body["top_p"] == 0.9
    assert body["messages"] == [{"role": "system", "content": "be brief"}, {"role": "user", "content": "ping"}]
    assert handler.headers_seen[0]["Authorization"] == "Bearer secret-key"


def test_http_backend_errors(chat_server):
    url, handler = chat_server
    backend = HttpChatBackend(url, "m", api_key="")
    handler.replies = [(503, {"error": "busy"}), (200, _completion("late"))]
    assert complete(_request(), backend, retries=2, sleep=lambda _: None).text == "late"
    handler.replies = [(400, {"error": "bad"})]
    with pytest.raises(LlmError) as info:
        backend.send(_request())
    assert not isinstance(info.value, TransportError)
    handler.replies = [(200, _completion("cut", finish="length"))]
    with pytest.raises(TokenLimitError):
        backend.send(_request())


def test_http_backend_unreachable():
    backend = HttpChatBackend("http://127.0.0.1:9/v1", "m", timeout=2)
    with pytest.raises(TransportError):
        backend.send(_request())
