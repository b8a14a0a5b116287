"""The interactive session service: enter evidence, fetch trees, ask why.

Two layers.  :class:`SessionManager` is plain Python — every operation is a
JSON-ready request dict in, JSON-ready response dict out — and is what the
tests exercise.  :func:`start_server` wraps a manager in a threaded HTTP
server bound to localhost, which is the transport the browser UI talks to:
one endpoint, ``POST /``, request and response both JSON, schema version
``"v1"`` mandatory in both directions.

Request:  ``{"version": "v1", "op": <name>, ...op fields}``
Response: ``{"version": "v1", "ok": true, "result": ...}`` or
          ``{"version": "v1", "ok": false, "error": {"code", "message"}}``

Sessions hold entered evidence and recompute plan trees lazily on get_tree
(entering several results between views costs nothing).  A result for an
already-entered variable is a conflict unless ``override`` is set; ``reset``
clears the evidence.  Trees, explanations and rankings are the documents
from :mod:`beliefplan.treedoc`, so replaying the same operations yields
byte-identical output.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import BeliefPlanError, ModelError, PlanError
from .model_io import ModelDocument, bundled_model_path, compile_network, load_model
from .planner import PlanConfig, PlanNode, build_tree
from .treedoc import (
    SCHEMA_VERSION,
    evaluation_to_doc,
    node_at,
    parse_node_path,
    plan_document,
    ranking_to_doc,
)

DEFAULT_DEPTH = 5


class ServiceError(Exception):
    """An operation failed in a way the client should see: code + message."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def model_summary(name: str, doc: ModelDocument) -> dict:
    """What a client needs to build input widgets: variables, frames, costs."""
    return {
        "name": name,
        "diagnosis": {"id": doc.diagnosis.id, "frame": list(doc.diagnosis.frame)},
        "treatments": list(doc.treatments),
        "utility": {t: dict(row) for t, row in doc.utility.items()},
        "tests": [{"id": t.id, "cost": t.cost, "frame": list(t.frame)} for t in doc.tests],
        "symptoms": [{"id": s.id, "frame": list(s.frame)} for s in doc.symptoms],
    }


class Session:
    """One operator's evidence and the lazily rebuilt plan tree."""

    def __init__(self, session_id: str, model_name: str, doc: ModelDocument, depth: int):
        self.id = session_id
        self.model_name = model_name
        self.doc = doc
        self.net, self.model = compile_network(doc)
        self.depth = depth
        self.evidence: dict[str, str] = {}
        self.log: list[dict] = []  # {"variable", "value", "at"} in entry order
        self._trees: dict[int, PlanNode] = {}
        self.lock = threading.RLock()
        self._test_ids = {t.id for t in doc.tests}
        self._symptom_ids = {s.id for s in doc.symptoms}

    # -- evidence ----------------------------------------------------------

    def _check_value(self, var_id: str, value: str, expected: set[str], role: str) -> None:
        if var_id not in expected:
            raise ServiceError("unknown_variable", f"{var_id!r} is not a declared {role}")
        frame = self.net.variable(var_id).frame
        if value not in frame:
            raise ServiceError(
                "invalid_outcome", f"{value!r} is not an outcome of {var_id!r} {list(frame)}"
            )

    def enter(self, var_id: str, value: str, role: str, override: bool) -> None:
        expected = self._test_ids if role == "test" else self._symptom_ids
        self._check_value(var_id, value, expected, role)
        if var_id in self.evidence and not override:
            raise ServiceError(
                "conflict",
                f"{var_id!r} already has the entered value {self.evidence[var_id]!r}; "
                f"pass override=true to replace it, or reset the session",
            )
        self.evidence[var_id] = value
        self.log.append(
            {"variable": var_id, "value": value, "at": datetime.now(timezone.utc).isoformat()}
        )
        self._trees.clear()

    def reset(self) -> None:
        self.evidence.clear()
        self.log.clear()
        self._trees.clear()

    def restore(self, evidence: dict, depth: int) -> None:
        staged = {}
        for var_id, value in evidence.items():
            self._check_value(
                var_id, value, self._test_ids | self._symptom_ids, "test or symptom"
            )
            staged[var_id] = value
        self.reset()
        self.evidence.update(staged)
        self.depth = depth

    # -- trees -------------------------------------------------------------

    def tree_root(self, depth: int | None = None):
        depth = self.depth if depth is None else depth
        if depth < 1:
            raise ServiceError("bad_request", f"depth must be >= 1, got {depth}")
        root = self._trees.get(depth)
        if root is None:
            root = build_tree(self.net, self.model, PlanConfig(max_depth=depth, evidence=dict(self.evidence)))
            self._trees[depth] = root
        return root

    def node(self, path) -> tuple[PlanNode, str]:
        """The node at a path plus its canonical text form.

        Accepts the comma-separated string or a list of outcome labels.
        """
        if isinstance(path, str):
            tokens = parse_node_path(path)
        elif isinstance(path, (list, tuple)) and all(isinstance(t, str) for t in path):
            tokens = tuple(path)
        else:
            raise ServiceError(
                "invalid_node_path", "node path must be a string or a list of outcome labels"
            )
        try:
            return node_at(self.tree_root(), tokens), ",".join(tokens)
        except PlanError as exc:
            raise ServiceError("invalid_node_path", str(exc)) from exc


class SessionManager:
    """Registered models, live sessions, and the op dispatch."""

    def __init__(self):
        self._models: dict[str, ModelDocument] = {}
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._counter = 0

    # -- registry ----------------------------------------------------------

    def register_model(self, name: str, doc: ModelDocument) -> None:
        self._models[name] = doc

    def register_file(self, path) -> str:
        name = Path(path).stem
        self.register_model(name, load_model(path))
        return name

    def register_bundled(self, name: str) -> None:
        self.register_model(name, load_model(bundled_model_path(name)))

    def model_names(self) -> list[str]:
        return sorted(self._models)

    def _session(self, payload: dict) -> Session:
        session_id = payload.get("session")
        session = self._sessions.get(session_id)
        if session is None:
            raise ServiceError("unknown_session", f"no session {session_id!r}")
        return session

    # -- operations --------------------------------------------------------

    def handle(self, payload) -> dict:
        """One request dict in, one response dict out; never raises."""
        try:
            if not isinstance(payload, dict):
                raise ServiceError("bad_request", "request must be a JSON object")
            if payload.get("version") != SCHEMA_VERSION:
                raise ServiceError(
                    "bad_request",
                    f"unsupported schema version {payload.get('version')!r}; this service speaks {SCHEMA_VERSION!r}",
                )
            op = payload.get("op")
            handler = getattr(self, f"_op_{op}", None) if isinstance(op, str) else None
            if handler is None:
                raise ServiceError("bad_request", f"unknown op {op!r}")
            result = handler(payload)
            return {"version": SCHEMA_VERSION, "ok": True, "result": result}
        except ServiceError as exc:
            return self._error(exc.code, str(exc))
        except ModelError as exc:
            return self._error("model_error", str(exc))
        except PlanError as exc:
            return self._error("plan_error", str(exc))
        except BeliefPlanError as exc:
            return self._error("engine_error", str(exc))
        except Exception as exc:  # a bug, but one request must not kill the server
            return self._error("internal", f"{type(exc).__name__}: {exc}")

    @staticmethod
    def _error(code: str, message: str) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "ok": False,
            "error": {"code": code, "message": message},
        }

    def _op_describe(self, payload: dict) -> dict:
        ops = sorted(name[4:] for name in dir(self) if name.startswith("_op_"))
        return {"models": self.model_names(), "ops": ops}

    def _op_create(self, payload: dict) -> dict:
        name = payload.get("model")
        if name not in self._models:
            raise ServiceError(
                "unknown_model", f"no model {name!r}; available: {self.model_names()}"
            )
        depth = payload.get("depth", DEFAULT_DEPTH)
        if not isinstance(depth, int) or depth < 1:
            raise ServiceError("bad_request", f"depth must be a positive integer, got {depth!r}")
        with self._lock:
            self._counter += 1
            session = Session(f"s{self._counter}", name, self._models[name], depth)
            self._sessions[session.id] = session
        return {
            "session": session.id,
            "depth": depth,
            "model": model_summary(name, session.doc),
        }

    def _op_set_result(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            session.enter(
                payload.get("test"), payload.get("outcome"), "test",
                bool(payload.get("override", False)),
            )
            return {"evidence": dict(session.evidence)}

    def _op_set_symptom(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            session.enter(
                payload.get("symptom"), payload.get("value"), "symptom",
                bool(payload.get("override", False)),
            )
            return {"evidence": dict(session.evidence)}

    def _op_get_tree(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            depth = payload.get("depth")
            if depth is not None and (not isinstance(depth, int) or depth < 1):
                raise ServiceError("bad_request", f"depth must be a positive integer, got {depth!r}")
            root = session.tree_root(depth)
            return plan_document(
                root, depth or session.depth, dict(session.evidence)
            )

    def _op_explain(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            node, path_text = session.node(payload.get("node", ""))
            return {
                "node": path_text,
                "kind": node.kind,
                "selected": node.selected,
                "explanation": dict(node.explanation),
                "candidates": [evaluation_to_doc(node.details[t]) for t in node.details],
            }

    def _op_ranking(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            node, path_text = session.node(payload.get("node", ""))
            return {
                "node": path_text,
                "kind": node.kind,
                "ranking": ranking_to_doc(node.ranking),
            }

    def _op_reset(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            session.reset()
            return {"evidence": {}}

    def _op_snapshot(self, payload: dict) -> dict:
        session = self._session(payload)
        with session.lock:
            return {
                "model": session.model_name,
                "depth": session.depth,
                "evidence": dict(session.evidence),
            }

    def _op_restore(self, payload: dict) -> dict:
        session = self._session(payload)
        snapshot = payload.get("snapshot")
        if not isinstance(snapshot, dict) or not isinstance(snapshot.get("evidence"), dict):
            raise ServiceError("bad_request", "snapshot must be an object with an evidence map")
        if snapshot.get("model") != session.model_name:
            raise ServiceError(
                "bad_request",
                f"snapshot is for model {snapshot.get('model')!r}, session uses {session.model_name!r}",
            )
        depth = snapshot.get("depth", session.depth)
        if not isinstance(depth, int) or depth < 1:
            raise ServiceError("bad_request", f"depth must be a positive integer, got {depth!r}")
        with session.lock:
            session.restore(snapshot["evidence"], depth)
            return {"evidence": dict(session.evidence), "depth": session.depth}


# ---------------------------------------------------------------------------
# the HTTP transport
# ---------------------------------------------------------------------------

class _Handler(BaseHTTPRequestHandler):
    manager: SessionManager  # set by start_server

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_OPTIONS(self):  # CORS preflight for the browser client
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_POST(self):
        if self.path != "/":
            self._send(404, SessionManager._error("bad_request", f"no such path {self.path}"))
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            self._send(400, SessionManager._error("bad_request", f"request is not valid JSON: {exc}"))
            return
        self._send(200, self.manager.handle(payload))

    def log_message(self, fmt, *args):  # no per-request stderr chatter
        pass


def start_server(manager: SessionManager, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """A threaded HTTP server for ``manager``; port 0 picks a free port.

    The caller runs ``serve_forever()`` (directly or in a thread) and owns
    shutdown.  The bound address is ``server.server_address``.
    """
    handler = type("BoundHandler", (_Handler,), {"manager": manager})
    return ThreadingHTTPServer((host, port), handler)
