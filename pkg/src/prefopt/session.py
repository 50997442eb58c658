"""Human-in-the-loop session service over the optimization loop.

A session wraps one loop instance: the client fetches the pending A/B query
(with descriptor evidence and, for suspension problems, downsampled response
traces), posts a label, and polls while the next candidate is computed.
Sessions are persisted as an append-only JSONL event log (created /
preference events); state is rebuilt by replay, which is exact because the
loop is deterministic.

HTTP endpoints (JSON bodies, ``"v": 1`` envelope, natural units):

    POST /sessions                    create; returns id + first query
    GET  /sessions/{id}               status summary
    GET  /sessions/{id}/query         pending query (202 while computing)
    POST /sessions/{id}/preference    submit label {-1, 0, +1} with nonce
    GET  /sessions/{id}/trace         iteration trace as structured rows
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .core import Bounds
from .errors import ConfigError, PrefoptError, ProtocolError
from .loop import (LoopConfig, LoopState, advance, final_answer, initialize,
                   submit_preference)
from .oracles import SuspensionProblem, make_problem

MAX_TRACE_POINTS = 500
DEFAULT_BUDGETS = {"analytical": 40, "susp2d": 20, "susp4d": 30}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class NotFoundError(PrefoptError, KeyError):
    pass


class ConflictError(PrefoptError, RuntimeError):
    pass


@dataclass
class SessionRecord:
    id: str
    problem_name: str | None
    problem: object | None           # None for custom-bounds sessions
    cfg: LoopConfig
    state: LoopState
    status: str                      # awaiting-preference | computing | finished | error
    created: str
    updated: str
    error: str | None = None
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)


def _parse_create(params: dict):
    """Validate a creation request; returns (problem_name, problem, bounds, cfg)."""
    fields = {}
    problem_name = params.get("problem")
    problem = None
    if problem_name is not None:
        if problem_name not in ("analytical", "susp2d", "susp4d"):
            fields["problem"] = f"unknown problem {problem_name!r}"
        else:
            problem = make_problem(problem_name)
            bounds = problem.bounds
    if problem_name is None:
        raw = params.get("bounds")
        if not isinstance(raw, dict) or "lower" not in raw or "upper" not in raw:
            fields["bounds"] = "custom sessions need bounds {lower: [...], upper: [...]}"
        else:
            try:
                bounds = Bounds(np.array(raw["lower"], dtype=float),
                                np.array(raw["upper"], dtype=float))
            except Exception as exc:
                fields["bounds"] = str(exc)
    if fields:
        raise ConfigError("invalid session configuration", fields=fields)

    mode = params.get("mode", "regularized" if problem is not None else "baseline")
    if problem is None and mode == "regularized":
        raise ConfigError("custom-bounds sessions have no descriptors",
                          fields={"mode": "use baseline"})
    budget = int(params.get("budget", DEFAULT_BUDGETS.get(problem_name, 20)))
    try:
        cfg = LoopConfig(
            budget=budget,
            n_init=params.get("n_init"),
            mode=mode,
            seed=int(params.get("seed", 0)),
            t_cv=int(params.get("t_cv", 5)),
            cv_k=int(params.get("cv_k", 5)),
            final_answer=params.get("final_answer", "best-sample"),
        )
        cfg.resolve_n_init(bounds.dim)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid session configuration: {exc}") from exc
    return problem_name, problem, bounds, cfg


class SessionService:
    """In-process service; the HTTP layer below is a thin adapter."""

    def __init__(self, store_path: str | None = None):
        self.store_path = store_path
        self._sessions: dict[str, SessionRecord] = {}
        self._dict_lock = threading.Lock()
        self._store_lock = threading.Lock()
        if store_path and os.path.exists(store_path):
            self._replay_store()

    # -- persistence ---------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        if not self.store_path:
            return
        with self._store_lock:
            with open(self.store_path, "a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay_store(self) -> None:
        with open(self.store_path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        for ev in events:
            sid = ev["sid"]
            if ev["event"] == "created":
                rec = self._build_record(sid, ev["params"], ev["ts"])
                self._sessions[sid] = rec
            elif ev["event"] == "preference":
                rec = self._sessions[sid]
                self._apply_preference(rec, int(ev["label"]), ev["nonce"],
                                       background=False)

    # -- core operations -----------------------------------------------------

    def _build_record(self, sid: str, params: dict, ts: str) -> SessionRecord:
        problem_name, problem, bounds, cfg = _parse_create(params)
        bank = problem.bank() if (problem is not None
                                  and cfg.mode == "regularized") else None
        state, _ = initialize(bounds, cfg, bank=bank)
        return SessionRecord(id=sid, problem_name=problem_name, problem=problem,
                             cfg=cfg, state=state, status="awaiting-preference",
                             created=ts, updated=ts)

    def create_session(self, params: dict) -> SessionRecord:
        sid = uuid.uuid4().hex
        ts = _now()
        rec = self._build_record(sid, params, ts)
        with self._dict_lock:
            self._sessions[sid] = rec
        self._append_event({"sid": sid, "event": "created", "params": params,
                            "ts": ts})
        return rec

    def get(self, sid: str) -> SessionRecord:
        with self._dict_lock:
            rec = self._sessions.get(sid)
        if rec is None:
            raise NotFoundError(f"no session {sid!r}")
        return rec

    def post_preference(self, sid: str, label: int, nonce: str,
                        grace: float = 1.0) -> dict:
        """Apply a label; returns the next query view, a computing notice, or
        the finished summary. Replays of a consumed nonce raise ConflictError."""
        rec = self.get(sid)
        with rec.lock:
            if rec.status == "finished":
                raise ConflictError("session already finished")
            if rec.status == "computing":
                raise ConflictError("still computing the next query")
            if rec.status == "error":
                raise ConflictError(f"session failed: {rec.error}")
            pending = rec.state.pending
            if pending is None or nonce != pending.nonce:
                raise ConflictError("nonce does not match the pending query")
            if label not in (-1, 0, 1):
                raise ConfigError("label must be -1, 0 or +1",
                                  fields={"label": label})
            self._append_event({"sid": sid, "event": "preference",
                                "label": int(label), "nonce": nonce,
                                "ts": _now()})
            self._apply_preference(rec, int(label), nonce, background=True)

        deadline = time.monotonic() + grace
        while rec.status == "computing" and time.monotonic() < deadline:
            time.sleep(0.01)
        return self.describe(sid)

    def _apply_preference(self, rec: SessionRecord, label: int, nonce: str,
                          background: bool) -> None:
        """State transition under the record lock; heavy advances may run on
        a worker thread (status=computing) unless replaying."""
        state = submit_preference(rec.state, rec.state.pending, label)
        rec.state = state
        rec.updated = _now()
        if state.pending is not None:               # still in the initial chain
            rec.status = "awaiting-preference"
            return
        if state.n_points >= rec.cfg.budget:
            rec.status = "finished"
            return
        if background:
            rec.status = "computing"
            threading.Thread(target=self._advance_worker, args=(rec,),
                             daemon=True).start()
        else:
            self._advance_now(rec)

    def _advance_now(self, rec: SessionRecord) -> None:
        state, _ = advance(rec.state)
        rec.state = state
        rec.status = "awaiting-preference"
        rec.updated = _now()

    def _advance_worker(self, rec: SessionRecord) -> None:
        try:
            with rec.lock:
                self._advance_now(rec)
        except Exception as exc:  # noqa: BLE001 - surfaced via status
            rec.status = "error"
            rec.error = f"{type(exc).__name__}: {exc}"
            rec.updated = _now()

    # -- views ----------------------------------------------------------------

    def _option_view(self, rec: SessionRecord, x: np.ndarray) -> dict:
        view: dict = {"x": [float(v) for v in x]}
        problem = rec.problem
        if problem is None:
            view["descriptors"] = {}
            return view
        names = problem.bank().names
        vals = problem.descriptor_values(x)
        view["descriptors"] = {n: float(v) for n, v in zip(names, vals)}
        if isinstance(problem, SuspensionProblem):
            tr = problem.trace_for(x)
            stride = max(1, int(np.ceil(tr.time.size / MAX_TRACE_POINTS)))
            view["trace"] = {
                "time": tr.time[::stride].tolist(),
                "a_z": tr.a_z[::stride].tolist(),
                "pitch_rate": tr.pitch_rate[::stride].tolist(),
            }
        return view

    def query_view(self, sid: str) -> dict:
        rec = self.get(sid)
        with rec.lock:
            if rec.status == "computing":
                return {"v": 1, "status": "computing", "retry_after": 1.0}
            if rec.status == "finished":
                raise ConflictError("session finished; fetch the summary")
            if rec.status == "error":
                raise ConflictError(f"session failed: {rec.error}")
            q = rec.state.pending
            return {
                "v": 1,
                "status": rec.status,
                "nonce": q.nonce,
                "iteration": len(rec.state.trace) + 1,
                "remaining": rec.cfg.budget - len(rec.state.trace),
                "candidate": self._option_view(rec, q.candidate),
                "incumbent": self._option_view(rec, q.incumbent),
            }

    def describe(self, sid: str) -> dict:
        rec = self.get(sid)
        with rec.lock:
            doc = {
                "v": 1,
                "id": rec.id,
                "problem": rec.problem_name,
                "mode": rec.cfg.mode,
                "status": rec.status,
                "budget": rec.cfg.budget,
                "iteration": len(rec.state.trace),
                "created": rec.created,
                "updated": rec.updated,
            }
            if rec.status == "computing":
                doc["retry_after"] = 1.0
            if rec.status == "awaiting-preference":
                doc["query"] = self.query_view(sid)
            if rec.status == "error":
                doc["error"] = rec.error
            if rec.status == "finished":
                best = final_answer(rec.state, rec.cfg)
                doc["final"] = self._option_view(rec, best)
                doc["trace"] = self.trace_rows(sid)
            return doc

    def trace_rows(self, sid: str) -> list[dict]:
        rec = self.get(sid)
        rows = []
        for e in rec.state.trace:
            rows.append({
                "iteration": e.iteration,
                "y_best": e.y_best,
                "lambda_ls": e.lambda_ls,
                "lambda_beta": e.lambda_beta,
                "epsilon": e.epsilon,
                "candidate": list(e.candidate),
                "incumbent_index": e.incumbent_index,
                "incumbent": list(e.incumbent),
            })
        return rows

    def get_trace(self, sid: str) -> dict:
        rec = self.get(sid)
        with rec.lock:
            return {"v": 1, "id": rec.id, "rows": self.trace_rows(sid)}


# --- HTTP adapter -----------------------------------------------------------

def make_handler(service: SessionService, ui_dir: str | None = None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # quiet
            pass

        def _send(self, code: int, doc: dict) -> None:
            body = json.dumps(doc).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def _send_file(self, relpath: str) -> None:
            path = os.path.normpath(os.path.join(ui_dir, relpath.lstrip("/")))
            if not path.startswith(os.path.normpath(ui_dir)) or not os.path.isfile(path):
                self._send(404, {"v": 1, "error": "not found"})
                return
            ctype = {
                ".html": "text/html", ".js": "text/javascript",
                ".css": "text/css", ".svg": "image/svg+xml",
                ".map": "application/json",
            }.get(os.path.splitext(path)[1], "application/octet-stream")
            with open(path, "rb") as fh:
                body = fh.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _dispatch(self, method: str) -> None:
            try:
                parts = [p for p in self.path.split("?")[0].split("/") if p]
                if method == "OPTIONS":
                    self._send(204, {})
                    return
                if parts and parts[0] == "sessions":
                    self._api(method, parts)
                    return
                if method == "GET" and ui_dir:
                    self._send_file("index.html" if not parts else "/".join(parts))
                    return
                self._send(404, {"v": 1, "error": "not found"})
            except NotFoundError as exc:
                self._send(404, {"v": 1, "error": str(exc)})
            except ConflictError as exc:
                self._send(409, {"v": 1, "error": str(exc)})
            except ConfigError as exc:
                self._send(422, {"v": 1, "error": str(exc), "fields": exc.fields})
            except ProtocolError as exc:
                self._send(409, {"v": 1, "error": str(exc)})
            except Exception as exc:  # noqa: BLE001
                self._send(500, {"v": 1, "error": f"{type(exc).__name__}: {exc}"})

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            try:
                return json.loads(self.rfile.read(length).decode())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"request body is not valid JSON: {exc}") from exc

        def _api(self, method: str, parts: list[str]) -> None:
            if method == "POST" and len(parts) == 1:
                rec = service.create_session(self._read_json())
                self._send(201, {"v": 1, "id": rec.id,
                                 "query": service.query_view(rec.id)})
                return
            if len(parts) >= 2:
                sid = parts[1]
                tail = parts[2] if len(parts) > 2 else None
                if method == "GET" and tail is None:
                    self._send(200, service.describe(sid))
                    return
                if method == "GET" and tail == "query":
                    doc = service.query_view(sid)
                    self._send(202 if doc.get("status") == "computing" else 200, doc)
                    return
                if method == "GET" and tail == "trace":
                    self._send(200, service.get_trace(sid))
                    return
                if method == "POST" and tail == "preference":
                    body = self._read_json()
                    if "label" not in body or "nonce" not in body:
                        raise ConfigError("body needs label and nonce",
                                          fields={k: "missing" for k in
                                                  ("label", "nonce")
                                                  if k not in body})
                    try:
                        label = int(body["label"])
                    except (TypeError, ValueError):
                        raise ConfigError("label must be an integer",
                                          fields={"label": body["label"]})
                    doc = service.post_preference(sid, label, str(body["nonce"]))
                    self._send(202 if doc.get("status") == "computing" else 200, doc)
                    return
            self._send(404, {"v": 1, "error": "not found"})

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_OPTIONS(self):
            self._dispatch("OPTIONS")

    return Handler


def serve(port: int = 8714, store_path: str | None = None,
          ui_dir: str | None = None) -> ThreadingHTTPServer:
    """Start the HTTP service (returns the server; call serve_forever)."""
    service = SessionService(store_path=store_path)
    server = ThreadingHTTPServer(("0.0.0.0", port), make_handler(service, ui_dir))
    server.service = service
    return server
