"""HTTP service for interactive labeling sessions.

A session wraps one benchmark task with a live belief state: the service
reports the current best-model distribution and the next query, accepts
human labels, supports undo, and persists every mutation before responding.

Recovery model: the fsynced history log is the source of truth. Priors are a
deterministic function of the manifest, and updates are deterministic given
the labeled sequence, so a restart rebuilds the exact belief state by
replaying the log. The float32 belief tensor written alongside is a portable
export, not the recovery path.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

import numpy as np

from .acquisition import AcquisitionMethod, select_next
from .beliefs import (
    DEFAULT_ETA,
    BeliefState,
    PriorConfig,
    apply_label,
    build_prior,
    consensus,
    empirical_confusions,
    save_beliefs,
)
from .benchmark import BenchmarkError, BenchmarkTask, load_benchmark
from .pbest import (
    DEFAULT_GRID_SIZE,
    StepMarginals,
    compute_pbest,
    mean_accuracy,
    select_model,
)

__all__ = ["ApiError", "SessionConfig", "SessionStore", "create_app"]

HISTORY_TAIL = 20


class ApiError(Exception):
    """Error with a machine-readable code: not_found, conflict, or bad_request."""

    STATUS = {"not_found": 404, "conflict": 409, "bad_request": 400, "unauthorized": 401}

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    @property
    def status(self) -> int:
        return self.STATUS[self.code]


@dataclass(frozen=True)
class SessionConfig:
    """Session knobs: acquisition method, prior, quadrature grid, update rate."""

    method: AcquisitionMethod = field(default_factory=AcquisitionMethod)
    prior: PriorConfig = field(default_factory=PriorConfig)
    grid_size: int = DEFAULT_GRID_SIZE
    eta: float = DEFAULT_ETA
    budget: int | None = None

    @classmethod
    def from_json(cls, doc: dict) -> "SessionConfig":
        doc = dict(doc or {})
        method = doc.pop("method", "eig")
        if isinstance(method, str):
            method = AcquisitionMethod(kind=method)
        elif isinstance(method, dict):
            method = AcquisitionMethod(**method)
        prior = doc.pop("prior", None)
        if prior is None:
            prior = PriorConfig()
        elif isinstance(prior, dict):
            prior = PriorConfig(**prior)
        try:
            return cls(method=method, prior=prior, **doc)
        except TypeError as exc:
            raise ApiError("bad_request", f"unknown config field: {exc}") from exc

    def to_json(self) -> dict:
        return {
            "method": {"kind": self.method.kind, "rng_seed": self.method.rng_seed},
            "prior": {
                "alpha": self.prior.alpha,
                "temperature": self.prior.temperature,
                "mode": self.prior.mode,
            },
            "grid_size": self.grid_size,
            "eta": self.eta,
            "budget": self.budget,
        }


@dataclass
class _HistoryRow:
    step: int
    item_index: int
    item_id: str
    class_index: int
    chosen_model: int
    pbest: list

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "item_index": self.item_index,
            "item_id": self.item_id,
            "class_index": self.class_index,
            "chosen_model": self.chosen_model,
            "pbest": self.pbest,
        }


class _Session:
    """One live session; mutations are serialized by the per-session lock."""

    def __init__(self, session_id: str, manifest_path: str, task: BenchmarkTask,
                 config: SessionConfig, directory: Path):
        self.id = session_id
        self.manifest_path = manifest_path
        self.task = task
        self.config = config
        self.dir = directory
        self.lock = threading.Lock()
        self.history: list[_HistoryRow] = []
        self.state = self._fresh_state()
        self.labeled = np.zeros(task.num_items, dtype=bool)
        self.pending: int | None = None
        self.pbest = None
        self.mean_accuracies: list[float] = []

    # -- deterministic state construction ---------------------------------

    def _fresh_state(self) -> BeliefState:
        empirical = empirical_confusions(self.task, consensus(self.task))
        return build_prior(empirical, self.config.prior, eta=self.config.eta)

    def budget(self) -> int:
        configured = self.config.budget
        return self.task.num_items if configured is None else configured

    def recompute_outputs(self) -> None:
        """Refresh pbest, display accuracies, and the pending query."""
        marginals = StepMarginals.from_state(self.task, self.state)
        self.pbest = compute_pbest(self.state, marginals.marginal, self.config.grid_size)
        self.mean_accuracies = [float(v) for v in
                                mean_accuracy(self.state, marginals.marginal)]
        exhausted = len(self.history) >= self.budget() or bool(self.labeled.all())
        if exhausted:
            self.pending = None
        else:
            self.pending = select_next(self.state, self.task, self.labeled,
                                       self.config.method, marginals=marginals,
                                       grid_size=self.config.grid_size)

    def rebuild(self, rows: list[dict]) -> None:
        """Replay a history log onto a fresh prior (exact, deterministic).

        Undo markers cancel the preceding label row, keeping the on-disk log
        append-only while the replayed state matches the live one bit for bit.
        """
        net: list[dict] = []
        for doc in rows:
            if doc.get("type") == "undo":
                if not net:
                    raise ApiError("conflict", "history log has undo with no prior label")
                net.pop()
            else:
                net.append(doc)

        self.state = self._fresh_state()
        self.labeled = np.zeros(self.task.num_items, dtype=bool)
        self.history = []
        for doc in net:
            row = _HistoryRow(
                step=int(doc["step"]),
                item_index=int(doc["item_index"]),
                item_id=str(doc["item_id"]),
                class_index=int(doc["class_index"]),
                chosen_model=int(doc["chosen_model"]),
                pbest=list(doc["pbest"]),
            )
            apply_label(self.state, self.task, row.item_index, row.class_index)
            self.labeled[row.item_index] = True
            self.history.append(row)
        self.recompute_outputs()

    # -- payload -----------------------------------------------------------

    def payload(self) -> dict:
        task = self.task
        chosen = select_model(self.pbest)
        pending = None
        if self.pending is not None:
            item = int(self.pending)
            pending = {
                "index": item,
                "item_id": task.item_ids[item],
                "item_uri": task.item_uris[item] if task.item_uris else None,
            }
        return {
            "session_id": self.id,
            "step_count": len(self.history),
            "budget": self.budget(),
            "labeled_count": int(self.labeled.sum()),
            "num_models": task.num_models,
            "num_classes": task.num_classes,
            "model_ids": list(task.model_ids),
            "class_names": list(task.class_names) if task.class_names else None,
            "pbest": [float(v) for v in self.pbest.probs],
            "chosen_model": {"index": chosen, "id": task.model_ids[chosen]},
            "mean_accuracies": list(self.mean_accuracies),
            "pending_query": pending,
            "history_tail": [row.to_json() for row in self.history[-HISTORY_TAIL:]],
            "config": self.config.to_json(),
        }


class SessionStore:
    """Directory-backed collection of sessions."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, _Session] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    # -- persistence helpers ------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.data_dir / session_id

    def _append_log(self, session: _Session, doc: dict) -> None:
        path = self._session_dir(session.id) / "history.log"
        with open(path, "a") as fh:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_checkpoint(self, session: _Session) -> None:
        save_beliefs(session.state, self._session_dir(session.id) / "beliefs")

    def _load_existing(self) -> None:
        for entry in sorted(self.data_dir.iterdir()):
            header_path = entry / "header.json"
            if not header_path.is_file():
                continue
            try:
                header = json.loads(header_path.read_text())
                task = load_benchmark(header["manifest_path"])
                config = SessionConfig.from_json(header["config"])
                session = _Session(header["session_id"], header["manifest_path"],
                                   task, config, entry)
                rows = []
                log_path = entry / "history.log"
                if log_path.is_file():
                    with open(log_path) as fh:
                        rows = [json.loads(line) for line in fh if line.strip()]
                session.rebuild(rows)
            except (BenchmarkError, ApiError, OSError, KeyError, ValueError) as exc:
                logging.getLogger(__name__).warning(
                    "skipping unrecoverable session %s: %s", entry.name, exc)
                continue
            self._sessions[session.id] = session

    # -- operations ----------------------------------------------------------

    def create(self, manifest_path=None, manifest_inline=None,
               config: SessionConfig | None = None) -> dict:
        config = config or SessionConfig()
        session_id = uuid.uuid4().hex
        directory = self._session_dir(session_id)
        directory.mkdir(parents=True)

        if manifest_inline is not None:
            manifest_path = directory / "manifest.json"
            manifest_path.write_text(json.dumps(manifest_inline, indent=2, sort_keys=True))
        if manifest_path is None:
            raise ApiError("bad_request", "provide manifest_path or an inline manifest")
        manifest_path = str(Path(manifest_path).resolve())

        try:
            task = load_benchmark(manifest_path)
        except BenchmarkError as exc:
            raise ApiError("bad_request", f"cannot load manifest: {exc}") from exc
        if config.budget is not None and config.budget > task.num_items:
            raise ApiError("bad_request",
                           f"budget {config.budget} exceeds pool size {task.num_items}")

        session = _Session(session_id, manifest_path, task, config, directory)
        session.recompute_outputs()

        (directory / "header.json").write_text(json.dumps({
            "session_id": session_id,
            "manifest_path": manifest_path,
            "config": config.to_json(),
            "created_at": time.time(),
        }, indent=2, sort_keys=True) + "\n")
        self._write_checkpoint(session)

        with self._registry_lock:
            self._sessions[session_id] = session
        return session.payload()

    def get(self, session_id: str) -> _Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise ApiError("not_found", f"no session {session_id!r}") from None

    def state_payload(self, session_id: str) -> dict:
        return self.get(session_id).payload()

    def submit_label(self, session_id: str, step: int, item_id: str,
                     class_index: int) -> dict:
        session = self.get(session_id)
        with session.lock:
            task = session.task
            if not 0 <= class_index < task.num_classes:
                raise ApiError("bad_request",
                               f"class index {class_index} out of range [0, {task.num_classes})")
            if item_id not in task.item_ids:
                raise ApiError("bad_request", f"unknown item id {item_id!r}")

            current = len(session.history)
            if step == current and session.history:
                last = session.history[-1]
                if last.item_id == item_id and last.class_index == class_index:
                    return session.payload()  # idempotent resubmission
                raise ApiError("conflict",
                               f"step {step} was already labeled with a different answer")
            if step != current + 1:
                raise ApiError("conflict",
                               f"expected step {current + 1}, got {step}")
            if session.pending is None:
                raise ApiError("conflict", "session budget exhausted; no pending query")
            pending_id = task.item_ids[session.pending]
            if item_id != pending_id:
                raise ApiError("conflict",
                               f"item {item_id!r} is not the pending query {pending_id!r}")

            item_index = session.pending
            apply_label(session.state, task, item_index, class_index)
            session.labeled[item_index] = True

            marginals = StepMarginals.from_state(task, session.state)
            session.pbest = compute_pbest(session.state, marginals.marginal,
                                          session.config.grid_size)
            session.mean_accuracies = [float(v) for v in
                                       mean_accuracy(session.state, marginals.marginal)]
            row = _HistoryRow(
                step=step,
                item_index=item_index,
                item_id=item_id,
                class_index=class_index,
                chosen_model=select_model(session.pbest),
                pbest=[float(v) for v in session.pbest.probs],
            )
            session.history.append(row)
            exhausted = len(session.history) >= session.budget() or bool(session.labeled.all())
            session.pending = None if exhausted else select_next(
                session.state, task, session.labeled, session.config.method,
                marginals=marginals, grid_size=session.config.grid_size)

            self._append_log(session, row.to_json())
            self._write_checkpoint(session)
            return session.payload()

    def undo_last(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            if not session.history:
                raise ApiError("conflict", "nothing to undo")
            rows = [row.to_json() for row in session.history[:-1]]
            session.rebuild(rows)
            self._append_log(session, {"type": "undo"})
            self._write_checkpoint(session)
            return session.payload()

    def export_csv(self, session_id: str) -> str:
        session = self.get(session_id)
        lines = ["step,item_id,class_index,chosen_model"]
        for row in session.history:
            lines.append(f"{row.step},{row.item_id},{row.class_index},"
                         f"{session.task.model_ids[row.chosen_model]}")
        return "\n".join(lines) + "\n"


def create_app(data_dir, token: str | None = None, ui_dir=None) -> FastAPI:
    """Build the FastAPI app around a session store.

    When ``token`` is set, session endpoints require a matching
    ``Authorization: Bearer`` header; the health endpoint stays open.
    """
    store = SessionStore(data_dir)
    app = FastAPI(title="amselect session service")
    app.state.store = store

    def check_auth(request: Request):
        if token is None:
            return
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {token}":
            raise ApiError("unauthorized", "missing or invalid bearer token")

    @app.exception_handler(ApiError)
    async def handle_api_error(_request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": {"code": exc.code, "message": exc.message}})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", dependencies=[Depends(check_auth)])
    def create_session(body: dict):
        config = SessionConfig.from_json(body.get("config") or {})
        return store.create(manifest_path=body.get("manifest_path"),
                            manifest_inline=body.get("manifest"),
                            config=config)

    @app.get("/sessions/{session_id}", dependencies=[Depends(check_auth)])
    def get_session(session_id: str):
        return store.state_payload(session_id)

    @app.post("/sessions/{session_id}/labels", dependencies=[Depends(check_auth)])
    def submit_label(session_id: str, body: dict):
        for key in ("step", "item_id", "class_index"):
            if key not in body:
                raise ApiError("bad_request", f"label body missing field {key!r}")
        return store.submit_label(session_id, int(body["step"]), str(body["item_id"]),
                                  int(body["class_index"]))

    @app.post("/sessions/{session_id}/undo", dependencies=[Depends(check_auth)])
    def undo(session_id: str):
        return store.undo_last(session_id)

    @app.get("/sessions/{session_id}/export", dependencies=[Depends(check_auth)])
    def export(session_id: str):
        return PlainTextResponse(store.export_csv(session_id), media_type="text/csv")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse(url="/ui/")

    return app
