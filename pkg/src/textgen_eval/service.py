"""Annotation service: serves session items, records judgments durably,
exports them joined with the blinding map.

Served payloads contain texts only.  Which system produced a text is
resolved exclusively at export time, so nothing an annotator's browser
receives can leak the answer.
"""

from __future__ import annotations

import hmac
import json
import os
import threading
from datetime import datetime, timezone
from hashlib import sha256
from pathlib import Path
from typing import Optional, Sequence

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .errors import WorkbenchError
from .stimuli import SessionPlan, StimulusSet

TASKS = ("ranking", "classification")
CLASSIFICATION_LABELS = ("yes", "no", "ct")


class UnknownSubject(WorkbenchError):
    code = "evalservice.UnknownSubject"


class UnknownSession(WorkbenchError):
    code = "evalservice.UnknownSession"


class PlanExhausted(WorkbenchError):
    code = "evalservice.PlanExhausted"


class OutOfOrder(WorkbenchError):
    code = "evalservice.OutOfOrder"


class DuplicateSubmission(WorkbenchError):
    code = "evalservice.DuplicateSubmission"


class MalformedResponse(WorkbenchError):
    code = "evalservice.MalformedResponse"


class CorruptLog(WorkbenchError):
    code = "evalservice.CorruptLog"


def session_id_for(task: str, subject_id: str) -> str:
    digest = sha256(f"{task}/{subject_id}".encode()).hexdigest()
    return f"se{digest[:12]}"


class EvalStore:
    """Session state over an append-only JSON-lines log.

    Every accepted response is written, flushed, and fsynced before the
    caller sees an ack, so a crash loses at most responses that were never
    acknowledged.  Startup replays the log to rebuild cursors; a torn
    final line (an append cut short mid-write) is dropped and truncated
    away, any other malformed content raises CorruptLog.
    """

    def __init__(
        self,
        plans: Sequence[SessionPlan],
        stimulus_set: StimulusSet,
        log_path: str | Path,
    ):
        self._lock = threading.Lock()
        self._plans: dict[tuple[str, str], SessionPlan] = {}
        for plan in plans:
            key = (plan.task, plan.subject_id)
            if key in self._plans:
                raise ValueError(f"duplicate plan for task/subject {key}")
            self._plans[key] = plan
        self._sessions = {
            session_id_for(task, subject): (task, subject)
            for task, subject in self._plans
        }
        self._stimuli = stimulus_set.by_id()
        self._blinding = stimulus_set.blinding_map()
        self._records: dict[str, list[dict]] = {sid: [] for sid in self._sessions}
        self._log_path = Path(log_path)
        self._replay()
        self._fh = open(self._log_path, "ab")

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    # -- persistence --------------------------------------------------------

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        raw = self._log_path.read_bytes()
        body, sep, tail = raw.rpartition(b"\n")
        if tail:
            # bytes past the last newline were never acked; drop them
            os.truncate(self._log_path, len(raw) - len(tail))
        if not sep:
            return
        for lineno, line in enumerate(body.split(b"\n"), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLog(f"{self._log_path}: line {lineno}: {exc}") from exc
            self._admit(record, lineno)

    def _admit(self, record: dict, lineno: int) -> None:
        session_id = record.get("session_id")
        if session_id not in self._sessions:
            raise CorruptLog(
                f"{self._log_path}: line {lineno}: log references session "
                f"{session_id!r} which matches no loaded plan"
            )
        expected = len(self._records[session_id])
        if record.get("item_index") != expected:
            raise CorruptLog(
                f"{self._log_path}: line {lineno}: session {session_id} expected "
                f"item {expected}, log has {record.get('item_index')!r}"
            )
        self._records[session_id].append(record)

    def _append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"
        self._fh.write(line.encode("utf-8"))
        self._fh.flush()
        os.fsync(self._fh.fileno())

    # -- operations ---------------------------------------------------------

    def create_session(self, subject_id: str, task: str) -> dict:
        if task not in TASKS:
            raise MalformedResponse(f"task must be one of {', '.join(TASKS)}, got {task!r}")
        with self._lock:
            plan = self._plans.get((task, subject_id))
            if plan is None:
                raise UnknownSubject(f"no {task} plan for subject {subject_id!r}")
            session_id = session_id_for(task, subject_id)
            cursor = len(self._records[session_id])
            if cursor >= len(plan.items):
                raise PlanExhausted(
                    f"session {session_id} already answered all {len(plan.items)} items"
                )
            return {
                "session_id": session_id,
                "task": task,
                "subject": subject_id,
                "n_items": len(plan.items),
                "next": cursor,
            }

    def next_item(self, session_id: str) -> dict:
        with self._lock:
            plan = self._session_plan(session_id)
            cursor = len(self._records[session_id])
            n_items = len(plan.items)
            if cursor >= n_items:
                return {"done": True, "task": plan.task, "n_items": n_items}
            item = plan.items[cursor]
            payload = {
                "done": False,
                "task": plan.task,
                "item_index": cursor,
                "n_items": n_items,
            }
            if plan.task == "ranking":
                payload["texts"] = [
                    " ".join(self._stimuli[sid].text) for sid in item.stimulus_ids
                ]
            else:
                payload["text"] = " ".join(self._stimuli[item.stimulus_id].text)
            return payload

    def submit_response(self, session_id: str, item_index, response) -> dict:
        with self._lock:
            plan = self._session_plan(session_id)
            n_items = len(plan.items)
            if (
                isinstance(item_index, bool)
                or not isinstance(item_index, int)
                or not 0 <= item_index < n_items
            ):
                raise MalformedResponse(
                    f"item_index must be an integer in [0, {n_items}), got {item_index!r}"
                )
            cursor = len(self._records[session_id])
            if item_index < cursor:
                raise DuplicateSubmission(
                    f"item {item_index} of session {session_id} is already answered"
                )
            if item_index > cursor:
                raise OutOfOrder(
                    f"session {session_id} is at item {cursor}, got {item_index}"
                )
            item = plan.items[cursor]
            record = {
                "record_id": f"{session_id}:{item_index}",
                "task": plan.task,
                "subject_id": plan.subject_id,
                "session_id": session_id,
                "item_index": item_index,
                "received_at": datetime.now(timezone.utc).isoformat(
                    timespec="microseconds"
                ),
            }
            if plan.task == "ranking":
                record["stimulus_ids"] = list(item.stimulus_ids)
                record["display_order"] = list(item.display_order)
                record["response"] = _check_ranking(response)
            else:
                record["stimulus_ids"] = [item.stimulus_id]
                record["response"] = _check_label(response)
            self._append(record)
            self._records[session_id].append(record)
            return {"ok": True, "next": item_index + 1, "n_items": n_items}

    def export_records(self, task: Optional[str] = None) -> list[dict]:
        """Records in (session_id, item_index) order, joined with the
        blinding map: each gains systems, condition, and prompt_id."""
        with self._lock:
            out = []
            for session_id in sorted(self._records):
                for record in self._records[session_id]:
                    if task is not None and record["task"] != task:
                        continue
                    out.append(self._join(record))
            return out

    def export_jsonl(self, task: Optional[str] = None) -> str:
        return "".join(
            json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"
            for record in self.export_records(task)
        )

    def _session_plan(self, session_id: str) -> SessionPlan:
        if session_id not in self._sessions:
            raise UnknownSession(f"unknown session {session_id!r}")
        return self._plans[self._sessions[session_id]]

    def _join(self, record: dict) -> dict:
        joined = dict(record)
        joined["systems"] = [self._blinding[sid] for sid in record["stimulus_ids"]]
        first = self._stimuli[record["stimulus_ids"][0]]
        joined["condition"] = first.condition
        joined["prompt_id"] = first.prompt_id
        return joined


def _check_ranking(response) -> list[int]:
    if (
        not isinstance(response, list)
        or len(response) != 3
        or any(isinstance(r, bool) or not isinstance(r, int) for r in response)
        or sorted(response) != [1, 2, 3]
    ):
        raise MalformedResponse(
            f"ranking response must be a permutation of [1, 2, 3], got {response!r}"
        )
    return list(response)


def _check_label(response) -> str:
    if response not in CLASSIFICATION_LABELS:
        raise MalformedResponse(
            f"label must be one of {', '.join(CLASSIFICATION_LABELS)}, got {response!r}"
        )
    return response


_HTTP_STATUS = {
    UnknownSubject: 404,
    UnknownSession: 404,
    PlanExhausted: 409,
    OutOfOrder: 409,
    DuplicateSubmission: 409,
    MalformedResponse: 400,
    CorruptLog: 500,
}


def create_app(store: EvalStore, ui_dir: str | Path | None = None) -> FastAPI:
    """HTTP wrapper over a store; optionally serves a static UI bundle at /."""
    app = FastAPI(title="annotation service", docs_url=None, redoc_url=None)

    @app.exception_handler(WorkbenchError)
    def on_workbench_error(request: Request, exc: WorkbenchError):
        status = _HTTP_STATUS.get(type(exc), 500)
        return JSONResponse(
            status_code=status, content={"error": exc.code, "message": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    def on_invalid_body(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": MalformedResponse.code, "message": "invalid request body"},
        )

    @app.post("/api/sessions")
    def create_session(body: dict = Body(...)):
        subject = body.get("subject")
        task = body.get("task")
        if not isinstance(subject, str) or not isinstance(task, str):
            raise MalformedResponse("body must carry string fields subject and task")
        return store.create_session(subject, task)

    @app.get("/api/sessions/{session_id}/next")
    def next_item(session_id: str):
        return store.next_item(session_id)

    @app.post("/api/sessions/{session_id}/responses")
    def submit_response(session_id: str, body: dict = Body(...)):
        if "item_index" not in body or "response" not in body:
            raise MalformedResponse("body must carry item_index and response")
        return store.submit_response(session_id, body["item_index"], body["response"])

    @app.get("/api/admin/export")
    def export(request: Request, task: Optional[str] = None, format: str = "jsonl"):
        expected = os.environ.get("EVAL_ADMIN_TOKEN", "")
        provided = request.headers.get("x-admin-token", "")
        if not expected or not hmac.compare_digest(provided, expected):
            return JSONResponse(
                status_code=403,
                content={
                    "error": "evalservice.Forbidden",
                    "message": "missing or wrong X-Admin-Token",
                },
            )
        if format != "jsonl":
            raise MalformedResponse(f"unsupported export format {format!r}")
        if task is not None and task not in TASKS:
            raise MalformedResponse(f"task must be one of {', '.join(TASKS)}")
        return PlainTextResponse(
            store.export_jsonl(task), media_type="application/x-ndjson"
        )

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        def root():
            return {"service": "annotation", "api": "/api"}

    return app


def serve(
    store: EvalStore,
    host: str = "127.0.0.1",
    port: int = 8000,
    ui_dir: str | Path | None = None,
) -> None:
    import uvicorn

    uvicorn.run(create_app(store, ui_dir), host=host, port=port, log_level="warning")
