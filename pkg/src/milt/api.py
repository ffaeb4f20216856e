"""HTTP service over datasets, trees, and sessions.

A thin adapter: every endpoint delegates to the library so responses are
bit-identical to direct calls. Dataset and tree endpoints are stateless
(cached per dataset/method); session endpoints mutate state behind a
per-session lock, giving the single-writer guarantee.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .data import MilDataset, load_csv
from .evaluation import score  # noqa: F401  (re-exported for scripted clients)
from .miltree import MilTree, build_miltree, classify_positions, suggest_training
from .selection import SelectionConfig
from .session import Session
from .svm import SvmConfig

__all__ = ["create_app", "serve"]


class CreateSessionRequest(BaseModel):
    dataset: str
    method: str = "med"
    svm: str = "c"
    c: float = 1.0
    nu: float = 0.6
    tolerance: float = 1e-3
    sigma: float = 1.0
    sal_num: int = Field(default=2, ge=1)


class TrainingRequest(BaseModel):
    bag_ids: list[str]


class ActionRequest(BaseModel):
    kind: str
    bags: list[str] = Field(default_factory=list)
    instance_index: int | None = None


class _Store:
    """Datasets from a directory plus built trees and live sessions."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        if not self.data_dir.is_dir():
            raise ValueError(f"data directory {self.data_dir} does not exist")
        self._datasets: dict[str, MilDataset] = {}
        self._trees: dict[tuple[str, str], MilTree] = {}
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self._lock = threading.Lock()

    def dataset_names(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.csv"))

    def dataset(self, name: str) -> MilDataset:
        with self._lock:
            if name not in self._datasets:
                path = self.data_dir / f"{name}.csv"
                if not path.exists():
                    raise HTTPException(404, f"unknown dataset {name!r}")
                self._datasets[name] = load_csv(path)
            return self._datasets[name]

    def tree(self, name: str, method: str, cfg: SelectionConfig | None = None) -> MilTree:
        if method not in ("si", "med"):
            raise HTTPException(400, f"unknown method {method!r}")
        key = (name, method)
        ds = self.dataset(name)
        with self._lock:
            if key not in self._trees:
                self._trees[key] = build_miltree(ds, method, cfg)[0]
            return self._trees[key]

    def session(self, sid: str) -> tuple[Session, threading.Lock]:
        with self._lock:
            if sid not in self.sessions:
                raise HTTPException(404, f"unknown session {sid!r}")
            return self.sessions[sid], self.locks[sid]

    def add_session(self, session: Session) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self.sessions[sid] = session
            self.locks[sid] = threading.Lock()
        return sid


def _session_summary(sid: str, session: Session) -> dict:
    return {
        "session_id": sid,
        "dataset": session.dataset.name,
        "method": session.miltree.method,
        "training": sorted(session.training),
        "has_model": session.model is not None,
        "history_length": len(session.history),
        "slots": {bid: s.to_dict() for bid, s in sorted(session.slots.items())},
    }


def create_app(data_dir: str | Path) -> FastAPI:
    store = _Store(data_dir)
    app = FastAPI(title="milt workbench", version="0.1.0")
    app.state.store = store

    @app.exception_handler(HTTPException)
    async def _http_error(_req: Request, exc: HTTPException):
        return JSONResponse({"error": str(exc.detail), "code": exc.status_code},
                            status_code=exc.status_code)

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return JSONResponse({"error": str(exc), "code": 400}, status_code=400)

    def _wrap(callable_, *args, **kwargs):
        """Map library errors onto HTTP codes at the adapter boundary."""
        try:
            return callable_(*args, **kwargs)
        except KeyError as exc:
            raise HTTPException(404, str(exc.args[0] if exc.args else exc)) from exc
        except IndexError as exc:
            raise HTTPException(400, str(exc)) from exc

    @app.get("/datasets")
    def list_datasets():
        out = []
        for name in store.dataset_names():
            ds = store.dataset(name)
            out.append({"name": name, "bags": len(ds.bags), "classes": ds.n_classes})
        return out

    @app.get("/datasets/{name}/tree")
    def dataset_tree(name: str, method: str = "med"):
        tree = store.tree(name, method)
        positions = classify_positions(tree)
        from .miltree import initial_slots

        return tree.export_bag_tree(initial_slots(tree.pairs), positions)

    @app.get("/datasets/{name}/bags/{bag_id}/tree")
    def dataset_instance_tree(name: str, bag_id: str, method: str = "med"):
        tree = store.tree(name, method)
        return _wrap(tree.export_instance_tree, bag_id)

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        ds = store.dataset(req.dataset)
        tree = store.tree(req.dataset, req.method, SelectionConfig(sigma=req.sigma, sal_num=req.sal_num))
        svm_cfg = SvmConfig(variant=req.svm, c=req.c, nu=req.nu, tolerance=req.tolerance)
        session = Session(ds, tree, svm_cfg)
        sid = store.add_session(session)
        return _session_summary(sid, session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session, _ = store.session(sid)
        return _session_summary(sid, session)

    @app.put("/sessions/{sid}/training")
    def put_training(sid: str, req: TrainingRequest):
        session, lock = store.session(sid)
        with lock:
            _wrap(session.set_training, req.bag_ids)
            return _session_summary(sid, session)

    @app.post("/sessions/{sid}/train")
    def train(sid: str):
        session, lock = store.session(sid)
        with lock:
            report = session.train()
            return report.to_dict()

    @app.post("/sessions/{sid}/actions")
    def act(sid: str, req: ActionRequest):
        session, lock = store.session(sid)
        with lock:
            if req.kind == "swap_to_alternative":
                _wrap(session.swap_to_alternative, req.bags)
            elif req.kind == "set_prototype":
                if len(req.bags) != 1 or req.instance_index is None:
                    raise HTTPException(400, "set_prototype needs one bag and instance_index")
                _wrap(session.set_prototype, req.bags[0], req.instance_index)
            elif req.kind == "add_prototype":
                if len(req.bags) != 1:
                    raise HTTPException(400, "add_prototype needs exactly one bag")
                _wrap(session.add_prototype, req.bags[0], req.instance_index)
            elif req.kind == "add_bags":
                _wrap(session.add_bags, req.bags)
            else:
                raise HTTPException(400, f"unknown action kind {req.kind!r}")
            return _session_summary(sid, session)

    @app.get("/sessions/{sid}/classmatch")
    def classmatch(sid: str, scope: str = "all"):
        session, lock = store.session(sid)
        with lock:
            if scope == "training":
                return session.classmatch_training().to_dict()
            if scope == "all":
                return session.classmatch_all().to_dict()
            raise HTTPException(400, f"unknown scope {scope!r}")

    @app.get("/sessions/{sid}/error-branches")
    def error_branches(sid: str):
        session, lock = store.session(sid)
        with lock:
            report = session.classmatch_all()
            return [b.to_dict() for b in session.error_branches(report)]

    @app.get("/sessions/{sid}/suggest")
    def suggest(sid: str, fraction: float = 0.3, mode: str = "combined", seed: int = 1):
        session, lock = store.session(sid)
        with lock:
            positions = classify_positions(session.miltree)
            picked = suggest_training(session.miltree, positions, fraction, seed, mode=mode)
            return {"bag_ids": sorted(picked)}

    @app.get("/sessions/{sid}/export")
    def export(sid: str):
        session, lock = store.session(sid)
        with lock:
            return session.to_dict()

    @app.get("/sessions/{sid}/tree")
    def session_tree(sid: str):
        session, lock = store.session(sid)
        with lock:
            positions = classify_positions(session.miltree)
            return session.miltree.export_bag_tree(session.slots, positions)

    @app.get("/sessions/{sid}/bags/{bag_id}/tree")
    def session_instance_tree(sid: str, bag_id: str):
        session, lock = store.session(sid)
        with lock:
            return _wrap(session.miltree.export_instance_tree, bag_id, session.slots)

    return app


def serve(port: int, data_dir: str | Path, host: str = "127.0.0.1"):
    """Blocking server run (see also `milt serve`)."""
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port)
