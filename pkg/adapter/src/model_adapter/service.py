"""FastAPI service wrapping a TorchScript classifier as a hard-label oracle.

Implements the two-endpoint protocol from PROTOCOL.md at the repository root:
GET /v1/info and POST /v1/classify. Responses carry argmax class indices only;
confidence scores never leave the process. The model is the only state; a lock
serializes forward passes since the backend is not assumed reentrant.
"""

from __future__ import annotations

import math
import threading

import numpy as np
import torch
import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import AdapterConfig


class LoadedModel:
    def __init__(self, cfg: AdapterConfig):
        self.cfg = cfg
        try:
            self.model = torch.jit.load(cfg.checkpoint, map_location=cfg.device)
        except Exception as e:
            raise RuntimeError(f"cannot load checkpoint {cfg.checkpoint}: {e}") from e
        self.model.eval()
        self._lock = threading.Lock()
        probe = torch.zeros((1, *cfg.input_shape), device=cfg.device)
        with torch.no_grad():
            out = self.model(probe)
        if out.ndim != 2 or out.shape[0] != 1 or out.shape[1] < 1:
            raise RuntimeError(
                f"checkpoint output shape {tuple(out.shape)} is not (batch, classes)"
            )
        self.num_classes = int(out.shape[1])

    def classify(self, rows: np.ndarray) -> list[int]:
        batch = torch.from_numpy(rows.reshape(-1, *self.cfg.input_shape))
        batch = batch.to(self.cfg.device)
        with self._lock, torch.no_grad():
            logits = self.model(batch)
        return logits.argmax(dim=1).cpu().tolist()


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=400)


def create_app(cfg: AdapterConfig) -> FastAPI:
    loaded = LoadedModel(cfg)
    app = FastAPI(title="model-adapter", docs_url=None, redoc_url=None)
    app.state.model = loaded

    @app.get("/v1/info")
    async def info():
        return {"num_classes": loaded.num_classes}

    @app.post("/v1/classify")
    async def classify(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _bad_request("body is not valid JSON")
        if not isinstance(body, dict):
            return _bad_request("body must be a JSON object")
        shape = body.get("shape")
        samples = body.get("samples")
        if not isinstance(shape, list) or not all(isinstance(d, int) for d in shape):
            return _bad_request("shape must be a list of integers")
        if tuple(shape) != tuple(loaded.cfg.input_shape):
            return _bad_request(
                f"shape {shape} does not match the served model's "
                f"{list(loaded.cfg.input_shape)}"
            )
        if not isinstance(samples, list) or not samples:
            return _bad_request("samples must be a nonempty list")
        if len(samples) > loaded.cfg.batch_cap:
            return _bad_request(f"batch of {len(samples)} exceeds cap {loaded.cfg.batch_cap}")
        width = math.prod(shape)
        try:
            rows = np.asarray(samples, dtype=np.float32)
        except (TypeError, ValueError):
            return _bad_request("samples must be numeric lists")
        if rows.ndim != 2 or rows.shape[1] != width:
            return _bad_request(f"each sample must hold {width} values")
        if not np.isfinite(rows).all():
            return _bad_request("samples must be finite")
        return {"labels": loaded.classify(rows)}

    return app


def serve(cfg: AdapterConfig) -> None:
    """Run the endpoint until interrupted."""
    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")
