"""HTTP surface: POST /v1/judge and GET /v1/health."""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager

from fastapi import Body, FastAPI, HTTPException

from .config import ShimConfig
from .errors import BadRequest
from .scoring import load_scorer, score_labels


def create_app(config: ShimConfig) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.scorer = load_scorer(config.model)
        yield

    app = FastAPI(title="frameref-shim", lifespan=lifespan)
    app.state.scorer = None
    app.state.config = config
    gate = threading.Semaphore(config.max_batch)

    @app.get("/v1/health")
    def health():
        scorer = app.state.scorer
        if scorer is None:
            raise HTTPException(status_code=503, detail="model loading")
        return {"status": "ok", "model": scorer.name}

    @app.post("/v1/judge")
    def judge(payload: dict = Body(...)):
        scorer = app.state.scorer
        if scorer is None:
            raise HTTPException(status_code=503, detail="model loading")
        claim_text = payload.get("claim_text")
        labels = payload.get("labels")
        template_id = payload.get("template", "default")
        if not isinstance(claim_text, str) or not claim_text:
            raise HTTPException(status_code=400, detail="claim_text must be non-empty")
        if not isinstance(labels, list) or not labels:
            raise HTTPException(status_code=400, detail="labels must be a non-empty list")
        if template_id != "default":
            raise HTTPException(status_code=400, detail=f"unknown template: {template_id}")
        try:
            with gate:
                scores = score_labels(scorer, config.render(claim_text), labels)
        except BadRequest as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "per_label": [
                {
                    "label": score.label,
                    "tokens": [
                        {"token_text": t.token_text, "logprob": t.logprob}
                        for t in score.tokens
                    ],
                }
                for score in scores
            ],
            "first_token": [
                {"label": score.label, "first_token_logprob": score.first_token_logprob}
                for score in scores
            ],
        }

    return app
