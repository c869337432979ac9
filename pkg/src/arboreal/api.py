"""HTTP front end.  Every route is a thin wrapper over service.run_verb."""
from __future__ import annotations

from typing import Any, Dict, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import perms
from .experiments import SCHEMA_VERSION, ExperimentConfig
from .service import VERBS, run_verb

app = FastAPI(title="arboreal", version="0.1.0")


class RunRequest(BaseModel):
    name: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    samples: int = Field(100_000, ge=1)
    seed: int = 0


class RunResponse(BaseModel):
    verb: str
    ok: bool
    result: Dict[str, Any]
    csv: Optional[str] = None


class Info(BaseModel):
    schema_version: str
    orders_version: str
    verbs: list


@app.get("/info", response_model=Info)
def info():
    return Info(schema_version=SCHEMA_VERSION, orders_version=perms.ORDERS_VERSION, verbs=list(VERBS))


@app.post("/run/{verb}", response_model=RunResponse)
def run(verb: str, req: RunRequest):
    if verb not in VERBS:
        raise HTTPException(status_code=404, detail=f"unknown command {verb}")
    cfg = ExperimentConfig(req.name or verb, req.params, req.samples, req.seed)
    out = run_verb(verb, cfg)
    return RunResponse(verb=out.verb, ok=out.ok, result=out.result, csv=out.csv)
