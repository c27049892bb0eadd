"""HTTP service exposing the assessment workflow.

Every endpoint is a thin adapter over the core operations: request and
response bodies are the canonical JSON forms of the core types, phase
ordering is enforced server-side, and all state lives in a ProjectStore.
"""
from __future__ import annotations

import base64
import json
from pathlib import Path

from fastapi import FastAPI, Request, Response, UploadFile
from fastapi.responses import JSONResponse

from . import aml
from .attack_tree import validate_attack_tree
from .bn import BayesianRiskModel, NodeParams, build_model, infer, what_if
from .errors import CpsRiskError, GuardrailExhausted, ProviderError, ValidationError
from .evalharness import RunLog, aggregate
from .narration import parse_narration
from .orchestrator import ChainRun, Orchestrator, StepRecord
from .providers import PROVIDER_ADAPTERS, Provider, SamplingConfig
from .scoring import CountermeasurePortfolio
from .store import ProjectStore, UnknownProject
from .threat_model import validate_threat_model

# workflow phases in their mandatory order
PHASES = ("reconstruct", "threat_model", "attack_tree", "bn")


class PhaseOrderError(Exception):
    def __init__(self, wanted: str, missing: str):
        super().__init__(
            f"phase {wanted!r} requires {missing!r} to be completed first")


def _require_phase(manifest: dict, wanted: str) -> None:
    idx = PHASES.index(wanted)
    for prior in PHASES[:idx]:
        if prior not in manifest["phases"]:
            raise PhaseOrderError(wanted, prior)


def default_provider_factory(options: dict) -> Provider:
    if options.get("mock"):
        from .fixtures import frostygoop_provider
        return frostygoop_provider()
    name = options.get("provider", "openai")
    if name not in PROVIDER_ADAPTERS:
        raise ValidationError(f"unknown provider {name!r}")
    return PROVIDER_ADAPTERS[name](model=options.get("model", "default"))


def _sampling(options: dict) -> SamplingConfig:
    return SamplingConfig(
        temperature=float(options.get("temperature", 0.1)),
        top_p=float(options.get("top_p", 0.9)))


def create_app(store_root: str | Path,
               provider_factory=default_provider_factory) -> FastAPI:
    app = FastAPI(title="cpsrisk")
    store = ProjectStore(store_root)
    app.state.store = store

    # -- error mapping ---------------------------------------------------------

    @app.exception_handler(UnknownProject)
    async def _unknown(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc.args[0])})

    @app.exception_handler(PhaseOrderError)
    async def _phase(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ProviderError)
    async def _provider(request, exc):
        return JSONResponse(status_code=502, content={"detail": str(exc)})

    @app.exception_handler(GuardrailExhausted)
    async def _guardrails(request, exc):
        return JSONResponse(status_code=502, content={
            "detail": "model output failed validation after retries",
            "violations": list(exc.violations)})

    @app.exception_handler(ValidationError)
    async def _validation(request, exc):
        # validator messages verbatim in the body
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(CpsRiskError)
    async def _domain(request, exc):
        # remaining domain errors (missing parameters, unknown nodes, ...)
        # are bad requests, not server faults
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # -- helpers ---------------------------------------------------------------

    def _orchestrator(options: dict) -> Orchestrator:
        return Orchestrator(provider_factory(options), _sampling(options))

    def _load_run(manifest: dict) -> ChainRun:
        """Rebuild the transcript so refinements append to it."""
        pid = manifest["id"]
        artifacts = [
            base64.b64encode(store.read_artifact(pid, a["sha256"])).decode("ascii")
            for a in manifest["artifacts"]]
        run = ChainRun.new(manifest["system_context"], _sampling({}),
                           artifacts=artifacts, run_id=manifest["run_id"])
        saved = json.loads(store.read_doc(pid, f"runs/{run.run_id}.json"))
        run.cfg = SamplingConfig(**{
            "temperature": saved["sampling"]["temperature"],
            "top_p": saved["sampling"]["top_p"]})
        run.steps = [StepRecord(
            name=s["name"], prompt=s["prompt"], response=s["response"],
            ok=s["ok"], violations=s["violations"], retries=s["retries"],
            image_count=s["image_count"]) for s in saved["steps"]]
        run.outputs = dict(saved["outputs"])
        return run

    def _save_run(pid: str, run: ChainRun, manifest: dict) -> None:
        run.save(store.runs_dir(pid))
        manifest["run_id"] = run.run_id

    def _bn_model(pid: str) -> BayesianRiskModel:
        return BayesianRiskModel.from_dict(json.loads(store.read_doc(pid, "bn.json")))

    async def _json_body(request: Request) -> dict:
        raw = await request.body()
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"request body is not JSON: {exc}")
        if not isinstance(body, dict):
            raise ValidationError("request body must be a JSON object")
        return body

    # -- endpoints -------------------------------------------------------------

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/projects")
    async def create_project(request: Request):
        body = await _json_body(request)
        if "name" not in body:
            raise ValidationError("missing required field 'name'")
        return store.create(body["name"], body.get("system_context", ""))

    @app.get("/projects")
    async def list_projects():
        return store.list_projects()

    @app.get("/projects/{pid}")
    async def get_project(pid: str):
        return store.get(pid)

    @app.post("/projects/{pid}/artifacts")
    async def upload_artifact(pid: str, file: UploadFile):
        with store.lock(pid):
            content = await file.read()
            return store.add_artifact(
                pid, content, file.filename or "artifact",
                file.content_type or "application/octet-stream")

    @app.post("/projects/{pid}/reconstruct")
    async def reconstruct(pid: str, request: Request):
        body = await _json_body(request)
        with store.lock(pid):
            manifest = store.get(pid)
            if not manifest["artifacts"]:
                raise ValidationError("at least one artefact is required")
            artifacts = [
                base64.b64encode(store.read_artifact(pid, a["sha256"])).decode("ascii")
                for a in manifest["artifacts"]]
            run = ChainRun.new(manifest["system_context"], _sampling(body),
                               artifacts=artifacts)
            orch = _orchestrator(body)
            orch.cfg = run.cfg
            narration = orch.reconstruct(run)
            store.write_doc(pid, "narration.txt", narration.render())
            _save_run(pid, run, manifest)
            manifest["phases"] = ["reconstruct"]
            store.save(pid, manifest)
            return narration.to_dict()

    @app.post("/projects/{pid}/threat-model")
    async def threat_model(pid: str, request: Request):
        body = await _json_body(request)
        with store.lock(pid):
            manifest = store.get(pid)
            _require_phase(manifest, "threat_model")
            narration = parse_narration(
                store.read_doc(pid, "narration.txt"),
                system_context=manifest["system_context"])
            run = _load_run(manifest)
            orch = _orchestrator(body)
            orch.cfg = run.cfg
            model, warnings = orch.model_threats(run, narration)
            store.write_doc(pid, "threat_model.json", model.to_json())
            _save_run(pid, run, manifest)
            if "threat_model" not in manifest["phases"]:
                manifest["phases"].append("threat_model")
            store.save(pid, manifest)
            return {"threat_model": json.loads(model.to_json()),
                    "warnings": warnings}

    @app.post("/projects/{pid}/attack-tree")
    async def attack_tree(pid: str, request: Request):
        body = await _json_body(request)
        with store.lock(pid):
            manifest = store.get(pid)
            _require_phase(manifest, "attack_tree")
            model, _ = validate_threat_model(
                store.read_doc(pid, "threat_model.json"))
            run = _load_run(manifest)
            orch = _orchestrator(body)
            orch.cfg = run.cfg
            tree = orch.model_attack_tree(run, model)
            store.write_doc(pid, "attack_tree.json", tree.to_json())
            _save_run(pid, run, manifest)
            if "attack_tree" not in manifest["phases"]:
                manifest["phases"].append("attack_tree")
            store.save(pid, manifest)
            return json.loads(tree.to_json())

    @app.post("/projects/{pid}/bn/build")
    async def bn_build(pid: str, request: Request):
        body = await _json_body(request)
        with store.lock(pid):
            manifest = store.get(pid)
            _require_phase(manifest, "bn")
            tree, violations = validate_attack_tree(
                store.read_doc(pid, "attack_tree.json"))
            if tree is None:
                raise ValidationError("; ".join(str(v) for v in violations))
            raw_params = body.get("params", {})
            params = {nid: NodeParams(**fields)
                      for nid, fields in raw_params.items()}
            model = build_model(tree, params)
            store.write_doc(pid, "bn.json", model.to_json())
            if "bn" not in manifest["phases"]:
                manifest["phases"].append("bn")
            store.save(pid, manifest)
            return json.loads(model.to_json())

    @app.get("/projects/{pid}/bn/summary")
    async def bn_summary(pid: str):
        manifest = store.get(pid)
        if "bn" not in manifest["phases"]:
            raise PhaseOrderError("summary", "bn")
        summary = infer(_bn_model(pid))
        return json.loads(summary.to_json())

    @app.post("/projects/{pid}/bn/whatif")
    async def bn_whatif(pid: str, request: Request):
        body = await _json_body(request)
        manifest = store.get(pid)
        if "bn" not in manifest["phases"]:
            raise PhaseOrderError("whatif", "bn")
        mitigations = body.get("mitigations", body if body else {})
        portfolio = CountermeasurePortfolio(
            {str(k): float(v) for k, v in mitigations.items()})
        summary = what_if(_bn_model(pid), portfolio)
        with store.lock(pid):
            manifest = store.get(pid)
            manifest["portfolio_history"].append({
                "mitigations": portfolio.mitigations,
                "risk_score": summary.risk_score})
            store.save(pid, manifest)
        return json.loads(summary.to_json())

    @app.post("/projects/{pid}/refine")
    async def refine(pid: str, request: Request):
        body = await _json_body(request)
        note = body.get("note", "")
        with store.lock(pid):
            manifest = store.get(pid)
            _require_phase(manifest, "threat_model")
            run = _load_run(manifest)
            orch = _orchestrator(body)
            orch.cfg = run.cfg
            orch.refine(run, note)
            if "narration" in run.outputs:
                store.write_doc(pid, "narration.txt", run.outputs["narration"])
            if "threat_model" in run.outputs:
                store.write_doc(pid, "threat_model.json",
                                run.outputs["threat_model"])
            if "attack_tree" in run.outputs:
                store.write_doc(pid, "attack_tree.json",
                                run.outputs["attack_tree"])
            _save_run(pid, run, manifest)
            store.save(pid, manifest)
            narration = parse_narration(
                store.read_doc(pid, "narration.txt"),
                system_context=manifest["system_context"])
            return narration.to_dict()

    @app.get("/projects/{pid}/export/aml")
    async def export_aml(pid: str):
        manifest = store.get(pid)
        if "bn" not in manifest["phases"]:
            raise PhaseOrderError("export", "bn")
        xml = aml.encode(_bn_model(pid))
        return Response(content=xml, media_type="application/xml")

    @app.post("/eval/ablation")
    async def eval_ablation(request: Request):
        body = await _json_body(request)
        if "logs" not in body:
            raise ValidationError("missing required field 'logs'")
        logs = [RunLog(variant=d["variant"], case_name=d["case_name"],
                       run_index=d["run_index"], metrics=d["metrics"])
                for d in body["logs"]]
        try:
            report = aggregate(logs)
        except CpsRiskError as exc:
            raise ValidationError(str(exc))
        return report.to_dict()

    return app
