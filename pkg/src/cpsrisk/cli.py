"""Command-line interface mirroring the HTTP endpoints.

Exit codes: 0 success, 1 validation failure, 2 provider failure.
"""
from __future__ import annotations

import base64
import functools
import json
import mimetypes
import sys
from pathlib import Path

import click

from . import aml
from .attack_tree import validate_attack_tree
from .bn import BayesianRiskModel, NodeParams, build_model, infer, what_if
from .errors import CpsRiskError, GuardrailExhausted, ProviderError, ValidationError
from .narration import parse_narration
from .orchestrator import ChainRun, Orchestrator
from .providers import SamplingConfig
from .scoring import CountermeasurePortfolio
from .service import default_provider_factory
from .store import ProjectStore, UnknownProject
from .threat_model import validate_threat_model
from .zones import ZonePolicy, check_zone_plausibility

EXIT_VALIDATION = 1
EXIT_PROVIDER = 2


def _fail(message: str, code: int):
    click.echo(message, err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ProviderError, GuardrailExhausted) as exc:
            _fail(f"provider failure: {exc}", EXIT_PROVIDER)
        except UnknownProject as exc:
            _fail(f"unknown project or document: {exc.args[0]}", EXIT_VALIDATION)
        except (ValidationError, CpsRiskError, ValueError) as exc:
            _fail(str(exc), EXIT_VALIDATION)
    return wrapper


def provider_options(fn):
    fn = click.option("--provider", default="openai", show_default=True)(fn)
    fn = click.option("--model", default="default", show_default=True)(fn)
    fn = click.option("--temperature", type=float, default=0.1, show_default=True)(fn)
    fn = click.option("--top-p", type=float, default=0.9, show_default=True)(fn)
    fn = click.option("--mock", is_flag=True, help="Use the bundled scripted provider.")(fn)
    return fn


def _orchestrator(provider, model, temperature, top_p, mock) -> Orchestrator:
    options = {"provider": provider, "model": model, "mock": mock}
    cfg = SamplingConfig(temperature=temperature, top_p=top_p)
    return Orchestrator(default_provider_factory(options), cfg)


def _write_out(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=not text.endswith("\n"))


@click.group()
@click.option("--store", "store_root", default=".cpsrisk", show_default=True,
              envvar="CPSRISK_STORE", help="Project store directory.")
@click.pass_context
def main(ctx, store_root):
    """Security assessment workbench for cyber-physical systems."""
    ctx.obj = ProjectStore(store_root)


# -- project workflow ----------------------------------------------------------

@main.group()
def project():
    """Project lifecycle commands."""


@project.command("new")
@click.argument("name")
@click.option("--context", "system_context", default="",
              help="Free-text system context used in prompts.")
@click.pass_obj
@handle_errors
def project_new(store: ProjectStore, name, system_context):
    manifest = store.create(name, system_context)
    click.echo(manifest["id"])


@project.command("add-artifact")
@click.argument("project_id")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
@handle_errors
def project_add_artifact(store: ProjectStore, project_id, path):
    content_type = mimetypes.guess_type(path)[0] or "application/octet-stream"
    entry = store.add_artifact(project_id, Path(path).read_bytes(),
                               Path(path).name, content_type)
    click.echo(entry["sha256"])


def _load_run_cli(store: ProjectStore, manifest: dict, cfg: SamplingConfig) -> ChainRun:
    pid = manifest["id"]
    artifacts = [
        base64.b64encode(store.read_artifact(pid, a["sha256"])).decode("ascii")
        for a in manifest["artifacts"]]
    run = ChainRun.new(manifest["system_context"], cfg,
                       artifacts=artifacts, run_id=manifest["run_id"])
    if manifest["run_id"]:
        saved = json.loads(store.read_doc(pid, f"runs/{run.run_id}.json"))
        from .orchestrator import StepRecord
        run.steps = [StepRecord(
            name=s["name"], prompt=s["prompt"], response=s["response"],
            ok=s["ok"], violations=s["violations"], retries=s["retries"],
            image_count=s["image_count"]) for s in saved["steps"]]
        run.outputs = dict(saved["outputs"])
    return run


@project.command("reconstruct")
@click.argument("project_id")
@provider_options
@click.option("--policy", type=click.Path(exists=True, dir_okay=False),
              help="Zone policy YAML for plausibility warnings.")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def project_reconstruct(store: ProjectStore, project_id, provider, model,
                        temperature, top_p, mock, policy, out):
    manifest = store.get(project_id)
    if not manifest["artifacts"]:
        _fail("at least one artefact is required", EXIT_VALIDATION)
    orch = _orchestrator(provider, model, temperature, top_p, mock)
    run = _load_run_cli(store, manifest, orch.cfg)
    narration = orch.reconstruct(run)
    store.write_doc(project_id, "narration.txt", narration.render())
    run.save(store.runs_dir(project_id))
    manifest["run_id"] = run.run_id
    manifest["phases"] = ["reconstruct"]
    store.save(project_id, manifest)
    zone_policy = ZonePolicy.from_file(policy) if policy else ZonePolicy.default()
    for violation in check_zone_plausibility(narration, zone_policy):
        click.echo(f"warning: {violation}", err=True)
    _write_out(narration.render(), out)


@project.command("threats")
@click.argument("project_id")
@provider_options
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def project_threats(store: ProjectStore, project_id, provider, model,
                    temperature, top_p, mock, out):
    manifest = store.get(project_id)
    if "reconstruct" not in manifest["phases"]:
        _fail("run reconstruct first", EXIT_VALIDATION)
    narration = parse_narration(store.read_doc(project_id, "narration.txt"),
                                system_context=manifest["system_context"])
    orch = _orchestrator(provider, model, temperature, top_p, mock)
    run = _load_run_cli(store, manifest, orch.cfg)
    tm, warnings = orch.model_threats(run, narration)
    store.write_doc(project_id, "threat_model.json", tm.to_json())
    run.save(store.runs_dir(project_id))
    manifest["run_id"] = run.run_id
    if "threat_model" not in manifest["phases"]:
        manifest["phases"].append("threat_model")
    store.save(project_id, manifest)
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    _write_out(tm.to_json(), out)


@project.command("tree")
@click.argument("project_id")
@provider_options
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def project_tree(store: ProjectStore, project_id, provider, model,
                 temperature, top_p, mock, out):
    manifest = store.get(project_id)
    if "threat_model" not in manifest["phases"]:
        _fail("run threats first", EXIT_VALIDATION)
    tm, _ = validate_threat_model(store.read_doc(project_id, "threat_model.json"))
    orch = _orchestrator(provider, model, temperature, top_p, mock)
    run = _load_run_cli(store, manifest, orch.cfg)
    tree = orch.model_attack_tree(run, tm)
    store.write_doc(project_id, "attack_tree.json", tree.to_json())
    run.save(store.runs_dir(project_id))
    manifest["run_id"] = run.run_id
    if "attack_tree" not in manifest["phases"]:
        manifest["phases"].append("attack_tree")
    store.save(project_id, manifest)
    _write_out(tree.to_json(), out)


def _load_params(path: str | None) -> dict[str, NodeParams]:
    if not path:
        return {}
    raw = json.loads(Path(path).read_text())
    return {nid: NodeParams(**fields) for nid, fields in raw.items()}


@project.command("bn")
@click.argument("project_id")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file of per-node parameters.")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def project_bn(store: ProjectStore, project_id, params_path, out):
    """Build the risk network and print the inferred summary."""
    manifest = store.get(project_id)
    if "attack_tree" not in manifest["phases"]:
        _fail("run tree first", EXIT_VALIDATION)
    tree, violations = validate_attack_tree(
        store.read_doc(project_id, "attack_tree.json"))
    if tree is None:
        _fail("; ".join(str(v) for v in violations), EXIT_VALIDATION)
    model = build_model(tree, _load_params(params_path))
    store.write_doc(project_id, "bn.json", model.to_json())
    if "bn" not in manifest["phases"]:
        manifest["phases"].append("bn")
    store.save(project_id, manifest)
    summary = infer(model)
    click.echo(f"Risk Score: {summary.risk_score:.2f}%")
    _write_out(summary.to_json(), out)


@project.command("whatif")
@click.argument("project_id")
@click.option("--portfolio", "portfolio_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON file of per-vulnerability mitigation factors.")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def project_whatif(store: ProjectStore, project_id, portfolio_path, out):
    manifest = store.get(project_id)
    if "bn" not in manifest["phases"]:
        _fail("run bn first", EXIT_VALIDATION)
    raw = json.loads(Path(portfolio_path).read_text())
    mitigations = raw.get("mitigations", raw) if isinstance(raw, dict) else raw
    portfolio = CountermeasurePortfolio(
        {str(k): float(v) for k, v in mitigations.items()})
    model = BayesianRiskModel.from_dict(
        json.loads(store.read_doc(project_id, "bn.json")))
    summary = what_if(model, portfolio)
    _write_out(summary.to_json(), out)


@project.command("export")
@click.argument("project_id")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def project_export(store: ProjectStore, project_id, out):
    manifest = store.get(project_id)
    if "bn" not in manifest["phases"]:
        _fail("run bn first", EXIT_VALIDATION)
    model = BayesianRiskModel.from_dict(
        json.loads(store.read_doc(project_id, "bn.json")))
    _write_out(aml.encode(model), out)


@project.command("run")
@click.argument("project_id")
@provider_options
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@handle_errors
def project_run(ctx, project_id, provider, model, temperature, top_p, mock,
                params_path):
    """Run the full pipeline: reconstruct, threats, tree, risk network."""
    common = dict(provider=provider, model=model, temperature=temperature,
                  top_p=top_p, mock=mock)
    ctx.invoke(project_reconstruct, project_id=project_id, policy=None,
               out=None, **common)
    ctx.invoke(project_threats, project_id=project_id, out=None, **common)
    ctx.invoke(project_tree, project_id=project_id, out=None, **common)
    ctx.invoke(project_bn, project_id=project_id, params_path=params_path,
               out=None)


# -- evaluation ----------------------------------------------------------------

@main.group("eval")
def eval_group():
    """Ablation evaluation commands."""


@eval_group.command("ablate")
@click.option("--logs", "logs_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON-lines run-log file.")
@click.option("--out", type=click.Path(dir_okay=False),
              help="Write the JSON report here; the text table always prints.")
@handle_errors
def eval_ablate(logs_path, out):
    from .evalharness import aggregate, load_run_logs
    report = aggregate(load_run_logs(logs_path))
    if out:
        Path(out).write_text(report.to_json(), encoding="utf-8")
    click.echo(report.to_text(), nl=False)


# -- validation ----------------------------------------------------------------

@main.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def validate_file(path, policy):
    """Validate a narration, threat-model, or attack-tree document."""
    text = Path(path).read_text(encoding="utf-8")
    kind = _detect_kind(text)
    if kind == "attack_tree":
        tree, violations = validate_attack_tree(text)
        for v in violations:
            click.echo(str(v), err=True)
        if tree is None or violations:
            sys.exit(EXIT_VALIDATION)
        click.echo(f"attack tree ok: {len(tree.nodes)} nodes")
    elif kind == "threat_model":
        tm, warnings = validate_threat_model(text)
        for w in warnings:
            click.echo(f"warning: {w}", err=True)
        click.echo(f"threat model ok: {len(tm.scenarios)} scenarios")
    else:
        narration = parse_narration(text)
        zone_policy = ZonePolicy.from_file(policy) if policy else ZonePolicy.default()
        violations = check_zone_plausibility(narration, zone_policy)
        for v in violations:
            click.echo(f"warning: {v}", err=True)
        click.echo(f"narration ok: {len(narration.sections)} sections")


def _detect_kind(text: str) -> str:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return "narration"
    if isinstance(doc, dict) and "nodes" in doc:
        return "attack_tree"
    return "threat_model"


# -- service -------------------------------------------------------------------

@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.pass_obj
def serve(store: ProjectStore, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(store.root), host=host, port=port)


if __name__ == "__main__":
    main()
