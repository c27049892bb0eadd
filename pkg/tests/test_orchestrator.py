import json

import pytest

from cpsrisk.bn import infer
from cpsrisk.errors import GuardrailExhausted, ProviderError
from cpsrisk.fixtures import (
    frostygoop_artifact_b64,
    frostygoop_model,
    frostygoop_params,
    frostygoop_provider,
    frostygoop_script,
)
from cpsrisk.orchestrator import (
    RETRY_PREAMBLE,
    ChainRun,
    Orchestrator,
    render_prompt,
)
from cpsrisk.providers import MockProvider, SamplingConfig, ScriptedProvider
from cpsrisk import aml


def fresh_run() -> ChainRun:
    return ChainRun.new("Municipal district heating system", SamplingConfig(),
                        artifacts=[frostygoop_artifact_b64()])


def test_prompt_templates_render():
    for name, slots in [
        ("reconstruct", dict(system_context="x", temperature=0.1, top_p=0.9)),
        ("threat_model", dict(system_context="x", temperature=0.1, top_p=0.9,
                              narration="n")),
        ("attack_tree", dict(system_context="x", temperature=0.1, top_p=0.9,
                             threat_model="{}")),
        ("judge", dict(narration="n")),
    ]:
        text = render_prompt(name, **slots)
        assert text.strip()
        assert "{system_context}" not in text


def test_full_pipeline_on_fixture():
    provider = frostygoop_provider()
    orch = Orchestrator(provider)
    run = fresh_run()
    narration = orch.reconstruct(run)
    threats, warnings = orch.model_threats(run, narration)
    assert warnings == []
    tree = orch.model_attack_tree(run, threats)
    xml = orch.build_aml_via_chain(run, tree, frostygoop_params())
    assert "aml_divergence" not in run.outputs
    model = aml.decode(xml)
    assert model == frostygoop_model()
    assert f"{infer(model).risk_score:.2f}" == "21.12"
    assert [s.name for s in run.steps] == [
        "reconstruct", "threat_model", "attack_tree",
        "aml_blocks", "aml_edges", "aml_interfaces", "aml_finalise"]
    assert all(s.ok and s.retries == 0 for s in run.steps)


def test_reconstruct_requires_artifacts():
    orch = Orchestrator(frostygoop_provider())
    run = ChainRun.new("ctx", SamplingConfig())
    with pytest.raises(ValueError):
        orch.reconstruct(run)


def test_retry_appends_violations_verbatim():
    script = frostygoop_script()
    good = script["reconstruct"][0]
    provider = MockProvider({**script,
                             "reconstruct": ["free text commentary", good]})
    orch = Orchestrator(provider)
    run = fresh_run()
    orch.reconstruct(run)
    assert len(run.steps) == 2
    first, second = run.steps
    assert not first.ok and first.retries == 0
    assert second.ok and second.retries == 1
    assert RETRY_PREAMBLE in second.prompt
    # the validator's message appears verbatim in the corrective prompt
    assert first.violations[0] in second.prompt


def test_guardrails_exhausted_after_max_retries():
    script = dict(frostygoop_script(), reconstruct=["still not a narration"])
    orch = Orchestrator(MockProvider(script), max_retries=2)
    run = fresh_run()
    with pytest.raises(GuardrailExhausted) as exc_info:
        orch.reconstruct(run)
    assert len(run.steps) == 3          # initial try + 2 retries
    assert exc_info.value.violations


def test_aml_divergence_falls_back_to_deterministic_encode():
    script = frostygoop_script()
    # break the final chain step: syntactically valid AML of the wrong model
    wrong = script["aml_finalise"][0].replace(
        "<Value>0.0159</Value>", "<Value>0.5159</Value>", 1)
    assert wrong != script["aml_finalise"][0]
    provider = MockProvider({**script, "aml_finalise": [wrong]})
    orch = Orchestrator(provider)
    run = fresh_run()
    narration = orch.reconstruct(run)
    threats, _ = orch.model_threats(run, narration)
    tree = orch.model_attack_tree(run, threats)
    xml = orch.build_aml_via_chain(run, tree, frostygoop_params())
    assert "aml_divergence" in run.outputs
    assert aml.decode(xml) == frostygoop_model()


def test_transcript_serialises_and_saves(tmp_path):
    provider = frostygoop_provider()
    orch = Orchestrator(provider)
    run = fresh_run()
    orch.reconstruct(run)
    path = run.save(tmp_path)
    saved = json.loads(path.read_text())
    assert saved["run_id"] == run.run_id
    assert saved["steps"][0]["name"] == "reconstruct"
    assert saved["outputs"]["narration"]
    assert saved["sampling"] == {"temperature": 0.1, "top_p": 0.9}


def test_refine_empty_note_is_noop():
    orch = Orchestrator(frostygoop_provider())
    run = fresh_run()
    orch.reconstruct(run)
    before = dict(run.outputs)
    orch.refine(run, "   ")
    assert run.outputs == before
    assert run.steps[-1].name == "refine"


def test_refine_replays_completed_phases():
    orch = Orchestrator(frostygoop_provider())
    run = fresh_run()
    narration = orch.reconstruct(run)
    orch.model_threats(run, narration)
    orch.refine(run, "add the safety system")
    names = [s.name for s in run.steps]
    assert names == ["reconstruct", "threat_model", "reconstruct", "threat_model"]
    # the practitioner note reaches the new reconstruction prompt
    assert "add the safety system" in run.steps[2].prompt


def test_mock_provider_dispatch_and_exhaustion():
    provider = MockProvider({"judge": ["4", "5"]})
    cfg = SamplingConfig()
    assert provider.complete("p", cfg=cfg, step="judge") == "4"
    assert provider.complete("p", cfg=cfg, step="judge") == "5"
    # repeats the last response once exhausted
    assert provider.complete("p", cfg=cfg, step="judge") == "5"
    with pytest.raises(ProviderError):
        provider.complete("p", cfg=cfg, step="unknown")


def test_scripted_provider_order():
    provider = ScriptedProvider(["a", "b"])
    assert provider.complete("p1") == "a"
    assert provider.complete("p2") == "b"
    with pytest.raises(ProviderError):
        provider.complete("p3")


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(temperature=-0.1)
    with pytest.raises(ValueError):
        SamplingConfig(top_p=0.0)
    with pytest.raises(ValueError):
        SamplingConfig(top_p=1.5)
