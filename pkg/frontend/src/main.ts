import { ApiClient, ServiceError, type TreeNode } from "./api.js";
import { createDashboard } from "./dashboard.js";
import { initialState, type Phase } from "./state.js";
import { ActivityLog } from "./transcript.js";
import { renderNarrationForm, renderStepper } from "./wizard.js";

const api = new ApiClient();
const state = initialState();

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
};

const log = new ActivityLog(el("transcript"));
let suggestions: string[] = [];
let narrationSections: Record<string, string[]> = {};
let tree: TreeNode | null = null;

function showError(err: unknown): void {
  const box = el("errors");
  box.textContent =
    err instanceof ServiceError ? `${err.status}: ${err.detail}` : String(err);
}

function refreshStepper(): void {
  renderStepper(el("stepper"), state.completedPhases, { onRun: runPhase });
}

function refreshNarration(): void {
  renderNarrationForm(el("narration"), narrationSections, suggestions, (note) => {
    void refine(note);
  });
}

async function refine(note: string): Promise<void> {
  if (!state.projectId) return;
  try {
    const narration = await api.refine(state.projectId, note, { mock: mockMode() });
    narrationSections = narration.sections;
    log.add("refine", note);
    refreshNarration();
  } catch (err) {
    showError(err);
  }
}

function mockMode(): boolean {
  return (el("mock-toggle") as HTMLInputElement).checked;
}

function paramsBody(): Record<string, unknown> {
  const raw = (el("params") as HTMLTextAreaElement).value.trim();
  return raw ? (JSON.parse(raw) as Record<string, unknown>) : {};
}

async function runPhase(phase: Phase): Promise<void> {
  if (!state.projectId) {
    showError(new Error("create a project first"));
    return;
  }
  const pid = state.projectId;
  const options = { mock: mockMode() };
  try {
    if (phase === "reconstruct") {
      const narration = await api.reconstruct(pid, options);
      narrationSections = narration.sections;
      state.completedPhases = ["reconstruct"];
      log.add("reconstruct", `${Object.keys(narration.sections).length} sections`);
      refreshNarration();
    } else if (phase === "threat_model") {
      const result = await api.threatModel(pid, options);
      suggestions = result.threat_model.arch_suggestions;
      if (!state.completedPhases.includes(phase)) state.completedPhases.push(phase);
      log.add("threat-model", JSON.stringify(result.threat_model, null, 2));
      refreshNarration();
    } else if (phase === "attack_tree") {
      tree = await api.attackTree(pid, options);
      if (!state.completedPhases.includes(phase)) state.completedPhases.push(phase);
      log.add("attack-tree", JSON.stringify(tree, null, 2));
    } else {
      await api.buildBn(pid, paramsBody());
      if (!state.completedPhases.includes(phase)) state.completedPhases.push(phase);
      log.add("bn-build", "network built");
      if (tree) createDashboard(el("dashboard"), api, pid, tree);
    }
    refreshStepper();
  } catch (err) {
    showError(err);
  }
}

el("create-project").addEventListener("click", () => {
  void (async () => {
    const name = (el("project-name") as HTMLInputElement).value || "untitled";
    const context = (el("system-context") as HTMLInputElement).value;
    try {
      const manifest = await api.createProject(name, context);
      state.projectId = manifest.id;
      state.completedPhases = [];
      el("project-id").textContent = manifest.id;
      log.add("project", manifest.id);
      refreshStepper();
    } catch (err) {
      showError(err);
    }
  })();
});

el("upload").addEventListener("change", (event) => {
  void (async () => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file || !state.projectId) return;
    try {
      const artifact = await api.uploadArtifact(state.projectId, file);
      log.add("artifact", `${file.name} (${artifact.sha256.slice(0, 12)})`);
    } catch (err) {
      showError(err);
    }
  })();
});

refreshStepper();
