import type { ApiClient, RiskSummary, TreeNode } from "./api.js";
import { formatAvailability, formatProbability, formatRisk } from "./format.js";
import { renderTreeGraph, vulnerabilityIds } from "./tree.js";
import { WhatIfRunner } from "./whatif.js";

/** Build the what-if dashboard: one slider per vulnerability node, gauges fed
 * verbatim from service responses, the exposure-coloured tree, and a history
 * panel of tried portfolios. */
export function createDashboard(
  container: HTMLElement,
  api: ApiClient,
  projectId: string,
  tree: TreeNode,
  debounceMs?: number,
): WhatIfRunner {
  container.textContent = "";

  const gauges = document.createElement("div");
  gauges.className = "gauges";
  const riskEl = gauge(gauges, "Risk Score", "risk");
  const attackEl = gauge(gauges, "P(successful attack)", "p-attack");
  const impactEl = gauge(gauges, "P(severe impact)", "p-impact");
  const availEl = gauge(gauges, "System availability", "availability");
  container.appendChild(gauges);

  const errorEl = document.createElement("p");
  errorEl.className = "error";
  errorEl.dataset.role = "error";
  container.appendChild(errorEl);

  const graphEl = document.createElement("div");
  graphEl.className = "tree-graph";
  container.appendChild(graphEl);

  const sliderPanel = document.createElement("div");
  sliderPanel.className = "sliders";
  container.appendChild(sliderPanel);

  const historyEl = document.createElement("ol");
  historyEl.className = "history";
  historyEl.dataset.role = "history";
  container.appendChild(historyEl);

  const portfolio: Record<string, number> = {};
  for (const vul of vulnerabilityIds(tree)) portfolio[vul] = 1.0;

  const runner = new WhatIfRunner(
    api,
    projectId,
    (summary) => {
      render(summary);
      renderHistory();
    },
    (err) => {
      errorEl.textContent = err instanceof Error ? err.message : String(err);
    },
    debounceMs,
  );

  function render(summary: RiskSummary): void {
    errorEl.textContent = "";
    riskEl.textContent = formatRisk(summary.risk_score);
    attackEl.textContent = formatProbability(summary.p_successful_attack);
    impactEl.textContent = formatProbability(summary.p_severe_impact);
    availEl.textContent = formatAvailability(summary.system_availability);
    renderTreeGraph(graphEl, tree, summary);
  }

  function renderHistory(): void {
    historyEl.textContent = "";
    for (const entry of runner.history) {
      const item = document.createElement("li");
      const knobs = Object.entries(entry.mitigations)
        .map(([k, v]) => `${k}=${v.toFixed(1)}`)
        .join(", ");
      item.textContent = `${knobs || "baseline"}: ${formatRisk(entry.summary.risk_score)}`;
      historyEl.appendChild(item);
    }
  }

  for (const vul of Object.keys(portfolio)) {
    const label = document.createElement("label");
    label.textContent = vul;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.1";
    slider.value = "1";
    slider.dataset.vul = vul;
    slider.addEventListener("input", () => {
      portfolio[vul] = Number(slider.value);
      runner.request(portfolio);
    });
    label.appendChild(slider);
    sliderPanel.appendChild(label);
  }

  // baseline render: all sliders at 1.0 equals the unmitigated summary
  void runner.dispatch({ ...portfolio });
  return runner;
}

function gauge(parent: HTMLElement, title: string, role: string): HTMLElement {
  const box = document.createElement("div");
  box.className = "gauge";
  const caption = document.createElement("span");
  caption.textContent = title;
  const value = document.createElement("strong");
  value.dataset.role = role;
  value.textContent = "--";
  box.appendChild(caption);
  box.appendChild(value);
  parent.appendChild(box);
  return value;
}
