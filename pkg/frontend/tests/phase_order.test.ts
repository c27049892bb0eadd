import { beforeEach, describe, expect, it, vi } from "vitest";

import { PHASE_ORDER, canRunPhase } from "../src/state.js";
import { renderStepper } from "../src/wizard.js";

function stepperButtons(completed: string[], onRun = vi.fn()) {
  const host = document.createElement("div");
  renderStepper(host, completed, { onRun });
  const buttons = new Map<string, HTMLButtonElement>();
  for (const b of host.querySelectorAll("button")) {
    buttons.set((b as HTMLButtonElement).dataset.phase ?? "", b as HTMLButtonElement);
  }
  return { buttons, onRun };
}

describe("phase ordering", () => {
  beforeEach(() => {
    document.body.textContent = "";
  });

  it("only reconstruct can run on a fresh project", () => {
    expect(canRunPhase([], "reconstruct")).toBe(true);
    for (const phase of PHASE_ORDER.slice(1)) {
      expect(canRunPhase([], phase)).toBe(false);
    }
  });

  it("attack tree stays disabled until threat modelling completes", () => {
    const { buttons } = stepperButtons(["reconstruct"]);
    expect(buttons.get("reconstruct")!.disabled).toBe(false);
    expect(buttons.get("threat_model")!.disabled).toBe(false);
    expect(buttons.get("attack_tree")!.disabled).toBe(true);
    expect(buttons.get("bn")!.disabled).toBe(true);
  });

  it("clicking the disabled attack-tree button triggers nothing", () => {
    const { buttons, onRun } = stepperButtons(["reconstruct"]);
    buttons.get("attack_tree")!.click();
    expect(onRun).not.toHaveBeenCalled();
  });

  it("attack tree unlocks once threats are modelled, risk stays locked", () => {
    const { buttons, onRun } = stepperButtons(["reconstruct", "threat_model"]);
    expect(buttons.get("attack_tree")!.disabled).toBe(false);
    expect(buttons.get("bn")!.disabled).toBe(true);
    buttons.get("attack_tree")!.click();
    expect(onRun).toHaveBeenCalledWith("attack_tree");
  });

  it("all phases run after the full chain completes", () => {
    const { buttons } = stepperButtons([...PHASE_ORDER]);
    for (const phase of PHASE_ORDER) {
      expect(buttons.get(phase)!.disabled).toBe(false);
    }
  });
});
