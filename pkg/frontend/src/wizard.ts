import { PHASE_ORDER, PHASE_TITLES, canRunPhase, type Phase } from "./state.js";

export interface StepperHandlers {
  onRun: (phase: Phase) => void;
}

/** Render the four-phase stepper. Buttons for phases whose prerequisites are
 * incomplete come out disabled, mirroring the service's own ordering rule. */
export function renderStepper(
  container: HTMLElement,
  completedPhases: readonly string[],
  handlers: StepperHandlers,
): void {
  container.textContent = "";
  const list = document.createElement("ol");
  list.className = "stepper";
  for (const phase of PHASE_ORDER) {
    const item = document.createElement("li");
    if (completedPhases.includes(phase)) item.classList.add("done");
    const button = document.createElement("button");
    button.type = "button";
    button.dataset.phase = phase;
    button.textContent = PHASE_TITLES[phase];
    button.disabled = !canRunPhase(completedPhases, phase);
    button.addEventListener("click", () => handlers.onRun(phase));
    item.appendChild(button);
    list.appendChild(item);
  }
  container.appendChild(list);
}

/** Render the seven narration sections as editable textareas plus the
 * refinement chips that post analyst notes back through the chain. */
export function renderNarrationForm(
  container: HTMLElement,
  sections: Record<string, string[]>,
  suggestions: readonly string[],
  onRefine: (note: string) => void,
): void {
  container.textContent = "";
  for (const [header, lines] of Object.entries(sections)) {
    const label = document.createElement("label");
    label.textContent = header;
    const area = document.createElement("textarea");
    area.dataset.section = header;
    area.value = lines.join("\n");
    label.appendChild(area);
    container.appendChild(label);
  }
  const chipRow = document.createElement("div");
  chipRow.className = "chips";
  for (const text of suggestions) {
    const chip = document.createElement("button");
    chip.type = "button";
    chip.className = "chip";
    chip.textContent = text;
    chip.addEventListener("click", () => onRefine(text));
    chipRow.appendChild(chip);
  }
  container.appendChild(chipRow);
}
