/** Wizard phase bookkeeping. The service is authoritative (it answers 409 on
 * out-of-order requests); the UI mirrors the same order so that buttons for
 * unreachable phases are disabled rather than clickable-and-failing. */

export const PHASE_ORDER = ["reconstruct", "threat_model", "attack_tree", "bn"] as const;

export type Phase = (typeof PHASE_ORDER)[number];

export const PHASE_TITLES: Record<Phase, string> = {
  reconstruct: "Reconstruct",
  threat_model: "Threats",
  attack_tree: "Attack Tree",
  bn: "Risk",
};

/** A phase may run when every earlier phase has completed. Re-running a
 * completed phase is always allowed (it resets downstream state server-side). */
export function canRunPhase(completed: readonly string[], phase: Phase): boolean {
  const idx = PHASE_ORDER.indexOf(phase);
  return PHASE_ORDER.slice(0, idx).every((p) => completed.includes(p));
}

export interface WorkbenchState {
  projectId: string | null;
  completedPhases: string[];
  portfolioDraft: Record<string, number>;
  lastSummary: import("./api.js").RiskSummary | null;
}

export function initialState(): WorkbenchState {
  return { projectId: null, completedPhases: [], portfolioDraft: {}, lastSummary: null };
}
