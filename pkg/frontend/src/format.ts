/** Display formatting only. The values fed in are taken verbatim from
 * service responses; nothing here recomputes risk. */

export function formatRisk(riskScore: number): string {
  return `${riskScore.toFixed(2)}%`;
}

export function formatProbability(p: number): string {
  return p.toFixed(4);
}

export function formatAvailability(pct: number): string {
  return `${pct.toFixed(2)}%`;
}
