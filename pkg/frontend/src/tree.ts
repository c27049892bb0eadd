import type { RiskSummary, TreeNode } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

interface Placed {
  id: string;
  label: string;
  x: number;
  y: number;
}

/** Flatten the canonical tree JSON (inline definitions, id-only references)
 * into nodes-by-depth plus an edge list. */
export function layoutTree(root: TreeNode): { nodes: Placed[]; edges: [string, string][] } {
  const byDepth = new Map<number, Placed[]>();
  const edges: [string, string][] = [];
  const seen = new Set<string>();

  const walk = (node: TreeNode, depth: number): void => {
    if (!seen.has(node.id)) {
      seen.add(node.id);
      const row = byDepth.get(depth) ?? [];
      row.push({ id: node.id, label: node.label ?? node.id, x: 0, y: 0 });
      byDepth.set(depth, row);
    }
    for (const child of node.children ?? []) {
      edges.push([node.id, child.id]);
      walk(child, depth + 1);
    }
  };
  walk(root, 0);

  const nodes: Placed[] = [];
  for (const [depth, row] of byDepth) {
    row.forEach((n, i) => {
      n.x = (i + 1) * (800 / (row.length + 1));
      n.y = 50 + depth * 90;
      nodes.push(n);
    });
  }
  return { nodes, edges };
}

/** Map posterior exposure onto a white-to-red fill. */
export function exposureColour(p: number): string {
  const clamped = Math.min(1, Math.max(0, p));
  const channel = Math.round(235 - clamped * 180);
  return `rgb(255, ${channel}, ${channel})`;
}

export function renderTreeGraph(
  container: HTMLElement,
  tree: TreeNode,
  summary: RiskSummary | null,
): void {
  container.textContent = "";
  const { nodes, edges } = layoutTree(tree);
  const height = Math.max(...nodes.map((n) => n.y)) + 60;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 800 ${height}`);

  const at = new Map(nodes.map((n) => [n.id, n]));
  for (const [from, to] of edges) {
    const a = at.get(from);
    const b = at.get(to);
    if (!a || !b) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("stroke", "#999");
    svg.appendChild(line);
  }
  for (const node of nodes) {
    const group = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(node.x));
    circle.setAttribute("cy", String(node.y));
    circle.setAttribute("r", "22");
    const posterior = summary?.per_node[node.id]?.p_exposure ?? 0;
    circle.setAttribute("fill", exposureColour(posterior));
    circle.setAttribute("stroke", "#333");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${node.label}\nP(exposed) = ${posterior.toFixed(4)}`;
    circle.appendChild(title);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(node.x));
    text.setAttribute("y", String(node.y + 38));
    text.setAttribute("text-anchor", "middle");
    text.setAttribute("font-size", "11");
    text.textContent = node.id;
    group.appendChild(circle);
    group.appendChild(text);
    svg.appendChild(group);
  }
  container.appendChild(svg);
}

/** Collect vulnerability node ids (label class "[Vnn]") for slider creation. */
export function vulnerabilityIds(root: TreeNode): string[] {
  const out = new Set<string>();
  const walk = (node: TreeNode): void => {
    if (node.label && /^\[V\d\d\]/.test(node.label)) out.add(node.id);
    for (const child of node.children ?? []) walk(child);
  };
  walk(root);
  return [...out].sort();
}
