/** Typed client for the assessment service. Every number the UI shows comes
 * from these responses; the client performs no risk arithmetic of its own. */

export interface RiskSummary {
  p_successful_attack: number;
  p_severe_impact: number;
  risk_score: number;
  system_availability: number;
  per_node: Record<string, { p_exposure: number; p_severe_impact: number }>;
}

export interface Narration {
  sections: Record<string, string[]>;
  source_artifact_ids: string[];
  system_context: string;
}

export interface ThreatModelResponse {
  threat_model: { threats: unknown[]; arch_suggestions: string[] };
  warnings: string[];
}

export interface TreeNode {
  id: string;
  label?: string;
  children?: TreeNode[];
}

export interface ProjectManifest {
  id: string;
  name: string;
  system_context: string;
  artifacts: { sha256: string; filename: string }[];
  phases: string[];
  portfolio_history: { mitigations: Record<string, number>; risk_score: number }[];
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(detail);
  }
}

async function unwrap<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      /* non-JSON error body: keep the status text */
    }
    throw new ServiceError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => unwrap<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.base + path).then((r) => unwrap<T>(r));
  }

  createProject(name: string, systemContext: string): Promise<ProjectManifest> {
    return this.post("/projects", { name, system_context: systemContext });
  }

  getProject(pid: string): Promise<ProjectManifest> {
    return this.get(`/projects/${pid}`);
  }

  uploadArtifact(pid: string, file: File): Promise<{ sha256: string }> {
    const form = new FormData();
    form.append("file", file);
    return this.fetchFn(this.base + `/projects/${pid}/artifacts`, {
      method: "POST",
      body: form,
    }).then((r) => unwrap(r));
  }

  reconstruct(pid: string, options: Record<string, unknown> = {}): Promise<Narration> {
    return this.post(`/projects/${pid}/reconstruct`, options);
  }

  threatModel(pid: string, options: Record<string, unknown> = {}): Promise<ThreatModelResponse> {
    return this.post(`/projects/${pid}/threat-model`, options);
  }

  attackTree(pid: string, options: Record<string, unknown> = {}): Promise<TreeNode> {
    return this.post(`/projects/${pid}/attack-tree`, options);
  }

  buildBn(pid: string, params: Record<string, unknown>): Promise<unknown> {
    return this.post(`/projects/${pid}/bn/build`, { params });
  }

  summary(pid: string): Promise<RiskSummary> {
    return this.get(`/projects/${pid}/bn/summary`);
  }

  whatIf(pid: string, mitigations: Record<string, number>): Promise<RiskSummary> {
    return this.post(`/projects/${pid}/bn/whatif`, { mitigations });
  }

  refine(pid: string, note: string, options: Record<string, unknown> = {}): Promise<Narration> {
    return this.post(`/projects/${pid}/refine`, { note, ...options });
  }
}
