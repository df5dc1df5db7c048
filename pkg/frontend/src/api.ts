/**
 * Typed client for the session service's /v1 API. All shape state lives on
 * the server; this client only moves images, codes and job status around.
 */

export interface CameraParams {
  azimuth_deg: number;
  elevation_deg: number;
  distance: number;
  focal_px: number;
  width: number;
  height: number;
}

export interface SessionInfo {
  session_id: string;
  template_id: string;
  camera: CameraParams;
  code: number[];
  history_depth: number;
  job: JobStatus | null;
}

export interface TracePoint {
  step: number;
  loss: number;
}

export interface EditLocality {
  far_region_normal_change: number;
  stroke_chamfer_before: number;
  stroke_chamfer_after: number;
}

export interface JobResult {
  code: number[];
  final_loss: number;
  steps_run: number;
  locality?: EditLocality;
}

export interface JobStatus {
  job_id: string;
  status: "running" | "done" | "error" | "cancelled";
  step: number;
  loss: number | null;
  trace_tail: TracePoint[];
  result: JobResult | null;
  error: string | null;
}

export interface ReconstructRequest {
  sketch_png: string;
  objective?: "chamfer" | "silhouette";
  steps?: number;
  n_starts?: number;
  seed?: number;
}

export interface EditRequest {
  stroke_png: string;
  camera?: CameraParams;
  t?: number;
  lambda_mask?: number;
  lambda_normal?: number;
  steps?: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private fetchFn: typeof fetch = fetch
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  listTemplates(): Promise<{ templates: string[] }> {
    return this.request("/v1/templates");
  }

  createSession(templateId: string, camera: CameraParams): Promise<{ session_id: string }> {
    return this.post("/v1/sessions", { template_id: templateId, camera });
  }

  sessionInfo(sessionId: string): Promise<SessionInfo> {
    return this.request(`/v1/sessions/${sessionId}`);
  }

  reconstruct(sessionId: string, req: ReconstructRequest): Promise<{ job_id: string }> {
    return this.post(`/v1/sessions/${sessionId}/reconstruct`, req);
  }

  edit(sessionId: string, req: EditRequest): Promise<{ job_id: string }> {
    return this.post(`/v1/sessions/${sessionId}/edit`, req);
  }

  jobStatus(sessionId: string, jobId: string): Promise<JobStatus> {
    return this.request(`/v1/sessions/${sessionId}/jobs/${jobId}`);
  }

  cancelJob(sessionId: string, jobId: string): Promise<{ job_id: string; status: string }> {
    return this.post(`/v1/sessions/${sessionId}/jobs/${jobId}/cancel`);
  }

  undo(sessionId: string): Promise<{ code: number[] }> {
    return this.post(`/v1/sessions/${sessionId}/undo`);
  }

  async fetchMeshObj(sessionId: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/v1/sessions/${sessionId}/mesh?format=obj`);
    if (!response.ok) await parseError(response);
    return await response.text();
  }

  renderUrl(sessionId: string, azDeg: number, elDeg: number, kind: "normal" | "mask"): string {
    return `${this.baseUrl}/v1/sessions/${sessionId}/render?az=${azDeg}&el=${elDeg}&kind=${kind}`;
  }

  /**
   * Poll a job until it leaves the running state. `onProgress` receives
   * every status snapshot (monotone step index).
   */
  async pollJob(
    sessionId: string,
    jobId: string,
    onProgress?: (status: JobStatus) => void,
    intervalMs = 250,
    timeoutMs = 600000
  ): Promise<JobStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.jobStatus(sessionId, jobId);
      if (onProgress) onProgress(status);
      if (status.status !== "running") return status;
      if (Date.now() > deadline) throw new ApiError(408, "job polling timed out");
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
