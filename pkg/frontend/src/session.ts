/**
 * Session panel controller: one in-flight job per session, mirroring the
 * server's 409 rule. UI widgets subscribe to the state and the trace tail;
 * the controller never holds shape state beyond the last reported code.
 */

import {
  ApiClient,
  ApiError,
  CameraParams,
  EditRequest,
  JobStatus,
  ReconstructRequest,
  TracePoint,
} from "./api.js";

export type PanelPhase = "no-session" | "idle" | "running";

export interface PanelSnapshot {
  phase: PanelPhase;
  sessionId: string | null;
  code: number[] | null;
  historyDepth: number;
  trace: TracePoint[];
  lastError: string | null;
  lastLocality: number | null;
}

type Listener = (snapshot: PanelSnapshot) => void;

export class SessionPanel {
  private phase: PanelPhase = "no-session";
  private sessionId: string | null = null;
  private code: number[] | null = null;
  private historyDepth = 0;
  private trace: TracePoint[] = [];
  private lastError: string | null = null;
  private lastLocality: number | null = null;
  private listeners: Listener[] = [];

  constructor(private api: ApiClient, private pollIntervalMs = 250) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.snapshot());
  }

  snapshot(): PanelSnapshot {
    return {
      phase: this.phase,
      sessionId: this.sessionId,
      code: this.code ? [...this.code] : null,
      historyDepth: this.historyDepth,
      trace: [...this.trace],
      lastError: this.lastError,
      lastLocality: this.lastLocality,
    };
  }

  get canSubmit(): boolean {
    return this.phase === "idle";
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const l of this.listeners) l(snap);
  }

  private async refreshInfo(): Promise<void> {
    if (!this.sessionId) return;
    const info = await this.api.sessionInfo(this.sessionId);
    this.code = info.code;
    this.historyDepth = info.history_depth;
  }

  async createSession(templateId: string, camera: CameraParams): Promise<string> {
    const { session_id } = await this.api.createSession(templateId, camera);
    this.sessionId = session_id;
    this.phase = "idle";
    this.lastError = null;
    this.trace = [];
    await this.refreshInfo();
    this.emit();
    return session_id;
  }

  private async runJob(start: () => Promise<{ job_id: string }>): Promise<JobStatus | null> {
    if (!this.sessionId) throw new Error("no session");
    if (this.phase !== "idle") return null; // mirrors the server's 409
    this.phase = "running";
    this.trace = [];
    this.lastError = null;
    this.emit();
    try {
      const { job_id } = await start();
      const status = await this.api.pollJob(
        this.sessionId,
        job_id,
        (s) => {
          this.trace = s.trace_tail;
          this.emit();
        },
        this.pollIntervalMs
      );
      if (status.status === "error") {
        this.lastError = status.error;
      } else if (status.result) {
        this.code = status.result.code;
        this.lastLocality = status.result.locality
          ? status.result.locality.far_region_normal_change
          : null;
      }
      await this.refreshInfo();
      return status;
    } catch (e) {
      if (e instanceof ApiError && e.status === 409) {
        this.lastError = "a job is already running";
        return null;
      }
      this.lastError = e instanceof Error ? e.message : String(e);
      return null;
    } finally {
      this.phase = "idle";
      this.emit();
    }
  }

  reconstruct(req: ReconstructRequest): Promise<JobStatus | null> {
    return this.runJob(() => this.api.reconstruct(this.sessionId!, req));
  }

  edit(req: EditRequest): Promise<JobStatus | null> {
    return this.runJob(() => this.api.edit(this.sessionId!, req));
  }

  async undo(): Promise<void> {
    if (!this.sessionId || this.phase !== "idle") return;
    try {
      const { code } = await this.api.undo(this.sessionId);
      this.code = code;
      await this.refreshInfo();
      this.lastError = null;
    } catch (e) {
      this.lastError = e instanceof Error ? e.message : String(e);
    }
    this.emit();
  }
}

/** Scale a loss trace into unit-square polyline points for plotting. */
export function tracePolyline(trace: TracePoint[]): Array<[number, number]> {
  if (trace.length === 0) return [];
  const losses = trace.map((t) => t.loss);
  const lo = Math.min(...losses);
  const hi = Math.max(...losses);
  const span = hi - lo || 1;
  const n = trace.length;
  return trace.map((t, i) => [
    n === 1 ? 0 : i / (n - 1),
    1 - (t.loss - lo) / span,
  ]);
}
