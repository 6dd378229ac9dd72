/**
 * Job lifecycle controller: one in-flight job per editor session, 1-second
 * status polling, stale responses discarded by job id, and a diagnostics
 * history so constraint choices can be compared across runs.
 *
 * The controller is deliberately free of DOM and fetch specifics: the API
 * and the timer are injected, which is also what makes it unit-testable.
 */

export interface JobDiagnostics {
  conformal_energy: number;
  correction_iterations: number;
  flipped_initial: number;
  output_width: number;
  output_height: number;
  [key: string]: unknown;
}

export interface MeshPayload {
  source_positions: Array<[number, number]>;
  positions: Array<[number, number]>;
  triangles: Array<[number, number, number]>;
  roles: number[];
}

export interface JobStatusBody {
  job_id: string;
  status: "queued" | "running" | "done" | "failed";
  spec?: { ratio?: number; [key: string]: unknown };
  diagnostics?: JobDiagnostics;
  error?: string;
  output_url?: string;
  density_url?: string;
  mesh?: MeshPayload;
}

export interface SubmitPayload {
  image: Blob | Uint8Array;
  spec: Record<string, unknown>;
  masks: Uint8Array[];
  lines?: string;
  params?: string;
}

export interface JobApi {
  submit(payload: SubmitPayload): Promise<{ job_id: string }>;
  status(jobId: string): Promise<JobStatusBody>;
}

export interface Scheduler {
  schedule(fn: () => void, ms: number): unknown;
  cancel(handle: unknown): void;
}

export type Phase = "idle" | "submitting" | "polling" | "done" | "failed";

export interface RunRecord {
  jobId: string;
  ratio: number;
  energy: number;
  iterations: number;
}

export interface ControllerState {
  phase: Phase;
  jobId: string | null;
  result: JobStatusBody | null;
  error: string | null;
  history: RunRecord[];
}

export const POLL_MS = 1000;

export class JobController {
  private api: JobApi;
  private scheduler: Scheduler;
  private onUpdate: (state: ControllerState) => void;
  private pollMs: number;

  private epoch = 0;
  private timer: unknown = null;
  private lastPayload: SubmitPayload | null = null;
  private submitCount = 0;

  state: ControllerState = { phase: "idle", jobId: null, result: null, error: null, history: [] };

  constructor(
    api: JobApi,
    onUpdate: (state: ControllerState) => void,
    scheduler: Scheduler = {
      schedule: (fn, ms) => setTimeout(fn, ms),
      cancel: (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
    },
    pollMs: number = POLL_MS,
  ) {
    this.api = api;
    this.scheduler = scheduler;
    this.onUpdate = onUpdate;
    this.pollMs = pollMs;
  }

  /** Number of submissions issued; one per run() call, ever. */
  get submissions(): number {
    return this.submitCount;
  }

  private emit(): void {
    this.onUpdate(this.state);
  }

  private stopTimer(): void {
    if (this.timer !== null) {
      this.scheduler.cancel(this.timer);
      this.timer = null;
    }
  }

  /**
   * Submit a new job. Any job still in flight is superseded: its polling
   * stops and late responses for it are dropped.
   */
  async run(payload: SubmitPayload): Promise<void> {
    const epoch = ++this.epoch;
    this.stopTimer();
    this.lastPayload = payload;
    this.submitCount++;
    this.state = { ...this.state, phase: "submitting", jobId: null, result: null, error: null };
    this.emit();
    let jobId: string;
    try {
      const r = await this.api.submit(payload);
      jobId = r.job_id;
    } catch (err) {
      if (epoch !== this.epoch) return; // superseded while submitting
      this.state = { ...this.state, phase: "failed", error: String(err) };
      this.emit();
      return;
    }
    if (epoch !== this.epoch) return; // superseded while submitting
    this.state = { ...this.state, phase: "polling", jobId };
    this.emit();
    this.schedulePoll(epoch, jobId);
  }

  /** Re-submit the last payload after a failure. */
  async retry(): Promise<void> {
    if (!this.lastPayload) return;
    await this.run(this.lastPayload);
  }

  private schedulePoll(epoch: number, jobId: string): void {
    this.timer = this.scheduler.schedule(() => {
      void this.poll(epoch, jobId);
    }, this.pollMs);
  }

  private async poll(epoch: number, jobId: string): Promise<void> {
    let body: JobStatusBody;
    try {
      body = await this.api.status(jobId);
    } catch (err) {
      if (epoch !== this.epoch || jobId !== this.state.jobId) return;
      this.state = { ...this.state, phase: "failed", error: String(err) };
      this.emit();
      return;
    }
    // a response for a superseded job must not touch the state
    if (epoch !== this.epoch || jobId !== this.state.jobId) return;
    if (body.status === "done") {
      const d = body.diagnostics;
      const record: RunRecord = {
        jobId,
        ratio: Number(body.spec?.ratio ?? NaN),
        energy: d ? d.conformal_energy : NaN,
        iterations: d ? d.correction_iterations : NaN,
      };
      this.state = {
        ...this.state,
        phase: "done",
        result: body,
        history: [...this.state.history, record],
      };
      this.emit();
    } else if (body.status === "failed") {
      this.state = { ...this.state, phase: "failed", result: body, error: body.error ?? "job failed" };
      this.emit();
    } else {
      this.schedulePoll(epoch, jobId);
    }
  }
}
