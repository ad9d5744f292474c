import { HttpError, ServiceClient } from "./api.js";
import type {
  Candidate,
  Decision,
  IterationMessage,
  SessionRequest,
  SessionResult,
  SessionState,
} from "./types.js";

export interface ViewModel {
  sessionId: string | null;
  phase: string;
  /** latest iteration message (kept visible while the next one computes) */
  message: IterationMessage | null;
  /** candidates of the pending choice, sorted ascending by fit_error */
  candidates: Candidate[];
  /** true while a decision post is in flight (buttons disabled) */
  posting: boolean;
  /** peak <= 1 in the latest iteration (robustness verdict) */
  converged: boolean;
  connectionLost: boolean;
  error: string | null;
  result: SessionResult | null;
}

export type Listener = (vm: ViewModel) => void;

const TERMINAL = new Set(["done", "failed"]);

/** Drives one session: polls state, forwards decisions, exposes a view
 * model. All timing is injectable so tests can run it synchronously. */
export class SessionController {
  private vm: ViewModel = {
    sessionId: null,
    phase: "idle",
    message: null,
    candidates: [],
    posting: false,
    converged: false,
    connectionLost: false,
    error: null,
    result: null,
  };
  private stopped = false;
  private generation = 0;

  constructor(
    private readonly client: ServiceClient,
    private readonly listener: Listener,
    private readonly pollMs: number = 1000,
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((r) => setTimeout(r, ms)),
  ) {}

  snapshot(): ViewModel {
    return { ...this.vm, candidates: [...this.vm.candidates] };
  }

  private emit(patch: Partial<ViewModel>): void {
    this.vm = { ...this.vm, ...patch };
    this.listener(this.snapshot());
  }

  async start(request: SessionRequest): Promise<void> {
    const { id } = await this.client.createSession(request);
    await this.attach(id);
  }

  /** Resume polling an existing session (also the connection-loss retry
   * path: the id is never discarded on network failure). */
  async attach(id: string): Promise<void> {
    this.stopped = false;
    this.emit({ sessionId: id, phase: "connecting", connectionLost: false });
    await this.pollLoop(++this.generation);
  }

  private async pollLoop(gen: number): Promise<void> {
    while (!this.stopped && gen === this.generation) {
      let state: SessionState;
      try {
        state = await this.client.getState(this.vm.sessionId!);
      } catch (e) {
        if (e instanceof HttpError) {
          this.emit({ phase: "failed", error: e.detail });
          return;
        }
        // network-level failure: keep the session id, show the banner
        this.emit({ connectionLost: true });
        return;
      }
      this.applyState(state);
      if (TERMINAL.has(state.phase)) {
        if (state.phase === "done") await this.loadResult();
        return;
      }
      await this.sleep(this.pollMs);
    }
  }

  private applyState(state: SessionState): void {
    const msg = state.message ?? this.vm.message;
    const candidates =
      state.phase === "awaiting_choice" && msg
        ? [...msg.candidates].sort((a, b) => a.fit_error - b.fit_error)
        : [];
    this.emit({
      phase: state.phase,
      message: msg,
      candidates,
      converged: msg !== null && msg.peak <= 1.0,
      connectionLost: false,
      error: state.error,
    });
  }

  private async loadResult(): Promise<void> {
    try {
      const result = await this.client.getResult(this.vm.sessionId!);
      this.emit({ result, converged: result.converged });
    } catch (e) {
      if (e instanceof HttpError) this.emit({ error: e.detail });
      else this.emit({ connectionLost: true });
    }
  }

  async decide(decision: Decision): Promise<void> {
    if (this.vm.posting || this.vm.sessionId === null) return;
    this.emit({ posting: true });
    try {
      await this.client.postChoice(this.vm.sessionId, decision);
    } catch (e) {
      if (e instanceof HttpError && e.status === 409) {
        // someone else (or a stop) consumed the pending choice: re-sync
      } else if (e instanceof HttpError) {
        this.emit({ posting: false, error: e.detail });
        return;
      } else {
        this.emit({ posting: false, connectionLost: true });
        return;
      }
    }
    this.emit({ posting: false });
    try {
      this.applyState(await this.client.getState(this.vm.sessionId));
    } catch {
      this.emit({ connectionLost: true });
    }
  }

  /** Retry after a connection loss without losing the session. */
  async retry(): Promise<void> {
    if (this.vm.sessionId === null) return;
    await this.attach(this.vm.sessionId);
  }

  detach(): void {
    this.stopped = true;
  }
}
