/** Wire types for the musyn session service. Every field here mirrors the
 * service's JSON verbatim; the UI never invents analysis data. */

export type Phase =
  | "synthesizing"
  | "awaiting_choice"
  | "analyzing"
  | "done"
  | "failed";

export interface Candidate {
  order: number;
  fit_error: number;
}

export interface DEntry {
  name: string;
  /** |d(j omega)| sampled on the message's omega grid */
  mag: number[];
}

export interface IterationMessage {
  type: "iteration";
  index: number;
  omega: number[];
  mu_upper: number[];
  peak: number;
  gamma: number;
  d_entries: DEntry[];
  candidates: Candidate[];
}

export interface SessionState {
  id: string;
  phase: Phase;
  message: IterationMessage | null;
  error: string | null;
}

export type Decision =
  | { type: "choose"; order: number }
  | { type: "accept" }
  | { type: "stop" };

export interface IterationResult {
  index: number;
  orders: number[];
  peak: number;
  gamma: number;
  omega: number[];
  mu_upper: number[];
}

export interface SessionResult {
  peak: number;
  converged: boolean;
  controller: unknown;
  iterations: IterationResult[];
}

export interface SessionRequest {
  spec: unknown;
  grid?: string;
  config?: { max_order?: number; synthesis?: string; ssv_tol?: number };
}
