import type { Decision, SessionRequest, SessionResult, SessionState } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class HttpError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    /* non-JSON error body */
  }
  return res.statusText;
}

/** Thin typed client over the session endpoints. The fetch implementation is
 * injectable so tests can drive it against a scripted fake. */
export class ServiceClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    if (!res.ok) throw new HttpError(res.status, await errorDetail(res));
    return (await res.json()) as T;
  }

  createSession(body: SessionRequest): Promise<{ id: string }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getState(id: string): Promise<SessionState> {
    return this.request(`/sessions/${id}`);
  }

  postChoice(id: string, decision: Decision): Promise<{ ok: boolean }> {
    return this.request(`/sessions/${id}/choice`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  getResult(id: string): Promise<SessionResult> {
    return this.request(`/sessions/${id}/result`);
  }

  deleteSession(id: string): Promise<{ phase: string; best: unknown }> {
    return this.request(`/sessions/${id}`, { method: "DELETE" });
  }
}
