/** In-memory simulation of the session service, driven by a recorded
 * fixture. Implements just enough of the HTTP surface for the client:
 * each state poll during "synthesizing" advances to the next recorded
 * iteration message (or to "done" when the script is exhausted). */

import type { FetchLike } from "../src/api.js";
import type { Decision, IterationMessage, SessionResult } from "../src/types.js";

export interface ReplayFixture {
  request: unknown;
  choices: Decision[];
  messages: IterationMessage[];
  result: SessionResult;
  scripted_peaks: number[];
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class FakeService {
  id = "fake-session";
  phase: string = "synthesizing";
  msgIdx = 0;
  failNetwork = false;

  constructor(private readonly fixture: ReplayFixture) {}

  private state() {
    const msg =
      this.phase === "awaiting_choice" ? this.fixture.messages[this.msgIdx] : null;
    return { id: this.id, phase: this.phase, message: msg, error: null };
  }

  fetch: FetchLike = async (url, init) => {
    if (this.failNetwork) throw new TypeError("fetch failed");
    const method = init?.method ?? "GET";
    if (url === "/sessions" && method === "POST") {
      return json(201, { id: this.id });
    }
    if (url === `/sessions/${this.id}` && method === "GET") {
      if (this.phase === "synthesizing") {
        this.phase =
          this.msgIdx < this.fixture.messages.length ? "awaiting_choice" : "done";
      }
      return json(200, this.state());
    }
    if (url === `/sessions/${this.id}/choice` && method === "POST") {
      if (this.phase !== "awaiting_choice") {
        return json(409, { detail: "no decision pending", phase: this.phase });
      }
      const decision = JSON.parse(String(init?.body)) as Decision;
      if (decision.type === "choose") this.msgIdx += 1;
      this.phase = decision.type === "choose" ? "synthesizing" : "done";
      return json(200, { ok: true });
    }
    if (url === `/sessions/${this.id}/result` && method === "GET") {
      if (this.phase !== "done") return json(404, { detail: "result not ready" });
      return json(200, this.fixture.result);
    }
    return json(404, { detail: "unknown session id" });
  };
}
