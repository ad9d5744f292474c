export class HttpError extends Error {
    constructor(status, detail) {
        super(`HTTP ${status}: ${detail}`);
        this.status = status;
        this.detail = detail;
    }
}
async function errorDetail(res) {
    try {
        const body = await res.json();
        if (body && typeof body.detail === "string")
            return body.detail;
    }
    catch {
        /* non-JSON error body */
    }
    return res.statusText;
}
/** Thin typed client over the session endpoints. The fetch implementation is
 * injectable so tests can drive it against a scripted fake. */
export class ServiceClient {
    constructor(base = "", fetchImpl = (url, init) => fetch(url, init)) {
        this.base = base;
        this.fetchImpl = fetchImpl;
    }
    async request(path, init) {
        const res = await this.fetchImpl(this.base + path, init);
        if (!res.ok)
            throw new HttpError(res.status, await errorDetail(res));
        return (await res.json());
    }
    createSession(body) {
        return this.request("/sessions", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
    }
    getState(id) {
        return this.request(`/sessions/${id}`);
    }
    postChoice(id, decision) {
        return this.request(`/sessions/${id}/choice`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(decision),
        });
    }
    getResult(id) {
        return this.request(`/sessions/${id}/result`);
    }
    deleteSession(id) {
        return this.request(`/sessions/${id}`, { method: "DELETE" });
    }
}
