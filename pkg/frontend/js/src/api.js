/** Typed client for the fitting service HTTP API.
 *
 * Field names mirror docs/fit-service-api.md exactly; the workbench does
 * no transiogram math of its own, so every number rendered in the UI
 * comes out of one of these payloads.
 */
export class ApiError extends Error {
    constructor(status, detail) {
        super(describeDetail(status, detail));
        this.status = status;
        this.detail = detail;
        this.name = "ApiError";
    }
}
/** Flatten a service error payload into one readable sentence. */
export function describeDetail(status, detail) {
    if (typeof detail === "string")
        return detail;
    if (Array.isArray(detail)) {
        const parts = detail.map((e) => {
            const loc = Array.isArray(e.loc) ? e.loc.join(".") : "";
            return loc ? `${loc}: ${e.msg ?? "invalid"}` : e.msg ?? "invalid";
        });
        if (parts.length)
            return parts.join("; ");
    }
    return `request failed (HTTP ${status})`;
}
async function parseBody(res) {
    const text = await res.text();
    if (!text)
        return null;
    try {
        return JSON.parse(text);
    }
    catch {
        return text;
    }
}
export class Client {
    constructor(base = "") {
        this.base = base;
    }
    async go(path, init) {
        const res = await fetch(this.base + path, init);
        const body = (await parseBody(res));
        if (!res.ok) {
            throw new ApiError(res.status, body?.detail ?? body);
        }
        return body;
    }
    summary() {
        return this.go("/session/summary");
    }
    transiogram(tail, head) {
        return this.go(`/transiogram?tail=${tail}&head=${head}`);
    }
    modelset() {
        return this.go("/modelset");
    }
    curves(lagMax, step) {
        const q = new URLSearchParams();
        if (lagMax !== undefined)
            q.set("lag_max", String(lagMax));
        if (step !== undefined)
            q.set("step", String(step));
        const qs = q.toString();
        return this.go(`/modelset/curves${qs ? "?" + qs : ""}`);
    }
    evaluate(req, signal) {
        return this.go("/model/evaluate", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(req),
            signal,
        });
    }
    save(doc, lagMax) {
        const qs = lagMax !== undefined ? `?lag_max=${lagMax}` : "";
        return this.go(`/modelset${qs}`, {
            method: "PUT",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(doc),
        });
    }
    preview(req) {
        return this.go("/preview", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(req),
        });
    }
}
