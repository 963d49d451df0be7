/** Typed client for the fitting service HTTP API.
 *
 * Field names mirror docs/fit-service-api.md exactly; the workbench does
 * no transiogram math of its own, so every number rendered in the UI
 * comes out of one of these payloads.
 */

export interface ClassInfo {
  id: number;
  proportion: number;
  role: "major" | "minor";
}

export interface BinInfo {
  width: number;
  n_bins: number;
  max_lag: number;
  pixel_size: number;
}

export interface SessionSummary {
  dataset: string;
  n_classes: number;
  n_samples: number;
  classes: ClassInfo[];
  bins: BinInfo;
  radius: number;
  method: string;
  rest_heads: number[];
  validated_lag_max: number | null;
  dirty: number[][];
  has_reference: boolean;
  modelset_path: string | null;
}

export interface Transiogram {
  tail: number;
  head: number;
  lag: number[];
  probability: (number | null)[];
  count: number[];
  missing: boolean[];
}

export interface Descriptor {
  kind: string;
  sill?: number | null;
  range?: number;
  alpha?: number;
  theta?: number;
  weight?: number;
  knots?: [number, number][];
}

export interface EntryRecord extends Descriptor {
  tail: number;
  head: number;
}

export interface ModelsetDocument {
  format: string;
  version: number;
  n_classes: number;
  method: string;
  marginals: number[];
  rest_heads: number[];
  validated_lag_max: number | null;
  entries: EntryRecord[];
  dirty?: number[][];
}

export interface CurvesResponse {
  lag: number[];
  curves: number[][][];
  row_sum: number[][];
}

export interface EvaluateRequest {
  tail: number;
  head: number;
  descriptor: Descriptor;
  lag_max?: number;
  step?: number;
}

export interface EvaluateResponse {
  tail: number;
  head: number;
  lag: number[];
  value: number[];
  rmse_all: number | null;
  rmse_low: number | null;
  low_lag_cutoff: number;
  row_sum: number[];
  rest: number[];
  row_ok: boolean;
  min_rest: number;
}

export interface ValidationOutcome {
  valid: boolean;
  lag_max: number;
  step: number;
  max_row_sum_err: number;
  worst_sum_row: number;
  worst_sum_lag: number;
  min_value: number;
  min_tail: number;
  min_head: number;
  min_lag: number;
  summary: string;
  persisted: boolean;
  path: string | null;
}

export interface PreviewRequest {
  radius?: number;
  seed?: number;
  downscale?: number;
}

export interface PreviewAccuracy {
  overall: number;
  per_class: (number | null)[];
}

export interface PreviewResponse {
  nrows: number;
  ncols: number;
  cell_size: number;
  origin_x: number;
  origin_y: number;
  factor: number;
  seed: number;
  radius: number;
  labels: number[][];
  n_conditioning: number;
  n_dropped: number;
  notice: string | null;
  accuracy: PreviewAccuracy | null;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(describeDetail(status, detail));
    this.name = "ApiError";
  }
}

interface FieldError {
  loc?: unknown[];
  msg?: string;
}

/** Flatten a service error payload into one readable sentence. */
export function describeDetail(status: number, detail: unknown): string {
  if (typeof detail === "string") return detail;
  if (Array.isArray(detail)) {
    const parts = (detail as FieldError[]).map((e) => {
      const loc = Array.isArray(e.loc) ? e.loc.join(".") : "";
      return loc ? `${loc}: ${e.msg ?? "invalid"}` : e.msg ?? "invalid";
    });
    if (parts.length) return parts.join("; ");
  }
  return `request failed (HTTP ${status})`;
}

async function parseBody(res: Response): Promise<unknown> {
  const text = await res.text();
  if (!text) return null;
  try {
    return JSON.parse(text);
  } catch {
    return text;
  }
}

export class Client {
  constructor(private base: string = "") {}

  private async go<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, init);
    const body = (await parseBody(res)) as { detail?: unknown } | null;
    if (!res.ok) {
      throw new ApiError(res.status, body?.detail ?? body);
    }
    return body as T;
  }

  summary(): Promise<SessionSummary> {
    return this.go("/session/summary");
  }

  transiogram(tail: number, head: number): Promise<Transiogram> {
    return this.go(`/transiogram?tail=${tail}&head=${head}`);
  }

  modelset(): Promise<ModelsetDocument> {
    return this.go("/modelset");
  }

  curves(lagMax?: number, step?: number): Promise<CurvesResponse> {
    const q = new URLSearchParams();
    if (lagMax !== undefined) q.set("lag_max", String(lagMax));
    if (step !== undefined) q.set("step", String(step));
    const qs = q.toString();
    return this.go(`/modelset/curves${qs ? "?" + qs : ""}`);
  }

  evaluate(req: EvaluateRequest, signal?: AbortSignal): Promise<EvaluateResponse> {
    return this.go("/model/evaluate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
  }

  save(doc: ModelsetDocument, lagMax?: number): Promise<ValidationOutcome> {
    const qs = lagMax !== undefined ? `?lag_max=${lagMax}` : "";
    return this.go(`/modelset${qs}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  preview(req: PreviewRequest): Promise<PreviewResponse> {
    return this.go("/preview", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }
}
