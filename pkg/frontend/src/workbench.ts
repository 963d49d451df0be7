/** The workbench application: matrix view, entry panel, save, preview.
 *
 * All numbers shown come from service payloads.  The client keeps only
 * UI state: which panel is open, slider positions, and the draft entry
 * replacements not yet saved.
 */

import {
  ApiError,
  Client,
  CurvesResponse,
  Descriptor,
  EvaluateResponse,
  ModelsetDocument,
  PreviewResponse,
  SessionSummary,
  Transiogram,
} from "./api.js";
import { latestOnly } from "./debounce.js";
import {
  GAMMA_KINDS,
  INTERPOLATED,
  Params,
  REST,
  allowedKinds,
  clampParams,
  defaultParams,
  fromDescriptor,
  sliderSpecs,
  toDescriptor,
} from "./params.js";
import { classColor, fmt, svgPath, yAxisMax } from "./render.js";
import { Draft } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const THUMB_W = 110;
const THUMB_H = 64;
const PANEL_W = 460;
const PANEL_H = 240;
const SPARK_H = 70;

interface PanelState {
  tail: number;
  head: number;
  kind: string;
  params: Params;
  templateSill: boolean;
  lastEval?: EvaluateResponse;
}

export class Workbench {
  private summary!: SessionSummary;
  private draft!: Draft;
  private curves!: CurvesResponse;
  private transiograms = new Map<string, Transiogram>();
  private panel: PanelState | null = null;
  /** Curves applied to the draft but not yet saved, for thumbnails. */
  private appliedCurves = new Map<string, { lag: number[]; value: number[] }>();
  private evaluateDebounced;

  constructor(private client: Client, private root: Document) {
    this.evaluateDebounced = latestOnly(
      (signal: AbortSignal, req: Parameters<Client["evaluate"]>[0]) =>
        this.client.evaluate(req, signal),
    );
  }

  async start(): Promise<void> {
    this.banner("");
    try {
      this.summary = await this.client.summary();
      const [doc, curves] = await Promise.all([
        this.client.modelset(),
        this.client.curves(),
      ]);
      this.adoptDocument(doc, curves);
      await this.loadTransiograms();
    } catch (err) {
      this.retryBanner(err);
      return;
    }
    this.renderHeader();
    this.renderMatrix();
    this.renderPreviewControls();
    if (this.panel) this.openPanel(this.panel.tail, this.panel.head);
  }

  private adoptDocument(doc: ModelsetDocument, curves: CurvesResponse): void {
    this.draft = new Draft(doc);
    this.curves = curves;
    this.appliedCurves.clear();
  }

  private async loadTransiograms(): Promise<void> {
    const n = this.summary.n_classes;
    const jobs: Promise<void>[] = [];
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        jobs.push(
          this.client.transiogram(i, j).then((t) => {
            this.transiograms.set(`${i},${j}`, t);
          }),
        );
      }
    }
    await Promise.all(jobs);
  }

  // -- chrome --------------------------------------------------------------

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    cls?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const e = this.root.createElement(tag);
    if (cls) e.className = cls;
    if (text !== undefined) e.textContent = text;
    return e;
  }

  private banner(text: string, kind: "error" | "ok" | "" = ""): void {
    const b = this.root.getElementById("banner")!;
    b.textContent = text;
    b.className = kind;
    b.style.display = text ? "block" : "none";
  }

  private retryBanner(err: unknown): void {
    const b = this.root.getElementById("banner")!;
    b.innerHTML = "";
    b.className = "error";
    b.style.display = "block";
    b.append(
      this.el("span", "", `service unreachable: ${(err as Error).message} `),
    );
    const retry = this.el("button", "", "retry");
    retry.addEventListener("click", () => void this.start());
    b.append(retry);
  }

  private renderHeader(): void {
    const s = this.summary;
    const line = this.root.getElementById("session-line")!;
    line.textContent =
      `${s.dataset} — ${s.n_samples} samples, ${s.n_classes} classes, ` +
      `bins ${s.bins.width} × ${s.bins.n_bins}, radius ${s.radius}, ` +
      `draft method ${s.method}`;
    const save = this.root.getElementById("save-btn")!;
    save.onclick = () => void this.save();
  }

  // -- matrix view ---------------------------------------------------------

  private entryBadge(tail: number, head: number): string {
    if (this.draft.isRest(tail, head)) return "Rest";
    const t = this.transiograms.get(`${tail},${head}`);
    if (t && t.missing.every(Boolean)) {
      return "unreliable — use mathematical model";
    }
    return "";
  }

  private renderMatrix(): void {
    const host = this.root.getElementById("matrix")!;
    host.innerHTML = "";
    const n = this.summary.n_classes;
    host.style.gridTemplateColumns = `repeat(${n}, ${THUMB_W + 12}px)`;
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        host.append(this.thumbnail(i, j));
      }
    }
  }

  private thumbnail(tail: number, head: number): HTMLElement {
    const cell = this.el("div", "thumb");
    cell.dataset.entry = `${tail},${head}`;
    const title = this.el("div", "thumb-title", `p${tail}${head}`);
    if (this.draft.touched.has(`${tail},${head}`)) {
      title.append(this.el("span", "dirty-dot", "●"));
    }
    cell.append(title);
    cell.append(this.thumbSvg(tail, head));
    const badge = this.entryBadge(tail, head);
    if (badge) {
      cell.append(this.el("div", badge === "Rest" ? "badge rest" : "badge warn", badge));
    }
    cell.addEventListener("click", () => this.openPanel(tail, head));
    return cell;
  }

  private thumbSvg(tail: number, head: number): SVGSVGElement {
    const svg = this.root.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    svg.setAttribute("width", String(THUMB_W));
    svg.setAttribute("height", String(THUMB_H));
    const t = this.transiograms.get(`${tail},${head}`);
    const applied = this.appliedCurves.get(`${tail},${head}`);
    const lag = applied ? applied.lag : this.curves.lag;
    const value = applied ? applied.value : this.curves.curves[tail][head];
    const xmax = Math.max(lag[lag.length - 1] ?? 1, t?.lag[t.lag.length - 1] ?? 1);
    const ymax = yAxisMax([...value, ...(t?.probability ?? [])]);
    if (t) this.drawPoints(svg, t, xmax, ymax, THUMB_W, THUMB_H, 1.5);
    this.drawLine(svg, lag, value, xmax, ymax, THUMB_W, THUMB_H, classColor(head));
    return svg;
  }

  private drawLine(
    svg: SVGSVGElement,
    xs: number[],
    ys: (number | null)[],
    xmax: number,
    ymax: number,
    w: number,
    h: number,
    color: string,
  ): void {
    const path = this.root.createElementNS(SVG_NS, "path");
    path.setAttribute("d", svgPath(xs, ys, xmax, ymax, w, h));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", color);
    path.setAttribute("stroke-width", "1.4");
    svg.append(path);
  }

  private drawPoints(
    svg: SVGSVGElement,
    t: Transiogram,
    xmax: number,
    ymax: number,
    w: number,
    h: number,
    r: number,
  ): void {
    for (let k = 0; k < t.lag.length; k++) {
      const p = t.probability[k];
      if (p === null) continue;
      const c = this.root.createElementNS(SVG_NS, "circle");
      c.setAttribute("cx", ((t.lag[k] / xmax) * w).toFixed(2));
      c.setAttribute("cy", (h - (ymax > 0 ? (p / ymax) * h : 0)).toFixed(2));
      c.setAttribute("r", String(r));
      c.setAttribute("fill", "#555");
      svg.append(c);
    }
  }

  // -- entry panel ---------------------------------------------------------

  openPanel(tail: number, head: number): void {
    const host = this.root.getElementById("panel")!;
    host.innerHTML = "";
    const heading = this.el("h2", "", `entry p${tail}${head}`);
    host.append(heading);

    const roles = this.summary.classes;
    host.append(
      this.el(
        "div",
        "hint",
        `tail ${tail} (${roles[tail]?.role}), head ${head} (${roles[head]?.role})`,
      ),
    );

    if (this.draft.isRest(tail, head)) {
      this.panel = null;
      host.append(
        this.el(
          "p",
          "hint",
          "Rest entry: computed as one minus the rest of the row; not editable.",
        ),
      );
      host.append(this.panelSvgFromCurves(tail, head));
      return;
    }

    const existing = this.draft.entry(tail, head);
    const kinds = allowedKinds(tail, head, this.draft.restHeads[tail]);
    const proportion = roles[head]?.proportion ?? 0.5;
    const fallback = defaultParams(proportion, this.summary.bins.max_lag);
    const startKind =
      existing && kinds.includes(existing.kind) ? existing.kind : kinds[0];
    this.panel = {
      tail,
      head,
      kind: startKind,
      params: clampParams(startKind, existing ? fromDescriptor(existing, fallback) : fallback),
      templateSill: existing ? existing.sill == null : false,
    };

    if (existing?.kind === INTERPOLATED) {
      host.append(
        this.el(
          "p",
          "hint",
          "currently an interpolated (empirical) entry; choosing a kind below replaces it",
        ),
      );
    }

    const kindRow = this.el("div", "control-row");
    kindRow.append(this.el("label", "", "kind"));
    const select = this.el("select");
    for (const k of kinds) {
      const opt = this.el("option", "", k);
      opt.value = k;
      if (k === startKind) opt.selected = true;
      select.append(opt);
    }
    select.addEventListener("change", () => {
      const p = this.panel!;
      p.kind = select.value;
      p.params = clampParams(p.kind, p.params);
      this.openPanelControls(host);
      this.requestEvaluate();
    });
    kindRow.append(select);

    const tmpl = this.el("label", "template");
    const check = this.el("input");
    check.type = "checkbox";
    check.checked = this.panel.templateSill;
    check.addEventListener("change", () => {
      this.panel!.templateSill = check.checked;
      this.openPanelControls(host);
      this.requestEvaluate();
    });
    tmpl.append(check, this.root.createTextNode(" sill = head proportion"));
    kindRow.append(tmpl);
    host.append(kindRow);

    const controls = this.el("div");
    controls.id = "panel-controls";
    host.append(controls);

    const plot = this.el("div");
    plot.id = "panel-plot";
    host.append(plot);

    const scores = this.el("div", "scores");
    scores.id = "panel-scores";
    host.append(scores);

    const spark = this.el("div");
    spark.id = "panel-spark";
    host.append(spark);

    const actions = this.el("div", "control-row");
    const apply = this.el("button", "", "apply to draft");
    apply.addEventListener("click", () => this.applyPanel());
    actions.append(apply);
    host.append(actions);

    this.openPanelControls(host);
    this.requestEvaluate();
  }

  private openPanelControls(host: HTMLElement): void {
    const p = this.panel!;
    const controls = host.querySelector("#panel-controls") as HTMLElement;
    controls.innerHTML = "";
    for (const spec of sliderSpecs(p.kind)) {
      if (spec.name === "sill" && p.templateSill) continue;
      const row = this.el("div", "control-row");
      row.append(this.el("label", "", spec.label));
      const slider = this.el("input");
      slider.type = "range";
      slider.min = String(spec.min);
      slider.max = String(spec.max);
      slider.step = String(spec.step);
      slider.value = String(p.params[spec.name]);
      const box = this.el("input");
      box.type = "number";
      box.min = String(spec.min);
      box.max = String(spec.max);
      box.step = String(spec.step);
      box.value = String(p.params[spec.name]);
      const push = (raw: string) => {
        const v = Number(raw);
        if (!isFinite(v)) return;
        p.params = clampParams(p.kind, { ...p.params, [spec.name]: v });
        slider.value = String(p.params[spec.name]);
        box.value = String(p.params[spec.name]);
        this.requestEvaluate();
      };
      slider.addEventListener("input", () => push(slider.value));
      box.addEventListener("change", () => push(box.value));
      row.append(slider, box);
      controls.append(row);
    }
  }

  private panelDescriptor(): Descriptor {
    const p = this.panel!;
    return toDescriptor(p.kind, p.params, p.templateSill);
  }

  private requestEvaluate(): void {
    const p = this.panel;
    if (!p) return;
    void this.evaluateDebounced({
      tail: p.tail,
      head: p.head,
      descriptor: this.panelDescriptor(),
    })
      .then((res) => {
        if (res && this.panel === p) {
          p.lastEval = res;
          this.renderEvaluation(res);
        }
      })
      .catch((err) => {
        if (this.panel === p) this.renderEvaluationError(err);
      });
  }

  private renderEvaluation(res: EvaluateResponse): void {
    const p = this.panel!;
    const t = this.transiograms.get(`${p.tail},${p.head}`);
    const plot = this.root.getElementById("panel-plot")!;
    plot.innerHTML = "";
    const svg = this.root.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    svg.setAttribute("width", String(PANEL_W));
    svg.setAttribute("height", String(PANEL_H));
    const xmax = Math.max(
      res.lag[res.lag.length - 1] ?? 1,
      t?.lag[t.lag.length - 1] ?? 1,
    );
    const ymax = yAxisMax([...res.value, ...(t?.probability ?? [])]);
    if (t) this.drawPoints(svg, t, xmax, ymax, PANEL_W, PANEL_H, 3);
    this.drawLine(svg, res.lag, res.value, xmax, ymax, PANEL_W, PANEL_H, classColor(p.head));
    plot.append(svg);

    const scores = this.root.getElementById("panel-scores")!;
    scores.innerHTML = "";
    scores.append(
      this.el("span", "", `rmse all: ${fmt(res.rmse_all, 4)}`),
      this.el("span", "", `rmse ≤ ${res.low_lag_cutoff}: ${fmt(res.rmse_low, 4)}`),
      this.el(
        "span",
        res.row_ok ? "ok" : "violation",
        res.row_ok
          ? `row ok (min Rest ${fmt(res.min_rest, 4)})`
          : `row violation: Rest dips to ${fmt(res.min_rest, 4)}`,
      ),
    );

    const spark = this.root.getElementById("panel-spark")!;
    spark.innerHTML = "";
    spark.append(this.el("div", "hint", "row sum of explicit entries (grey) and Rest (black)"));
    const s = this.root.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    s.setAttribute("width", String(PANEL_W));
    s.setAttribute("height", String(SPARK_H));
    this.drawLine(s, res.lag, res.row_sum, res.lag[res.lag.length - 1] ?? 1, 1, PANEL_W, SPARK_H, "#999");
    this.drawLine(
      s,
      res.lag,
      res.rest,
      res.lag[res.lag.length - 1] ?? 1,
      1,
      PANEL_W,
      SPARK_H,
      res.row_ok ? "#000" : "#c22",
    );
    spark.append(s);
  }

  private renderEvaluationError(err: unknown): void {
    const scores = this.root.getElementById("panel-scores");
    if (!scores) return;
    scores.innerHTML = "";
    const msg =
      err instanceof ApiError ? err.message : `evaluation failed: ${(err as Error).message}`;
    scores.append(this.el("span", "violation", msg));
  }

  private applyPanel(): void {
    const p = this.panel;
    if (!p) return;
    this.draft.setEntry(p.tail, p.head, this.panelDescriptor());
    if (p.lastEval) {
      this.appliedCurves.set(`${p.tail},${p.head}`, {
        lag: p.lastEval.lag,
        value: p.lastEval.value,
      });
    }
    this.renderMatrix();
    this.banner("");
    const status = this.root.getElementById("save-status")!;
    status.textContent = `${this.draft.touched.size} unsaved entr${
      this.draft.touched.size === 1 ? "y" : "ies"
    }`;
    status.className = "";
  }

  private panelSvgFromCurves(tail: number, head: number): SVGSVGElement {
    const svg = this.root.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    svg.setAttribute("width", String(PANEL_W));
    svg.setAttribute("height", String(PANEL_H));
    const lag = this.curves.lag;
    const value = this.curves.curves[tail][head];
    const ymax = yAxisMax(value);
    this.drawLine(svg, lag, value, lag[lag.length - 1] ?? 1, ymax, PANEL_W, PANEL_H, "#000");
    return svg;
  }

  // -- save ----------------------------------------------------------------

  private async save(): Promise<void> {
    const status = this.root.getElementById("save-status")!;
    status.textContent = "saving…";
    let outcome;
    try {
      outcome = await this.client.save(this.draft.toPayload());
    } catch (err) {
      status.textContent = "";
      this.banner(
        err instanceof ApiError ? `rejected: ${err.message}` : String(err),
        "error",
      );
      return;
    }
    if (outcome.valid) {
      this.draft.markSaved();
      status.textContent = outcome.persisted
        ? `saved ✓ (validated to lag ${outcome.lag_max})`
        : `valid ✓ (validated to lag ${outcome.lag_max}; no file configured)`;
      status.className = "ok";
      this.banner("");
      try {
        const [doc, curves] = await Promise.all([
          this.client.modelset(),
          this.client.curves(),
        ]);
        this.adoptDocument(doc, curves);
      } catch {
        // keep the client-side draft; thumbnails refresh on next load
      }
      this.renderMatrix();
    } else {
      status.textContent = "";
      this.validationBanner(outcome);
    }
  }

  private validationBanner(outcome: {
    summary: string;
    worst_sum_row: number;
    min_tail: number;
    min_head: number;
  }): void {
    const b = this.root.getElementById("banner")!;
    b.innerHTML = "";
    b.className = "error";
    b.style.display = "block";
    b.append(this.el("span", "", outcome.summary + " — "));
    const rowLink = this.el("a", "", `row ${outcome.worst_sum_row}`);
    rowLink.href = "#";
    rowLink.addEventListener("click", (e) => {
      e.preventDefault();
      this.openPanel(outcome.worst_sum_row, this.firstEditableHead(outcome.worst_sum_row));
    });
    const entryLink = this.el("a", "", `entry (${outcome.min_tail}, ${outcome.min_head})`);
    entryLink.href = "#";
    entryLink.addEventListener("click", (e) => {
      e.preventDefault();
      this.openPanel(outcome.min_tail, outcome.min_head);
    });
    b.append(rowLink, this.root.createTextNode(" · "), entryLink);
  }

  private firstEditableHead(tail: number): number {
    for (let j = 0; j < this.draft.nClasses; j++) {
      if (!this.draft.isRest(tail, j)) return j;
    }
    return 0;
  }

  // -- preview -------------------------------------------------------------

  private renderPreviewControls(): void {
    const run = this.root.getElementById("preview-run")!;
    run.onclick = () => void this.runPreview();
  }

  private async runPreview(): Promise<void> {
    const seed = Number((this.root.getElementById("preview-seed") as HTMLInputElement).value) || 0;
    const down = Number((this.root.getElementById("preview-downscale") as HTMLInputElement).value) || 64;
    const info = this.root.getElementById("preview-info")!;
    info.textContent = "simulating…";
    let res: PreviewResponse;
    try {
      res = await this.client.preview({ seed, downscale: down });
    } catch (err) {
      info.textContent = "";
      if (err instanceof ApiError && err.status === 409) {
        this.banner(`preview refused: ${err.message}`, "error");
      } else {
        this.banner(String(err), "error");
      }
      return;
    }
    this.banner("");
    this.drawPreview(res);
    const bits = [
      `${res.nrows} × ${res.ncols} cells of ${res.cell_size} (factor ${res.factor})`,
      `seed ${res.seed}`,
      `${res.n_conditioning} conditioning points (${res.n_dropped} dropped)`,
    ];
    if (res.accuracy) bits.push(`accuracy vs reference ${fmt(res.accuracy.overall, 1)}%`);
    if (res.notice) bits.push(res.notice);
    info.textContent = bits.join(" · ");
  }

  private drawPreview(res: PreviewResponse): void {
    const canvas = this.root.getElementById("preview-canvas") as HTMLCanvasElement;
    const scale = Math.max(1, Math.floor(320 / Math.max(res.nrows, res.ncols)));
    canvas.width = res.ncols * scale;
    canvas.height = res.nrows * scale;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    for (let r = 0; r < res.nrows; r++) {
      for (let c = 0; c < res.ncols; c++) {
        ctx.fillStyle = classColor(res.labels[r][c]);
        ctx.fillRect(c * scale, r * scale, scale, scale);
      }
    }
  }
}
