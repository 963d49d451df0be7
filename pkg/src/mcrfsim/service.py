"""HTTP service backing the interactive transiogram fitting workbench.

One in-memory session per process: a sample set, its experimental
transiogram matrix, and a working model-set draft.  The service does no
transiogram math of its own; every curve, misfit score and constraint
sweep in a payload is produced by the library so the browser can trust
the numbers.  Writes (PUT /modelset) are serialized behind a lock, reads
run concurrently, and persistence goes through the regular document
formats so a saved draft reloads identically everywhere else.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .demo import case_rest_heads, class_roles, math_descriptors
from .engine import simulate_realization
from .errors import McrfsimError
from .grid import (NODATA, Raster, SampleSet, cell_center, snap_to_cell)
from .io import (MODELSET_FORMAT, MODELSET_VERSION, _entry_descriptor,
                 canonical_method, modelset_document, read_ascii_grid,
                 read_modelset, read_samples_csv, write_modelset)
from .models import (REST, TransiogramModelSet, _check_entry_position,
                     build_model_set, evaluate_descriptor,
                     evaluate_matrix_raw, fit_rmse, validate_model_set)
from .postprocess import accuracy
from .transiograms import (ExperimentalTransiogramMatrix, LagBinSpec,
                           estimate_experimental)

PREVIEW_CAP = 64


@dataclass
class FitSession:
    """All mutable state behind one fitting workbench."""

    dataset: str
    samples: SampleSet
    exp: ExperimentalTransiogramMatrix
    bins: LagBinSpec
    pixel_size: float
    radius: float
    draft: TransiogramModelSet
    modelset_path: Path | None = None
    reference: Raster | None = None
    minor_threshold: float = 0.05
    dirty: set = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _initial_draft(exp, radius, minor_threshold) -> TransiogramModelSet:
    """Mathematical-method starting draft; always closes its rows exactly."""
    heads = case_rest_heads(exp.n_classes)
    models = build_model_set(
        exp, "mathematical", descriptors=math_descriptors(exp, heads),
        rest_heads=heads,
        roles=class_roles(exp.proportions, minor_threshold))
    validate_model_set(models, 2.0 * radius)
    return models


def open_session(samples_path, bin_width=4.0, n_bins=25, pixel_size=1.0,
                 radius=10.0, modelset_path=None, reference_path=None,
                 minor_threshold=0.05) -> FitSession:
    """Load samples, estimate, and prepare the working draft."""
    samples = read_samples_csv(samples_path)
    bins = LagBinSpec(float(bin_width), int(n_bins))
    exp = estimate_experimental(samples, bins, pixel_size=float(pixel_size))
    reference = None
    if reference_path is not None:
        reference = read_ascii_grid(reference_path)
    path = None if modelset_path is None else Path(modelset_path)
    if path is not None and path.exists():
        draft = read_modelset(path)
    else:
        draft = _initial_draft(exp, radius, minor_threshold)
    return FitSession(
        dataset=Path(samples_path).stem, samples=samples, exp=exp,
        bins=bins, pixel_size=float(pixel_size), radius=float(radius),
        draft=draft, modelset_path=path, reference=reference,
        minor_threshold=float(minor_threshold))


# -- request bodies ----------------------------------------------------

class EvaluateRequest(BaseModel):
    tail: int = Field(ge=0)
    head: int = Field(ge=0)
    descriptor: dict
    lag_max: float | None = Field(default=None, gt=0.0)
    step: float = Field(default=0.25, gt=0.0, le=1.0)


class PreviewRequest(BaseModel):
    radius: float | None = Field(default=None, gt=0.0)
    seed: int = 0
    downscale: int = Field(default=PREVIEW_CAP, ge=2)


def _field_error(loc, msg, status=422):
    raise HTTPException(status, detail=[{"loc": list(loc), "msg": str(msg)}])


def _nan_none(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) \
        else float(v)


def _sweep_lags(lag_max: float, step: float) -> np.ndarray:
    """Same grid validate_model_set sweeps: 0 to >= lag_max at step."""
    k = math.ceil(lag_max / step)
    return np.linspace(0.0, k * step, k + 1)


def _report_payload(report, persisted, path) -> dict:
    return {
        "valid": report.valid,
        "lag_max": report.lag_max,
        "step": report.step,
        "max_row_sum_err": report.max_row_sum_err,
        "worst_sum_row": report.worst_sum_row,
        "worst_sum_lag": report.worst_sum_lag,
        "min_value": report.min_value,
        "min_tail": report.min_tail,
        "min_head": report.min_head,
        "min_lag": report.min_lag,
        "summary": report.summary(),
        "persisted": persisted,
        "path": None if path is None else str(path),
    }


def build_app(samples_path, bin_width=4.0, n_bins=25, pixel_size=1.0,
              radius=10.0, modelset_path=None, reference_path=None,
              static_dir=None, minor_threshold=0.05) -> FastAPI:
    """Assemble the FastAPI application around one fitting session.

    ``samples_path=None`` builds an empty server whose session endpoints
    answer 404, mainly for probing.  ``static_dir`` optionally mounts the
    workbench files at the web root.
    """
    session = None
    if samples_path is not None:
        session = open_session(
            samples_path, bin_width=bin_width, n_bins=n_bins,
            pixel_size=pixel_size, radius=radius,
            modelset_path=modelset_path, reference_path=reference_path,
            minor_threshold=minor_threshold)

    app = FastAPI(title="mcrfsim fit service", docs_url=None,
                  redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    app.state.session = session

    def need_session() -> FitSession:
        if app.state.session is None:
            raise HTTPException(404, detail="no session loaded")
        return app.state.session

    def check_pair(sess, tail, head, loc_prefix):
        n = sess.exp.n_classes
        for name, v in (("tail", tail), ("head", head)):
            if not 0 <= v < n:
                _field_error((loc_prefix, name),
                             f"{name} must be in [0, {n}), got {v}")

    @app.get("/session/summary")
    def session_summary():
        sess = need_session()
        roles = class_roles(sess.exp.proportions, sess.minor_threshold)
        return {
            "dataset": sess.dataset,
            "n_classes": sess.exp.n_classes,
            "n_samples": len(sess.samples),
            "classes": [
                {"id": k, "proportion": float(sess.exp.proportions[k]),
                 "role": roles[k]}
                for k in range(sess.exp.n_classes)
            ],
            "bins": {
                "width": sess.bins.width,
                "n_bins": sess.bins.n_bins,
                "max_lag": sess.bins.max_lag,
                "pixel_size": sess.pixel_size,
            },
            "radius": sess.radius,
            "method": sess.draft.method,
            "rest_heads": [int(v) for v in sess.draft.rest_heads],
            "validated_lag_max": sess.draft.validated_lag_max,
            "dirty": sorted(list(p) for p in sess.dirty),
            "has_reference": sess.reference is not None,
            "modelset_path": (None if sess.modelset_path is None
                              else str(sess.modelset_path)),
        }

    @app.get("/transiogram")
    def transiogram(tail: int = Query(ge=0), head: int = Query(ge=0)):
        sess = need_session()
        check_pair(sess, tail, head, "query")
        prob = sess.exp.prob[tail, head]
        counts = sess.exp.counts[tail, head]
        missing = np.isnan(prob)
        return {
            "tail": tail,
            "head": head,
            "lag": [float(v) for v in sess.exp.lags],
            "probability": [None if m else float(v)
                            for v, m in zip(prob, missing)],
            "count": [int(v) for v in counts],
            "missing": [bool(m) for m in missing],
        }

    @app.get("/modelset")
    def modelset():
        sess = need_session()
        doc = modelset_document(sess.draft)
        doc["dirty"] = sorted(list(p) for p in sess.dirty)
        return doc

    @app.get("/modelset/curves")
    def modelset_curves(lag_max: float | None = Query(default=None, gt=0.0),
                        step: float = Query(default=0.25, gt=0.0, le=1.0)):
        sess = need_session()
        hs = _sweep_lags(lag_max or 2.0 * sess.radius, step)
        raw = evaluate_matrix_raw(sess.draft, hs)  # (n_h, K, K)
        n = sess.exp.n_classes
        return {
            "lag": [float(v) for v in hs],
            "curves": [[[float(v) for v in raw[:, i, j]]
                        for j in range(n)] for i in range(n)],
            "row_sum": [[float(v) for v in raw[:, i, :].sum(axis=1)]
                        for i in range(n)],
        }

    @app.post("/model/evaluate")
    def model_evaluate(req: EvaluateRequest):
        sess = need_session()
        check_pair(sess, req.tail, req.head, "body")
        i, j = req.tail, req.head
        rest = int(sess.draft.rest_heads[i])
        if j == rest:
            _field_error(("body", "head"),
                         f"head {j} is the Rest slot of row {i}; Rest is "
                         "computed by closure, not fitted")
        try:
            descr = _entry_descriptor(req.descriptor, i, j)
            if descr.kind == REST:
                _field_error(("body", "descriptor", "kind"),
                             "Rest cannot be evaluated as a candidate")
            descr = descr.resolved(float(sess.exp.proportions[j]))
            _check_entry_position(descr, i, j)
        except McrfsimError as exc:
            _field_error(("body", "descriptor"), exc)

        lag_max = req.lag_max if req.lag_max is not None \
            else 2.0 * sess.radius
        hs = _sweep_lags(lag_max, req.step)
        curve = np.atleast_1d(evaluate_descriptor(descr, hs))

        bins = sess.exp.defined_bins(i, j)
        knots = [(float(sess.exp.lags[k]), float(sess.exp.prob[i, j, k]))
                 for k in bins]
        if knots:
            rmse_all, rmse_low = fit_rmse(descr, knots, sess.radius)
        else:
            rmse_all = rmse_low = None

        partial = np.zeros(hs.shape)
        for j2 in range(sess.exp.n_classes):
            if j2 == rest:
                continue
            entry = descr if j2 == j else sess.draft.entry(i, j2)
            partial += np.atleast_1d(evaluate_descriptor(entry, hs))
        rest_curve = 1.0 - partial

        sess.dirty.add((i, j))
        return {
            "tail": i,
            "head": j,
            "lag": [float(v) for v in hs],
            "value": [float(v) for v in curve],
            "rmse_all": _nan_none(rmse_all),
            "rmse_low": _nan_none(rmse_low),
            "low_lag_cutoff": sess.radius,
            "row_sum": [float(v) for v in partial],
            "rest": [float(v) for v in rest_curve],
            "row_ok": bool(rest_curve.min() >= -1e-9),
            "min_rest": float(rest_curve.min()),
        }

    @app.put("/modelset")
    def put_modelset(doc: dict = Body(),
                     lag_max: float | None = Query(default=None, gt=0.0)):
        sess = need_session()
        n = sess.exp.n_classes
        if doc.get("format", MODELSET_FORMAT) != MODELSET_FORMAT:
            _field_error(("body", "format"),
                         f"expected {MODELSET_FORMAT!r}")
        if doc.get("version", MODELSET_VERSION) != MODELSET_VERSION:
            _field_error(("body", "version"),
                         f"expected version {MODELSET_VERSION}")
        if int(doc.get("n_classes", n)) != n:
            _field_error(("body", "n_classes"),
                         f"session has {n} classes")
        if "marginals" in doc:
            try:
                ok = np.allclose(doc["marginals"], sess.exp.proportions,
                                 atol=1e-12)
            except (TypeError, ValueError):
                ok = False
            if not ok:
                _field_error(("body", "marginals"),
                             "marginals are fixed by the session samples")
        for name in ("method", "rest_heads", "entries"):
            if name not in doc:
                _field_error(("body", name), "field is required")
        try:
            method = canonical_method(doc["method"])
            grid = [[None] * n for _ in range(n)]
            for k, rec in enumerate(doc["entries"]):
                if not isinstance(rec, dict) or "tail" not in rec \
                        or "head" not in rec:
                    _field_error(("body", "entries", k),
                                 "entry needs tail and head fields")
                i, j = int(rec["tail"]), int(rec["head"])
                if not (0 <= i < n and 0 <= j < n):
                    _field_error(("body", "entries", k),
                                 f"pair ({i}, {j}) outside 0..{n - 1}")
                if grid[i][j] is not None:
                    _field_error(("body", "entries", k),
                                 f"duplicate entry for pair ({i}, {j})")
                d = _entry_descriptor(rec, i, j)
                if d.kind != REST:
                    d = d.resolved(float(sess.exp.proportions[j]))
                    _check_entry_position(d, i, j)
                grid[i][j] = d
            missing = [(i, j) for i in range(n) for j in range(n)
                       if grid[i][j] is None]
            if missing:
                _field_error(("body", "entries"),
                             f"missing entries for pairs {missing[:4]}")
            models = TransiogramModelSet(
                n_classes=n, entries=grid, rest_heads=doc["rest_heads"],
                marginals=sess.exp.proportions, method=method)
        except McrfsimError as exc:
            _field_error(("body", "entries"), exc)
        except (TypeError, ValueError) as exc:
            _field_error(("body", "entries"), exc)

        sweep_to = lag_max if lag_max is not None else 2.0 * sess.radius
        report = validate_model_set(models, sweep_to)
        persisted = False
        with sess.lock:
            if report.valid:
                sess.draft = models
                sess.dirty.clear()
                if sess.modelset_path is not None:
                    write_modelset(sess.modelset_path, models)
                    persisted = True
        return _report_payload(report, persisted, sess.modelset_path)

    @app.post("/preview")
    def preview(req: PreviewRequest):
        sess = need_session()
        radius = req.radius if req.radius is not None else sess.radius
        draft = sess.draft
        need = 2.0 * radius
        if draft.validated_lag_max is None \
                or draft.validated_lag_max + 1e-9 < need:
            report = validate_model_set(draft, need)
            if not report.valid:
                raise HTTPException(
                    409, detail="draft does not satisfy the constraints: "
                    + report.summary())

        notice = []
        cap = req.downscale
        if cap > PREVIEW_CAP:
            notice.append(f"downscale {cap} capped to {PREVIEW_CAP}")
            cap = PREVIEW_CAP

        if sess.reference is not None:
            base_rows = sess.reference.nrows
            base_cols = sess.reference.ncols
            base_cell = sess.reference.cell_size
            origin_x = sess.reference.origin_x
            origin_y = sess.reference.origin_y
        else:
            base_cell = sess.pixel_size
            origin_x = float(sess.samples.x.min()) - 0.5 * base_cell
            origin_y = float(sess.samples.y.min()) - 0.5 * base_cell
            span_x = float(sess.samples.x.max()) + 0.5 * base_cell - origin_x
            span_y = float(sess.samples.y.max()) + 0.5 * base_cell - origin_y
            base_cols = max(1, math.ceil(span_x / base_cell - 1e-9))
            base_rows = max(1, math.ceil(span_y / base_cell - 1e-9))
        factor = max(1, math.ceil(max(base_rows, base_cols) / cap))
        template = Raster.domain(
            max(1, math.ceil(base_rows / factor)),
            max(1, math.ceil(base_cols / factor)),
            cell_size=base_cell * factor,
            origin_x=origin_x, origin_y=origin_y)

        # thin conditioning to one sample per coarse cell, first one wins
        keep, seen, dropped = [], set(), 0
        for idx in range(len(sess.samples)):
            try:
                cell = snap_to_cell(template, sess.samples.x[idx],
                                    sess.samples.y[idx])
            except IndexError:
                dropped += 1
                continue
            if cell in seen:
                dropped += 1
                continue
            seen.add(cell)
            keep.append(idx)
        if dropped:
            notice.append(f"{dropped} conditioning points dropped "
                          "(off-grid or sharing a coarse cell)")
        thinned = SampleSet(
            x=sess.samples.x[keep], y=sess.samples.y[keep],
            classes=sess.samples.classes[keep],
            n_classes=sess.samples.n_classes)

        realization = simulate_realization(template, thinned, draft,
                                           radius, req.seed)

        acc = None
        if sess.reference is not None:
            ref_labels = np.full(template.labels.shape, NODATA,
                                 dtype=np.int32)
            for r in range(template.nrows):
                for c in range(template.ncols):
                    x, y = cell_center(template, r, c)
                    try:
                        rr, rc = snap_to_cell(sess.reference, x, y)
                    except IndexError:
                        continue
                    ref_labels[r, c] = sess.reference.labels[rr, rc]
            coarse_ref = template.copy_with(ref_labels)
            report = accuracy(realization, coarse_ref, thinned)
            acc = {
                "overall": _nan_none(report.overall),
                "per_class": [_nan_none(v) for v in report.per_class],
            }

        return {
            "nrows": template.nrows,
            "ncols": template.ncols,
            "cell_size": template.cell_size,
            "origin_x": template.origin_x,
            "origin_y": template.origin_y,
            "factor": factor,
            "seed": req.seed,
            "radius": radius,
            "labels": realization.labels[::-1].tolist(),
            "n_conditioning": len(thinned),
            "n_dropped": dropped,
            "notice": "; ".join(notice) if notice else None,
            "accuracy": acc,
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="workbench")
    return app
