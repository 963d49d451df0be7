"""Text formats: ASCII grids, sample CSVs, model set documents, report tables.

Every reader raises :class:`ParseError` with a 1-based line number for
malformed text, :class:`DataError` for well-formed rows that violate data
rules, and :class:`SchemaError` for model set documents that break the
document schema.  Writers emit full-precision floats so a write/read cycle
reproduces values bit for bit.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, DataError, EmptyInputError, ParseError,
                     SchemaError)
from .grid import NODATA, Raster, SampleSet
from .models import (ALL_KINDS, METHOD_MATHEMATICAL, METHODS, ModelDescriptor,
                     TransiogramModelSet, validate_model_set)
from .transiograms import ExperimentalTransiogramMatrix

MODELSET_FORMAT = "mcrfsim-modelset"
MODELSET_VERSION = 1

_GRID_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
              "nodata_value")
_SAMPLE_HEADER = ("x", "y", "class")
_TRANSIOGRAM_HEADER = ("tail", "head", "lag", "count", "probability")

#: Accepted spellings for the joint modeling method on the command line.
METHOD_ALIASES = {"math": METHOD_MATHEMATICAL}


def canonical_method(name: str) -> str:
    """Resolve a method name or alias to its canonical token."""
    token = str(name).strip().lower()
    token = METHOD_ALIASES.get(token, token)
    if token not in METHODS:
        raise ConfigError(
            f"unknown method {name!r}; expected one of "
            f"{', '.join(METHODS)} (or 'math')")
    return token


def _fmt(value) -> str:
    """Full-precision text for a float, empty for NaN."""
    v = float(value)
    return "" if math.isnan(v) else repr(v)


def _nonblank(lines, start=1):
    for ln, raw in enumerate(lines, start=start):
        if raw.strip():
            yield ln, raw


# ---------------------------------------------------------------------------
# ASCII grids


def read_ascii_grid(path) -> Raster:
    """Read a labeled raster from an ESRI-style ASCII grid.

    The six header lines give ncols, nrows, xllcorner, yllcorner, cellsize
    and NODATA_value; data rows follow from the top of the grid down.
    Labels are integers; cells holding the file's NODATA value map to
    :data:`NODATA`.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()

    header = {}
    rows = []
    for ln, raw in _nonblank(lines):
        if len(header) < len(_GRID_KEYS):
            parts = raw.split()
            if len(parts) != 2:
                raise ParseError(
                    f"expected 'name value' header, got {raw.strip()!r}",
                    line=ln)
            key = parts[0].lower()
            if key not in _GRID_KEYS:
                raise ParseError(f"unknown header field {parts[0]!r}", line=ln)
            if key in header:
                raise ParseError(f"duplicate header field {parts[0]!r}",
                                 line=ln)
            header[key] = (parts[1], ln)
        else:
            rows.append((ln, raw))
    if len(header) < len(_GRID_KEYS):
        missing = [k for k in _GRID_KEYS if k not in header]
        raise ParseError(
            f"incomplete header, missing {', '.join(missing)}",
            line=len(lines))

    def int_field(key):
        text, ln = header[key]
        try:
            return int(text)
        except ValueError:
            raise ParseError(f"{key} must be an integer, got {text!r}",
                             line=ln) from None

    def float_field(key):
        text, ln = header[key]
        try:
            return float(text)
        except ValueError:
            raise ParseError(f"{key} must be a number, got {text!r}",
                             line=ln) from None

    ncols = int_field("ncols")
    nrows = int_field("nrows")
    if ncols < 1 or nrows < 1:
        raise ParseError(f"grid shape {nrows} x {ncols} is not positive",
                         line=header["ncols"][1])
    xll = float_field("xllcorner")
    yll = float_field("yllcorner")
    cell = float_field("cellsize")
    if cell <= 0:
        raise ParseError(f"cellsize must be positive, got {cell}",
                         line=header["cellsize"][1])
    nodata = int_field("nodata_value")

    if len(rows) != nrows:
        where = rows[nrows][0] if len(rows) > nrows else len(lines)
        raise ParseError(f"expected {nrows} data rows, found {len(rows)}",
                         line=where)

    labels = np.empty((nrows, ncols), dtype=np.int32)
    for r, (ln, raw) in enumerate(rows):
        tokens = raw.split()
        if len(tokens) != ncols:
            raise ParseError(
                f"expected {ncols} values, found {len(tokens)}", line=ln)
        for c, tok in enumerate(tokens):
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"labels must be integers, got {tok!r}",
                                 line=ln) from None
            if v == nodata:
                v = NODATA
            elif v < 0:
                raise ParseError(f"negative label {v} is not a class id",
                                 line=ln)
            # file rows run top down, grid rows bottom up
            labels[nrows - 1 - r, c] = v
    return Raster(nrows, ncols, cell, xll, yll, labels)


def write_ascii_grid(path, raster: Raster) -> None:
    """Write a raster as an ASCII grid, top row first."""
    with open(path, "w") as fh:
        fh.write(f"ncols {raster.ncols}\n")
        fh.write(f"nrows {raster.nrows}\n")
        fh.write(f"xllcorner {raster.origin_x!r}\n")
        fh.write(f"yllcorner {raster.origin_y!r}\n")
        fh.write(f"cellsize {raster.cell_size!r}\n")
        fh.write(f"NODATA_value {NODATA}\n")
        for r in range(raster.nrows - 1, -1, -1):
            fh.write(" ".join(str(int(v)) for v in raster.labels[r]))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Sample points


def read_samples_csv(path, n_classes=None) -> SampleSet:
    """Read point samples from a ``x,y,class`` CSV.

    When ``n_classes`` is omitted it is inferred as one past the largest
    class id in the file.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    records = list(_nonblank(lines))
    if not records:
        raise ParseError("missing 'x,y,class' header", line=1)
    ln, raw = records[0]
    names = tuple(c.strip().lower() for c in raw.split(","))
    if names != _SAMPLE_HEADER:
        raise ParseError(
            f"expected header 'x,y,class', got {raw.strip()!r}", line=ln)
    if len(records) == 1:
        raise EmptyInputError("sample file contains no data rows")

    xs, ys, cs = [], [], []
    seen = {}
    for ln, raw in records[1:]:
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, found {len(parts)}", line=ln)
        try:
            x = float(parts[0])
            y = float(parts[1])
        except ValueError:
            raise ParseError(
                f"coordinates must be numbers, got {parts[0]!r}, {parts[1]!r}",
                line=ln) from None
        try:
            cls = int(parts[2])
        except ValueError:
            raise ParseError(f"class must be an integer, got {parts[2]!r}",
                             line=ln) from None
        if cls < 0:
            raise DataError(f"line {ln}: negative class id {cls}")
        if n_classes is not None and cls >= n_classes:
            raise DataError(
                f"line {ln}: class id {cls} outside 0..{n_classes - 1}")
        key = (x, y)
        if key in seen:
            raise DataError(
                f"line {ln}: duplicate sample location ({x!r}, {y!r}), "
                f"first seen on line {seen[key]}")
        seen[key] = ln
        xs.append(x)
        ys.append(y)
        cs.append(cls)
    if n_classes is None:
        n_classes = max(cs) + 1
    return SampleSet(np.array(xs), np.array(ys), np.array(cs), n_classes)


def write_samples_csv(path, samples: SampleSet) -> None:
    """Write point samples as a ``x,y,class`` CSV."""
    with open(path, "w") as fh:
        fh.write("x,y,class\n")
        for x, y, c in zip(samples.x, samples.y, samples.classes):
            fh.write(f"{float(x)!r},{float(y)!r},{int(c)}\n")


# ---------------------------------------------------------------------------
# Model set documents

_DESC_SCALARS = ("sill", "range", "alpha", "theta", "weight")
_ENTRY_KEYS = frozenset(("tail", "head", "kind", "knots") + _DESC_SCALARS)


def _descriptor_record(desc: ModelDescriptor) -> dict:
    rec = {"kind": desc.kind}
    for name in _DESC_SCALARS:
        v = getattr(desc, name)
        if v is not None:
            rec[name] = float(v)
    if desc.knots is not None:
        rec["knots"] = [[float(h), float(v)] for h, v in desc.knots]
    return rec


def modelset_document(models: TransiogramModelSet, classes=None) -> dict:
    """Model set as a plain JSON-ready document dict."""
    entries = []
    for i in range(models.n_classes):
        for j in range(models.n_classes):
            rec = {"tail": i, "head": j}
            rec.update(_descriptor_record(models.entry(i, j)))
            entries.append(rec)
    doc = {
        "format": MODELSET_FORMAT,
        "version": MODELSET_VERSION,
        "n_classes": models.n_classes,
        "method": models.method,
        "marginals": [float(v) for v in models.marginals],
        "rest_heads": [int(v) for v in models.rest_heads],
        "validated_lag_max": (None if models.validated_lag_max is None
                              else float(models.validated_lag_max)),
        "entries": entries,
    }
    if classes is not None:
        doc["classes"] = list(classes)
    return doc


def write_modelset(path, models: TransiogramModelSet, classes=None) -> None:
    """Write a model set as a JSON document.

    ``classes`` is an optional list of per-class annotation dicts carried
    through verbatim (names, roles).  ``validated_lag_max`` records how far
    the set has been constraint-checked; readers refuse documents whose
    claim does not survive re-validation.
    """
    with open(path, "w") as fh:
        json.dump(modelset_document(models, classes), fh, indent=2)
        fh.write("\n")


def _entry_descriptor(rec, i, j) -> ModelDescriptor:
    where = f"entry ({i}, {j})"
    kind = rec.get("kind")
    if not isinstance(kind, str):
        raise SchemaError(f"{where}: missing model kind")
    if kind not in ALL_KINDS:
        raise ParseError(f"{where}: unknown model kind {kind!r}")
    extra = set(rec) - _ENTRY_KEYS
    if extra:
        raise SchemaError(f"{where}: unexpected fields "
                          f"{', '.join(sorted(extra))}")
    kwargs = {}
    for name in _DESC_SCALARS:
        if rec.get(name) is None:
            continue
        v = rec[name]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError(f"{where}: {name} must be a number, "
                              f"got {v!r}")
        kwargs[name] = float(v)
    if rec.get("knots") is not None:
        knots = rec["knots"]
        if (not isinstance(knots, list)
                or any(not isinstance(k, (list, tuple)) or len(k) != 2
                       for k in knots)):
            raise SchemaError(f"{where}: knots must be a list of "
                              "[lag, value] pairs")
        try:
            kwargs["knots"] = tuple((float(h), float(v)) for h, v in knots)
        except (TypeError, ValueError):
            raise SchemaError(f"{where}: knots must be numeric "
                              "[lag, value] pairs") from None
    try:
        return ModelDescriptor(kind, **kwargs)
    except (ValueError, ConfigError) as exc:
        raise SchemaError(f"{where}: {exc}") from None


def read_modelset(path) -> TransiogramModelSet:
    """Read and validate a model set document.

    A non-null ``validated_lag_max`` claim is re-checked with the constraint
    sweep; a document whose models fail its own claim is rejected.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
    return parse_modelset(doc)


def parse_modelset(doc) -> TransiogramModelSet:
    """Build a model set from an already-parsed document dict."""
    if not isinstance(doc, dict):
        raise SchemaError("model set document must be a JSON object")
    if doc.get("format") != MODELSET_FORMAT:
        raise SchemaError(
            f"not a {MODELSET_FORMAT} document "
            f"(format={doc.get('format')!r})")
    if doc.get("version") != MODELSET_VERSION:
        raise SchemaError(f"unsupported document version "
                          f"{doc.get('version')!r}")
    for key in ("n_classes", "method", "marginals", "rest_heads", "entries"):
        if key not in doc:
            raise SchemaError(f"missing required field {key!r}")
    try:
        n = int(doc["n_classes"])
    except (TypeError, ValueError):
        raise SchemaError(
            f"n_classes must be an integer, got {doc['n_classes']!r}") \
            from None
    if n < 2:
        raise SchemaError(f"n_classes must be at least 2, got {n}")
    method = doc["method"]
    if method not in METHODS:
        raise SchemaError(f"unknown method {method!r}")

    if not isinstance(doc["entries"], list):
        raise SchemaError("entries must be a list")
    grid = [[None] * n for _ in range(n)]
    for k, rec in enumerate(doc["entries"]):
        if not isinstance(rec, dict):
            raise SchemaError(f"entries[{k}] must be an object")
        try:
            i = int(rec["tail"])
            j = int(rec["head"])
        except (KeyError, TypeError, ValueError):
            raise SchemaError(
                f"entries[{k}] needs integer tail and head fields") from None
        if not (0 <= i < n and 0 <= j < n):
            raise SchemaError(f"entries[{k}]: pair ({i}, {j}) outside "
                              f"0..{n - 1}")
        if grid[i][j] is not None:
            raise SchemaError(f"duplicate entry for pair ({i}, {j})")
        grid[i][j] = _entry_descriptor(rec, i, j)
    missing = [(i, j) for i in range(n) for j in range(n)
               if grid[i][j] is None]
    if missing:
        raise SchemaError(f"missing entries for pairs: "
                          f"{', '.join(map(str, missing[:4]))}"
                          + (" ..." if len(missing) > 4 else ""))

    try:
        models = TransiogramModelSet(
            n_classes=n, entries=grid, rest_heads=doc["rest_heads"],
            marginals=doc["marginals"], method=method)
    except (ConfigError, DataError, ValueError) as exc:
        raise SchemaError(str(exc)) from None

    claim = doc.get("validated_lag_max")
    if claim is not None:
        try:
            claim = float(claim)
        except (TypeError, ValueError):
            raise SchemaError(
                f"validated_lag_max must be a number or null, "
                f"got {claim!r}") from None
        report = validate_model_set(models, claim)
        if not report.valid:
            raise SchemaError(
                f"document claims validation to lag {claim:g} but the "
                f"sweep fails: {report.summary()}")
    return models


# ---------------------------------------------------------------------------
# Experimental transiograms


def write_transiogram_csv(path, exp: ExperimentalTransiogramMatrix) -> None:
    """Write binned transiogram estimates with their metadata.

    Metadata rides in ``# name value`` comment lines; undefined
    probabilities (no tail pairs in the bin) become empty fields.
    """
    with open(path, "w") as fh:
        fh.write(f"# n_classes {exp.n_classes}\n")
        fh.write(f"# n_bins {exp.n_bins}\n")
        fh.write(f"# bin_width {exp.bin_width!r}\n")
        fh.write(f"# pixel_size {exp.pixel_size!r}\n")
        fh.write("# proportions "
                 + " ".join(repr(float(p)) for p in exp.proportions) + "\n")
        fh.write(",".join(_TRANSIOGRAM_HEADER) + "\n")
        for i in range(exp.n_classes):
            for j in range(exp.n_classes):
                for k in range(exp.n_bins):
                    fh.write(f"{i},{j},{float(exp.lags[k])!r},"
                             f"{int(exp.counts[i, j, k])},"
                             f"{_fmt(exp.prob[i, j, k])}\n")


def read_transiogram_csv(path) -> ExperimentalTransiogramMatrix:
    """Read a transiogram table written by :func:`write_transiogram_csv`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta = {}
    body = []
    for ln, raw in _nonblank(lines):
        text = raw.strip()
        if text.startswith("#"):
            parts = text[1:].split()
            if len(parts) < 2:
                raise ParseError(f"bad metadata line {text!r}", line=ln)
            meta[parts[0]] = (parts[1:], ln)
        else:
            body.append((ln, raw))
    for key in ("n_classes", "n_bins", "bin_width", "pixel_size",
                "proportions"):
        if key not in meta:
            raise ParseError(f"missing '# {key}' metadata line", line=1)

    def meta_num(key, conv):
        parts, ln = meta[key]
        try:
            return conv(parts[0])
        except ValueError:
            raise ParseError(f"bad {key} value {parts[0]!r}",
                             line=ln) from None

    n = meta_num("n_classes", int)
    n_bins = meta_num("n_bins", int)
    width = meta_num("bin_width", float)
    pixel = meta_num("pixel_size", float)
    if n < 2 or n_bins < 1 or width <= 0 or pixel <= 0:
        raise ParseError("metadata values out of range", line=1)
    parts, ln = meta["proportions"]
    if len(parts) != n:
        raise ParseError(
            f"expected {n} proportions, found {len(parts)}", line=ln)
    try:
        proportions = np.array([float(p) for p in parts])
    except ValueError:
        raise ParseError("proportions must be numbers", line=ln) from None

    if not body:
        raise ParseError("missing transiogram header row", line=len(lines))
    ln, raw = body[0]
    names = tuple(c.strip().lower() for c in raw.split(","))
    if names != _TRANSIOGRAM_HEADER:
        raise ParseError(
            f"expected header '{','.join(_TRANSIOGRAM_HEADER)}', "
            f"got {raw.strip()!r}", line=ln)

    counts = np.zeros((n, n, n_bins), dtype=np.int64)
    prob = np.full((n, n, n_bins), np.nan)
    seen = np.zeros((n, n, n_bins), dtype=bool)
    for ln, raw in body[1:]:
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, found {len(parts)}",
                             line=ln)
        try:
            i, j = int(parts[0]), int(parts[1])
            lag = float(parts[2])
            cnt = int(parts[3])
        except ValueError:
            raise ParseError(f"bad transiogram row {raw.strip()!r}",
                             line=ln) from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"pair ({i}, {j}) outside 0..{n - 1}", line=ln)
        k = int(round(lag / width)) - 1
        if not (0 <= k < n_bins) or abs(lag - (k + 1) * width) > 1e-9 * width:
            raise ParseError(f"lag {lag!r} is not a bin center", line=ln)
        if seen[i, j, k]:
            raise ParseError(f"duplicate row for pair ({i}, {j}) "
                             f"at lag {lag!r}", line=ln)
        seen[i, j, k] = True
        counts[i, j, k] = cnt
        if parts[4]:
            try:
                prob[i, j, k] = float(parts[4])
            except ValueError:
                raise ParseError(
                    f"probability must be a number or empty, "
                    f"got {parts[4]!r}", line=ln) from None
    if not seen.all():
        i, j, k = np.argwhere(~seen)[0]
        raise ParseError(f"missing row for pair ({i}, {j}) at bin {k + 1}",
                         line=len(lines))
    lags = (np.arange(n_bins) + 1.0) * width
    return ExperimentalTransiogramMatrix(
        n_classes=n, lags=lags, bin_width=width, counts=counts, prob=prob,
        proportions=proportions, pixel_size=pixel)


# ---------------------------------------------------------------------------
# Report tables


def _class_header(n_classes) -> list:
    return [f"class_{j}" for j in range(n_classes)]


def write_accuracy_csv(path, rows, n_classes: int) -> None:
    """Write labeled accuracy rows: overall then per-class percentages.

    ``rows`` is a list of (label, AccuracyReport); NaN per-class values
    (class absent from the evaluated cells) become empty fields.
    """
    with open(path, "w") as fh:
        fh.write(",".join(["label", "overall"] + _class_header(n_classes)))
        fh.write("\n")
        for label, report in rows:
            cells = [str(label)] + [_fmt(v) for v in report.row()]
            fh.write(",".join(cells) + "\n")


def write_proportions_csv(path, report) -> None:
    """Write a ProportionReport as labeled rows of class percentages."""
    with open(path, "w") as fh:
        fh.write(",".join(["label"] + _class_header(report.n_classes)))
        fh.write("\n")
        for label, vec in report.rows:
            fh.write(",".join([str(label)] + [_fmt(v) for v in vec]) + "\n")


def write_json(path, obj) -> None:
    """Write a JSON document with a trailing newline."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Run configuration


@dataclass
class RunConfig:
    """Validated settings for one simulation run."""

    method: str = METHOD_MATHEMATICAL
    radius: float = 10.0
    n_realizations: int = 1
    bin_width: float = 1.0
    n_bins: int = 30
    seed: int = 0
    threads: int = 1
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.method = canonical_method(self.method)
        if self.radius <= 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if self.n_realizations < 1:
            raise ConfigError(
                f"need at least one realization, got {self.n_realizations}")
        if self.bin_width <= 0:
            raise ConfigError(
                f"bin_width must be positive, got {self.bin_width}")
        if self.n_bins < 1:
            raise ConfigError(f"need at least one lag bin, got {self.n_bins}")
        if self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")

    def to_dict(self) -> dict:
        d = {"method": self.method, "radius": self.radius,
             "n_realizations": self.n_realizations,
             "bin_width": self.bin_width, "n_bins": self.n_bins,
             "seed": self.seed, "threads": self.threads}
        d.update(self.extras)
        return d
