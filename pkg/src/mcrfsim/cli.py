"""Command line pipeline: sample, estimate, model, simulate, report.

Artifacts are plain text (grids, CSVs, JSON documents); progress and
diagnostics go to stderr.  Failures exit nonzero with a category tag:
2 usage, 3 parse, 4 schema, 5 data, 6 configuration, 7 internal.
"""

import glob
import logging
import os
import sys

import click
import numpy as np

from . import demo as demo_mod
from .engine import simulate_ensemble
from .errors import (ConfigError, DataError, EmptyInputError, McrfsimError,
                     ParseError, SchemaError, UnreliableEntriesError)
from .grid import random_sample
from .io import (canonical_method, read_ascii_grid, read_modelset,
                 read_samples_csv, read_transiogram_csv, write_accuracy_csv,
                 write_ascii_grid, write_json, write_modelset,
                 write_proportions_csv, write_samples_csv,
                 write_transiogram_csv)
from .models import build_model_set, validate_model_set
from .postprocess import (POLICY_ALL, POLICY_EXCLUDE_SAMPLES, Ensemble,
                          accuracy, occurrence_probability, optimal_map,
                          patch_count, proportion_report)
from .transiograms import LagBinSpec, estimate_experimental

log = logging.getLogger("mcrfsim.cli")

#: Default output directory when -o is omitted.
OUT_ENV = "MCRFSIM_OUT"

_CATEGORIES = (
    (ParseError, "parse", 3),
    (SchemaError, "schema", 4),
    (EmptyInputError, "data", 5),
    (DataError, "data", 5),
    (UnreliableEntriesError, "config", 6),
    (ConfigError, "config", 6),
)


def _categorize(exc):
    for cls, name, code in _CATEGORIES:
        if isinstance(exc, cls):
            return name, code
    return "internal", 7


class _Cli(click.Group):
    """Group that turns package errors into categorized exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except McrfsimError as exc:
            name, code = _categorize(exc)
            click.echo(f"error [{name}]: {exc}", err=True)
            ctx.exit(code)


def _out_path(opt, default_name):
    if opt is not None:
        return opt
    base = os.environ.get(OUT_ENV, ".")
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, default_name)


def _out_dir(opt, default_name):
    path = _out_path(opt, default_name)
    os.makedirs(path, exist_ok=True)
    return path


@click.group(cls=_Cli)
@click.option("-v", "--verbose", is_flag=True, help="Debug-level log.")
def cli(verbose):
    """Markov chain random field simulation of categorical rasters."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        force=True)


@cli.command()
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "--points", type=int, required=True,
              help="Survey size.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Output CSV [default: $MCRFSIM_OUT/samples.csv].")
def sample(reference, points, seed, out):
    """Draw a random point survey from a labeled reference grid."""
    ref = read_ascii_grid(reference)
    samples = random_sample(ref, points, seed=seed)
    out = _out_path(out, "samples.csv")
    write_samples_csv(out, samples)
    log.info("sampled %d of %d active cells into %s",
             len(samples), int(ref.data_mask.sum()), out)
    click.echo(out)


@cli.command()
@click.argument("samples", type=click.Path(exists=True, dir_okay=False))
@click.option("--bin-width", type=float, default=demo_mod.BIN_WIDTH,
              show_default=True, help="Lag bin width in pixels.")
@click.option("--bins", type=int, default=demo_mod.N_BINS, show_default=True,
              help="Number of lag bins.")
@click.option("--pixel-size", type=float, default=1.0, show_default=True,
              help="Ground distance per pixel.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Output CSV [default: $MCRFSIM_OUT/transiograms.csv].")
def estimate(samples, bin_width, bins, pixel_size, out):
    """Estimate experimental transiograms from a sample CSV."""
    pts = read_samples_csv(samples)
    exp = estimate_experimental(pts, LagBinSpec(bin_width, bins),
                                pixel_size=pixel_size)
    out = _out_path(out, "transiograms.csv")
    write_transiogram_csv(out, exp)
    defined = int(exp.defined().sum())
    log.info("estimated %d classes x %d bins (%d defined entries) into %s",
             exp.n_classes, exp.n_bins, defined, out)
    click.echo(out)


@cli.group()
def modelset():
    """Build and validate transiogram model sets."""


def _parse_rest_heads(text, n_classes):
    if text == "diagonal":
        return demo_mod.case_rest_heads(n_classes)
    if text == "argmax":
        return None
    try:
        heads = [int(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(
            f"rest-heads must be 'diagonal', 'argmax' or a comma list "
            f"of class ids, got {text!r}") from None
    if len(heads) != n_classes:
        raise ConfigError(f"rest-heads needs {n_classes} ids, got "
                          f"{len(heads)}")
    return heads


@modelset.command("build")
@click.argument("transiograms", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", default="mathematical", show_default=True,
              help="linear, math[ematical], or mixed.")
@click.option("--rest-heads", default="diagonal", show_default=True,
              help="'diagonal', 'argmax', or comma-separated class ids.")
@click.option("--minor-threshold", type=float,
              default=demo_mod.MINOR_THRESHOLD, show_default=True,
              help="Marginal below which a class is minor (mixed method).")
@click.option("--validate-to", type=float, default=None,
              help="Constraint-sweep lag span; omitted leaves the document "
                   "unvalidated.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Output document [default: $MCRFSIM_OUT/modelset.json].")
@click.pass_context
def modelset_build(ctx, transiograms, method, rest_heads, minor_threshold,
                   validate_to, out):
    """Assemble a model set from experimental transiograms.

    Mathematical entries use exponential models with per-row shared ranges
    read off the experimental decay; bespoke fits come from the fitting
    workbench (see `mcrfsim fit --serve`).
    """
    method = canonical_method(method)
    exp = read_transiogram_csv(transiograms)
    heads = _parse_rest_heads(rest_heads, exp.n_classes)
    descriptors = None
    if method in ("mathematical", "mixed"):
        eff = heads if heads is not None else np.full(
            exp.n_classes, int(np.argmax(exp.proportions)))
        descriptors = demo_mod.math_descriptors(exp, eff)
    models = build_model_set(
        exp, method, descriptors=descriptors, rest_heads=heads,
        roles=demo_mod.class_roles(exp.proportions, minor_threshold))
    if validate_to is not None:
        report = validate_model_set(models, validate_to)
        click.echo(report.summary(), err=True)
        if not report.valid:
            ctx.exit(1)
    out = _out_path(out, "modelset.json")
    write_modelset(out, models)
    log.info("built %s model set for %d classes into %s",
             method, models.n_classes, out)
    click.echo(out)


@modelset.command("validate")
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@click.option("--lag-max", type=float, required=True,
              help="Sweep lags in [0, lag-max].")
@click.option("--step", type=float, default=0.25, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Write the stamped document here when valid.")
@click.pass_context
def modelset_validate(ctx, document, lag_max, step, out):
    """Constraint-check a model set document; exits 1 when invalid."""
    models = read_modelset(document)
    report = validate_model_set(models, lag_max, step=step)
    click.echo(report.summary())
    if not report.valid:
        ctx.exit(1)
    if out is not None:
        write_modelset(out, models)
        log.info("stamped document written to %s", out)


@cli.command()
@click.argument("template", type=click.Path(exists=True, dir_okay=False))
@click.argument("samples", type=click.Path(exists=True, dir_okay=False))
@click.argument("models", type=click.Path(exists=True, dir_okay=False))
@click.option("--radius", type=float, default=demo_mod.RADIUS,
              show_default=True, help="Search radius in pixels.")
@click.option("-n", "--realizations", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("-o", "--out", type=click.Path(file_okay=False), default=None,
              help="Output directory [default: $MCRFSIM_OUT/simulation].")
def simulate(template, samples, models, radius, realizations, seed, threads,
             out):
    """Simulate a conditional ensemble over the template's active cells.

    A model set without a sufficient validation stamp is constraint-checked
    to twice the search radius before simulation.
    """
    tpl = read_ascii_grid(template)
    pts = read_samples_csv(samples)
    ms = read_modelset(models)
    need = 2.0 * radius
    if ms.validated_lag_max is None or ms.validated_lag_max + 1e-9 < need:
        report = validate_model_set(ms, need)
        if not report.valid:
            raise ConfigError("model set fails constraint validation: "
                              + report.summary())
        log.info("validated model set to lag %g", need)
    ens = simulate_ensemble(tpl, pts, ms, radius, realizations, seed,
                            threads=threads)
    out = _out_dir(out, "simulation")
    for r, real in enumerate(ens.realizations):
        write_ascii_grid(os.path.join(out, f"realization_{r:03d}.asc"), real)
    meta = {
        "n_realizations": realizations,
        "base_seed": ens.meta["base_seed"],
        "seeds": ens.meta["seeds"],
        "radius": radius,
        "method": ms.method,
        "n_classes": ms.n_classes,
        "config_digest": ens.meta["config_digest"],
        "m0_cells": int(sum(s["m0_count"] for s in ens.meta["stats"])),
        "fallback_cells": int(sum(s["fallback_count"]
                                  for s in ens.meta["stats"])),
    }
    write_json(os.path.join(out, "meta.json"), meta)
    log.info("wrote %d realizations to %s", realizations, out)
    click.echo(out)


def _read_ensemble(directory):
    paths = sorted(glob.glob(os.path.join(directory, "realization_*.asc")))
    if not paths:
        raise EmptyInputError(f"no realization_*.asc files in {directory}")
    return Ensemble([read_ascii_grid(p) for p in paths])


@cli.command()
@click.option("-i", "--realizations", "directory", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of realization_*.asc files.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Output grid [default: $MCRFSIM_OUT/optimal.asc].")
def optimal(directory, out):
    """Reduce an ensemble to its maximum-probability class map."""
    ens = _read_ensemble(directory)
    best = optimal_map(occurrence_probability(ens))
    out = _out_path(out, "optimal.asc")
    write_ascii_grid(out, best)
    log.info("optimal map over %d realizations into %s", ens.n_real, out)
    click.echo(out)


_POLICIES = (POLICY_ALL, POLICY_EXCLUDE_SAMPLES)


@cli.command("accuracy")
@click.argument("map_path", metavar="MAP",
                type=click.Path(exists=True, dir_okay=False))
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", "samples_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Conditioning samples, excluded from scoring by default.")
@click.option("--policy", type=click.Choice(_POLICIES), default=None,
              help="Cell-counting policy [default: exclude_samples when "
                   "samples are given, else all_cells].")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Output CSV [default: $MCRFSIM_OUT/accuracy.csv].")
def accuracy_cmd(map_path, reference, samples_path, policy, out):
    """Score a class map against a reference grid."""
    map_ = read_ascii_grid(map_path)
    ref = read_ascii_grid(reference)
    pts = (read_samples_csv(samples_path, n_classes=None)
           if samples_path else None)
    if policy is None:
        policy = POLICY_EXCLUDE_SAMPLES if pts is not None else POLICY_ALL
    if policy == POLICY_EXCLUDE_SAMPLES and pts is None:
        raise click.UsageError(
            "--policy exclude_samples requires --samples")
    rep = accuracy(map_, ref, pts, policy=policy)
    out = _out_path(out, "accuracy.csv")
    write_accuracy_csv(out, [("map", rep)], n_classes=len(rep.per_class))
    log.info("overall accuracy %.2f%% over %d cells (%s)",
             rep.overall, rep.n_evaluated, policy)
    click.echo(f"{rep.overall:.4f}")


@cli.command()
@click.argument("reference", type=click.Path(exists=True, dir_okay=False))
@click.argument("samples", type=click.Path(exists=True, dir_okay=False))
@click.option("-i", "--realizations", "directory", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of realization_*.asc files.")
@click.option("--optimal", "optimal_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Optimal map grid; recomputed from the ensemble when "
                   "omitted.")
@click.option("-o", "--out", type=click.Path(file_okay=False), default=None,
              help="Output directory [default: $MCRFSIM_OUT/report].")
def report(reference, samples, directory, optimal_path, out):
    """Summarize an ensemble: accuracy, proportions, patch counts."""
    ref = read_ascii_grid(reference)
    pts = read_samples_csv(samples)
    ens = _read_ensemble(directory)
    best = (read_ascii_grid(optimal_path) if optimal_path
            else optimal_map(occurrence_probability(ens)))
    out = _out_dir(out, "report")

    best_acc = accuracy(best, ref, pts)
    real_accs = [accuracy(r, ref, pts) for r in ens.realizations]
    rows = [("optimal", best_acc)]
    rows += [(f"realization_{r:03d}", a) for r, a in enumerate(real_accs)]
    write_accuracy_csv(os.path.join(out, "accuracy.csv"), rows,
                       n_classes=pts.n_classes)
    write_proportions_csv(os.path.join(out, "proportions.csv"),
                          proportion_report(ens, ref, pts))
    summary = {
        "n_realizations": ens.n_real,
        "optimal_overall": best_acc.overall,
        "mean_realization_overall": float(np.mean(
            [a.overall for a in real_accs])),
        "optimal_patches": patch_count(best),
        "mean_realization_patches": float(np.mean(
            [patch_count(r) for r in ens.realizations])),
        "reference_patches": patch_count(ref),
    }
    write_json(os.path.join(out, "summary.json"), summary)
    log.info("report written to %s", out)
    click.echo(out)


@cli.command()
@click.option("--serve", is_flag=True, required=True,
              help="Start the fitting service (the only mode).")
@click.option("--samples", "samples_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Sample CSV that opens the fitting session.")
@click.option("--bin-width", type=float, default=demo_mod.BIN_WIDTH,
              show_default=True)
@click.option("--bins", type=int, default=demo_mod.N_BINS, show_default=True)
@click.option("--pixel-size", type=float, default=1.0, show_default=True)
@click.option("--radius", type=float, default=demo_mod.RADIUS,
              show_default=True, help="Search radius the session plans for.")
@click.option("--modelset", "modelset_path", default=None,
              type=click.Path(dir_okay=False),
              help="Draft document to edit and persist (created on save).")
@click.option("--reference", "reference_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Reference grid for preview accuracy readouts.")
@click.option("--static", "static_dir", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="Directory with the workbench files to serve at /.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8731, show_default=True)
def fit(serve, samples_path, bin_width, bins, pixel_size, radius,
        modelset_path, reference_path, static_dir, host, port):
    """Serve the interactive transiogram fitting workbench."""
    import uvicorn

    from .service import build_app

    app = build_app(samples_path, bin_width=bin_width, n_bins=bins,
                    pixel_size=pixel_size, radius=radius,
                    modelset_path=modelset_path,
                    reference_path=reference_path, static_dir=static_dir)
    log.info("fit service on http://%s:%d (session: %s)",
             host, port, samples_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command()
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("-n", "--realizations", type=int, default=10, show_default=True)
@click.option("--radius", type=float, default=demo_mod.RADIUS,
              show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("-o", "--out", type=click.Path(file_okay=False), default=None,
              help="Output directory [default: $MCRFSIM_OUT/demo].")
def demo(seed, realizations, radius, threads, out):
    """Run the bundled synthetic case study end to end."""
    out = _out_dir(out, "demo")
    summary = demo_mod.run_demo(out, seed=seed, n_realizations=realizations,
                                radius=radius, threads=threads)
    for name, block in summary["cases"].items():
        for method in ("linear", "mathematical", "mixed"):
            b = block[method]
            log.info("%s/%s: optimal %.2f%%, mean realization %.2f%%",
                     name, method, b["optimal_overall"],
                     b["mean_realization_overall"])
    click.echo(out)


main = cli

if __name__ == "__main__":
    main()
