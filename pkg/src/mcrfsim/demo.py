"""Self-contained synthetic case study.

Generates a patchy reference map, surveys it at two densities, fits model
sets by all three joint modeling methods, simulates conditional ensembles,
and writes a report tree.  Everything is deterministic for a fixed seed;
the output tree contains no timestamps or machine-local paths, so two runs
with the same seed produce identical files.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .engine import simulate_ensemble
from .errors import DataError
from .grid import Raster, SampleSet, generate_blob_reference, random_sample
from .io import (write_accuracy_csv, write_ascii_grid, write_json,
                 write_modelset, write_proportions_csv, write_samples_csv,
                 write_transiogram_csv)
from .models import (EXPONENTIAL_AUTO, EXPONENTIAL_CROSS, METHODS,
                     ModelDescriptor, TransiogramModelSet, build_model_set,
                     validate_model_set)
from .postprocess import (Ensemble, accuracy, occurrence_probability,
                          optimal_map, patch_count, proportion_report)
from .transiograms import (ExperimentalTransiogramMatrix, LagBinSpec,
                           estimate_experimental)

#: Default synthetic case: grid, class mix, survey sizes.
GRID_SHAPE = (150, 150)
CLASS_WEIGHTS = (0.30, 0.24, 0.18, 0.14, 0.125, 0.015)
N_CLASSES = len(CLASS_WEIGHTS)
N_SEEDS = 70
DENSE_N = 675
SPARSE_N = 180
BIN_WIDTH = 4.0
N_BINS = 25
RADIUS = 10.0
SURVEYS = (("dense", DENSE_N), ("sparse", SPARSE_N))

#: Classes whose marginal falls below this are treated as minor by the
#: mixed method.
MINOR_THRESHOLD = 0.05


def build_reference(seed) -> Raster:
    """The synthetic reference map for the case study."""
    nrows, ncols = GRID_SHAPE
    return generate_blob_reference(nrows, ncols, N_CLASSES, CLASS_WEIGHTS,
                                   N_SEEDS, seed=seed)


def survey(reference: Raster, n: int, seed) -> SampleSet:
    """Random survey; every class must be hit at least once."""
    samples = random_sample(reference, n, seed=seed)
    empty = samples.empty_classes
    if empty:
        raise DataError(
            f"survey of {n} points left classes {empty} unsampled; "
            "use a different seed or a larger survey")
    return samples


def reduce_class(samples: SampleSet, class_id: int, keep: int = 2) -> SampleSet:
    """Thin one class to at most ``keep`` points, earliest points first.

    Models a survey that barely touched a minor class; the rest of the
    sample set is untouched and stays in its original order.
    """
    idx = np.flatnonzero(samples.classes == class_id)
    drop = set(idx[keep:].tolist())
    mask = np.array([i not in drop for i in range(len(samples))])
    return SampleSet(samples.x[mask], samples.y[mask],
                     samples.classes[mask], samples.n_classes)


def auto_range(exp: ExperimentalTransiogramMatrix, tail: int) -> float:
    """Range guess from the tail's experimental auto decay.

    An exponential auto passes through c + (1 - c) / e at one third of its
    range, so the first bin at or below that level pins the range.  Falls
    back to 20 pixels when the row never decays that far (or is undefined),
    clamped to [4, 60].
    """
    p = float(exp.proportions[tail])
    target = p + (1.0 - p) * math.exp(-1.0)
    for k in exp.defined_bins(tail, tail):
        if exp.prob[tail, tail, k] <= target:
            return min(max(3.0 * float(exp.lags[k]), 4.0), 60.0)
    return 20.0


def math_descriptors(exp: ExperimentalTransiogramMatrix, rest_heads) -> dict:
    """Exponential descriptor matrix with per-row shared ranges.

    Sills are left as templates so each resolves to its head marginal;
    with a shared range per row the entries then close exactly against the
    Rest complement at every lag.
    """
    n = exp.n_classes
    rest_heads = np.asarray(rest_heads)
    out = {}
    for i in range(n):
        d = auto_range(exp, i)
        for j in range(n):
            if j == int(rest_heads[i]):
                continue
            kind = EXPONENTIAL_AUTO if i == j else EXPONENTIAL_CROSS
            out[(i, j)] = ModelDescriptor(kind, range=d)
    return out


def case_rest_heads(n_classes: int) -> np.ndarray:
    """Rest slots on the diagonal, one per row.

    The auto entry is the largest term of its row at short lags, so closing
    the row through it keeps the complement positive even when a row mixes
    interpolated and mathematical entries; for an all-mathematical row the
    complement reproduces the exponential auto formula exactly.
    """
    return np.arange(n_classes, dtype=np.int64)


def class_roles(marginals, threshold: float = MINOR_THRESHOLD) -> list:
    """Minor below the threshold, major above; consulted by mixed fits."""
    return ["minor" if p < threshold else "major" for p in marginals]


def fit_models(exp: ExperimentalTransiogramMatrix, method: str,
               radius: float = RADIUS) -> TransiogramModelSet:
    """Build a model set by the named method and validate it for ``radius``.

    Mathematical entries come from :func:`math_descriptors`; the mixed
    method applies them to minor-class rows and columns only.  The result
    is constraint-checked out to twice the search radius, as simulation
    requires.
    """
    rest_heads = case_rest_heads(exp.n_classes)
    descriptors = math_descriptors(exp, rest_heads)
    roles = class_roles(exp.proportions)
    models = build_model_set(exp, method, descriptors=descriptors,
                             rest_heads=rest_heads, roles=roles)
    report = validate_model_set(models, 2.0 * radius)
    if not report.valid:
        raise DataError(f"{method} model set failed validation: "
                        f"{report.summary()}")
    return models


@dataclass
class CaseResult:
    """One method's ensemble run against a reference, with its scores."""

    method: str
    models: TransiogramModelSet
    ensemble: Ensemble
    optimal: Raster
    optimal_accuracy: object
    realization_accuracy: list

    @property
    def mean_realization_overall(self) -> float:
        return float(np.mean([r.overall for r in self.realization_accuracy]))


def simulate_case(reference: Raster, samples: SampleSet, method: str,
                  n_realizations: int, seed, radius: float = RADIUS,
                  threads: int = 1, bin_width: float = BIN_WIDTH,
                  n_bins: int = N_BINS) -> CaseResult:
    """Estimate, fit, simulate and score one survey with one method."""
    exp = estimate_experimental(samples, LagBinSpec(bin_width, n_bins),
                                pixel_size=reference.cell_size)
    models = fit_models(exp, method, radius)
    ens = simulate_ensemble(reference, samples, models, radius,
                            n_realizations, seed, threads=threads)
    best = optimal_map(occurrence_probability(ens))
    return CaseResult(
        method=models.method, models=models, ensemble=ens, optimal=best,
        optimal_accuracy=accuracy(best, reference, samples),
        realization_accuracy=[accuracy(r, reference, samples)
                              for r in ens.realizations])


def case_seed(base_seed: int, survey_name: str, method: str) -> int:
    """Stable per-case simulation seed derived from the demo seed."""
    combo = [f"{s}:{m}" for s, _ in SURVEYS for m in METHODS]
    offset = combo.index(f"{survey_name}:{method}")
    return int(np.random.SeedSequence((base_seed, 1000 + offset))
               .generate_state(1)[0])


def _case_summary(result: CaseResult, reference: Raster) -> dict:
    stats = result.ensemble.meta.get("stats", [])
    return {
        "optimal_overall": result.optimal_accuracy.overall,
        "optimal_per_class": [float(v)
                              for v in result.optimal_accuracy.per_class],
        "mean_realization_overall": result.mean_realization_overall,
        "optimal_patches": patch_count(result.optimal),
        "mean_realization_patches": float(np.mean(
            [patch_count(r) for r in result.ensemble.realizations])),
        "reference_patches": patch_count(reference),
        "m0_cells": int(sum(s["m0_count"] for s in stats)),
        "fallback_cells": int(sum(s["fallback_count"] for s in stats)),
    }


def run_demo(out_dir, seed: int = 7, n_realizations: int = 10,
             radius: float = RADIUS, threads: int = 1) -> dict:
    """Run the full case study and write the report tree under ``out_dir``.

    Returns the summary dict that is also written as ``summary.json``.
    """
    os.makedirs(out_dir, exist_ok=True)
    reference = build_reference(seed)
    write_ascii_grid(os.path.join(out_dir, "reference.asc"), reference)

    summary = {
        "seed": int(seed),
        "n_realizations": int(n_realizations),
        "radius": float(radius),
        "bin_width": BIN_WIDTH,
        "n_bins": N_BINS,
        "grid": list(GRID_SHAPE),
        "class_weights": list(CLASS_WEIGHTS),
        "cases": {},
    }

    for name, n in SURVEYS:
        case_dir = os.path.join(out_dir, name)
        os.makedirs(case_dir, exist_ok=True)
        samples = survey(reference, n, seed + (1 if name == "dense" else 2))
        write_samples_csv(os.path.join(case_dir, "samples.csv"), samples)
        exp = estimate_experimental(samples, LagBinSpec(BIN_WIDTH, N_BINS),
                                    pixel_size=reference.cell_size)
        write_transiogram_csv(os.path.join(case_dir, "transiograms.csv"), exp)

        case_block = {"n_samples": len(samples)}
        for method in METHODS:
            mdir = os.path.join(case_dir, method)
            os.makedirs(mdir, exist_ok=True)
            result = simulate_case(
                reference, samples, method, n_realizations,
                case_seed(seed, name, method), radius=radius,
                threads=threads)
            write_modelset(os.path.join(mdir, "modelset.json"), result.models)
            write_ascii_grid(os.path.join(mdir, "optimal.asc"),
                             result.optimal)
            write_ascii_grid(os.path.join(mdir, "realization_000.asc"),
                             result.ensemble.realizations[0])
            write_accuracy_csv(
                os.path.join(mdir, "accuracy.csv"),
                [("optimal", result.optimal_accuracy),
                 ("realization_000", result.realization_accuracy[0])],
                n_classes=samples.n_classes)
            write_proportions_csv(
                os.path.join(mdir, "proportions.csv"),
                proportion_report(result.ensemble, reference, samples))
            case_block[method] = _case_summary(result, reference)
        summary["cases"][name] = case_block

    write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary
