"""Raster and point-sample data model.

Rasters are rectangular grids of integer class labels with a lower-left
georeferenced origin; row 0 is the *bottom* row, matching the ASCII-grid
convention used by the readers in :mod:`mcrfsim.io`.  All ground
coordinates are in the same linear units as ``cell_size``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyInputError

#: Label value marking cells with no data.  NODATA cells are excluded from
#: sampling, estimation, simulation targets and accuracy denominators.
NODATA = -1

ROLE_MAJOR = "major"
ROLE_MODERATE = "moderate"
ROLE_MINOR = "minor"
_ROLES = (ROLE_MAJOR, ROLE_MODERATE, ROLE_MINOR)

#: Classes with a sample proportion below this are suggested as "minor".
MINOR_PROPORTION_SUGGESTION = 0.05


@dataclass
class ClassInfo:
    """A class label with a user-declared role driving the mixed method."""

    id: int
    name: str = ""
    role: str = ROLE_MODERATE

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"class id must be nonnegative, got {self.id}")
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}, got {self.role!r}")
        if not self.name:
            self.name = f"class_{self.id}"


@dataclass
class Raster:
    """Rectangular grid of class labels with georeferencing metadata.

    ``labels`` has shape (nrows, ncols) with row 0 the bottom row; entries
    are class ids or :data:`NODATA`.
    """

    nrows: int
    ncols: int
    cell_size: float
    origin_x: float
    origin_y: float
    labels: np.ndarray

    def __post_init__(self):
        if self.nrows <= 0 or self.ncols <= 0:
            raise ValueError("raster dimensions must be positive")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if self.labels.shape != (self.nrows, self.ncols):
            raise DataError(
                f"labels shape {self.labels.shape} does not match "
                f"({self.nrows}, {self.ncols})"
            )

    @classmethod
    def blank(cls, nrows, ncols, cell_size=1.0, origin_x=0.0, origin_y=0.0):
        """An all-NODATA raster."""
        labels = np.full((nrows, ncols), NODATA, dtype=np.int32)
        return cls(nrows, ncols, cell_size, origin_x, origin_y, labels)

    @classmethod
    def domain(cls, nrows, ncols, cell_size=1.0, origin_x=0.0, origin_y=0.0):
        """An all-active (zero-labeled) raster, the usual simulation template.

        Simulation reads only the NODATA pattern of its template, so a
        domain raster means every cell gets simulated.
        """
        labels = np.zeros((nrows, ncols), dtype=np.int32)
        return cls(nrows, ncols, cell_size, origin_x, origin_y, labels)

    def copy_with(self, labels):
        """Same geometry, new labels."""
        return Raster(self.nrows, self.ncols, self.cell_size,
                      self.origin_x, self.origin_y, np.array(labels))

    def same_geometry(self, other):
        return (self.nrows == other.nrows and self.ncols == other.ncols
                and self.cell_size == other.cell_size
                and self.origin_x == other.origin_x
                and self.origin_y == other.origin_y)

    @property
    def data_mask(self):
        """Boolean mask of non-NODATA cells."""
        return self.labels != NODATA

    def n_data_cells(self):
        return int(np.count_nonzero(self.data_mask))


def cell_center(raster: Raster, row: int, col: int):
    """Ground coordinates of the center of cell (row, col); row 0 is the bottom row."""
    if not (0 <= row < raster.nrows and 0 <= col < raster.ncols):
        raise IndexError(f"cell ({row}, {col}) outside raster "
                         f"({raster.nrows} x {raster.ncols})")
    x = raster.origin_x + (col + 0.5) * raster.cell_size
    y = raster.origin_y + (row + 0.5) * raster.cell_size
    return x, y


def snap_to_cell(raster: Raster, x: float, y: float):
    """Grid cell containing ground point (x, y)."""
    col = int(np.floor((x - raster.origin_x) / raster.cell_size))
    row = int(np.floor((y - raster.origin_y) / raster.cell_size))
    if not (0 <= row < raster.nrows and 0 <= col < raster.ncols):
        raise IndexError(f"point ({x}, {y}) falls outside the raster")
    return row, col


@dataclass
class SampleSet:
    """Point observations (x, y, class) used for estimation and conditioning."""

    x: np.ndarray
    y: np.ndarray
    classes: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        self.classes = np.ascontiguousarray(self.classes, dtype=np.int32)
        if not (self.x.shape == self.y.shape == self.classes.shape):
            raise DataError("x, y and classes must have identical lengths")
        if self.x.ndim != 1:
            raise DataError("sample arrays must be one-dimensional")
        if self.n_classes <= 0:
            raise ValueError("n_classes must be positive")
        if len(self) and (self.classes.min() < 0
                          or self.classes.max() >= self.n_classes):
            raise DataError("sample class ids must be in [0, n_classes)")
        coords = set(zip(self.x.tolist(), self.y.tolist()))
        if len(coords) != len(self):
            raise DataError("sample points must have distinct (x, y) coordinates")

    def __len__(self):
        return self.x.shape[0]

    @property
    def empty_classes(self):
        """Class ids with zero sample points (permitted, but worth a warning)."""
        present = np.bincount(self.classes, minlength=self.n_classes)
        return [k for k in range(self.n_classes) if present[k] == 0]


def class_proportions(samples: SampleSet) -> np.ndarray:
    """Class proportions p_k = count(k) / total over a sample set; sums to 1."""
    if len(samples) == 0:
        raise EmptyInputError("cannot compute proportions of an empty sample set")
    counts = np.bincount(samples.classes, minlength=samples.n_classes)
    return counts / counts.sum()


def check_proportions(p, n_classes=None, atol=1e-12):
    """Validate a proportion vector: nonnegative entries summing to 1."""
    p = np.asarray(p, dtype=np.float64)
    if n_classes is not None and p.shape != (n_classes,):
        raise ValueError(f"expected {n_classes} proportions, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("proportions must be nonnegative")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"proportions must sum to 1, got {p.sum()!r}")
    return p


def random_sample(reference: Raster, n: int, seed: int) -> SampleSet:
    """Draw n distinct cells uniformly without replacement from a labeled raster.

    Sample coordinates are cell centers; NODATA cells are never drawn.  The
    draw is deterministic for a fixed seed.
    """
    rows, cols = np.nonzero(reference.data_mask)
    if n > rows.size:
        raise ValueError(
            f"requested {n} samples but the raster has only {rows.size} data cells"
        )
    rng = np.random.default_rng(seed)
    pick = rng.choice(rows.size, size=n, replace=False)
    r, c = rows[pick], cols[pick]
    x = reference.origin_x + (c + 0.5) * reference.cell_size
    y = reference.origin_y + (r + 0.5) * reference.cell_size
    n_classes = int(reference.labels.max()) + 1
    return SampleSet(x, y, reference.labels[r, c], n_classes)


def generate_blob_reference(nrows, ncols, n_classes, class_weights,
                            n_seeds, seed) -> Raster:
    """Synthetic patchy reference map for desk-scale experiments.

    Scatters ``n_seeds`` seed points over the grid, assigns each seed a class
    (seed counts per class follow ``class_weights`` by largest remainder, so
    every positive-weight class gets at least one seed when possible), and
    labels every cell with the class of its nearest seed.  The result is a
    polygon-like class mosaic whose class proportions approach the weights as
    ``n_seeds`` grows.

    Parameters
    ----------
    nrows, ncols : int
        Grid dimensions.
    n_classes : int
        Number of classes.
    class_weights : array-like
        Target class proportions, length ``n_classes``, summing to 1.
    n_seeds : int
        Number of seed points; must be >= n_classes.
    seed : int
        RNG seed; the map is deterministic per seed.
    """
    if nrows <= 0 or ncols <= 0:
        raise ValueError("raster dimensions must be positive")
    weights = check_proportions(class_weights, n_classes)
    if n_seeds < n_classes:
        raise ValueError("n_seeds must be at least n_classes")
    rng = np.random.default_rng(seed)

    # Largest-remainder allocation of seeds to classes.
    ideal = weights * n_seeds
    alloc = np.floor(ideal).astype(np.int64)
    short = n_seeds - alloc.sum()
    order = np.argsort(-(ideal - alloc), kind="stable")
    alloc[order[:short]] += 1
    for k in range(n_classes):
        if weights[k] > 0 and alloc[k] == 0:
            donor = int(np.argmax(alloc))
            alloc[donor] -= 1
            alloc[k] = 1
    seed_classes = np.repeat(np.arange(n_classes, dtype=np.int32), alloc)
    rng.shuffle(seed_classes)

    flat = rng.choice(nrows * ncols, size=n_seeds, replace=False)
    seed_r = (flat // ncols).astype(np.float64) + 0.5
    seed_c = (flat % ncols).astype(np.float64) + 0.5

    rr, cc = np.meshgrid(np.arange(nrows) + 0.5, np.arange(ncols) + 0.5,
                         indexing="ij")
    d2 = ((rr.ravel()[:, None] - seed_r[None, :]) ** 2
          + (cc.ravel()[:, None] - seed_c[None, :]) ** 2)
    nearest = np.argmin(d2, axis=1)
    labels = seed_classes[nearest].reshape(nrows, ncols)
    return Raster(nrows, ncols, 1.0, 0.0, 0.0, labels)
