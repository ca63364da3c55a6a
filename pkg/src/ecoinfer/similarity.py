"""Dataset similarity via normalized Manhattan distance under a row matching.

Both datasets are min-max normalized jointly (per-attribute min/max over
their concatenation) so the distances are comparable. Row pairing is either
the cheap greedy rank-sum heuristic (sort rows by the sum of normalized
attribute values and pair by rank), the exact minimum-cost bipartite
assignment (Hungarian method, used as oracle and opt-in mode), or the
identity pairing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .tabular import Dataset, SchemaError

GREEDY_RANK = "greedy_rank"
EXACT_ASSIGNMENT = "exact_assignment"
IDENTITY = "identity"
METHODS = (GREEDY_RANK, EXACT_ASSIGNMENT, IDENTITY)

_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class RowMatching:
    """A bijection row-index-of-A -> row-index-of-B and its cost."""

    permutation: np.ndarray  # permutation[i] = matched row of B for row i of A
    method: str
    total_distance: float
    average_distance: float


def row_distance(a, b) -> float:
    """Manhattan distance between two (jointly normalized) rows, scaled by
    the inverse of the number of attributes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise SchemaError(f"row shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).mean())


def joint_normalize(a: Dataset, b: Dataset,
                    feature_subset: list[str] | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Min-max normalize both datasets with shared per-attribute min/max.

    Constant attributes (over the concatenation) map to 0.
    """
    _check_compatible(a, b)
    names = list(feature_subset) if feature_subset is not None \
        else a.schema.column_names
    ma = a.to_matrix(names)
    mb = b.to_matrix(names)
    both = np.vstack([ma, mb])
    lo = both.min(axis=0)
    span = both.max(axis=0) - lo
    span[span == 0] = 1.0  # constant columns -> all zeros either way
    return (ma - lo) / span, (mb - lo) / span


def _check_compatible(a: Dataset, b: Dataset) -> None:
    if a.schema != b.schema:
        raise SchemaError("datasets have different schemas")
    if a.n_rows != b.n_rows:
        raise SchemaError(f"datasets differ in size: {a.n_rows} vs {b.n_rows}")
    if a.n_rows < 1:
        raise SchemaError("cannot match empty datasets")


def match_rows(a: Dataset, b: Dataset, method: str = GREEDY_RANK,
               feature_subset: list[str] | None = None) -> RowMatching:
    """Pair every row of a with a distinct row of b.

    greedy_rank sorts both datasets by per-row attribute sums (ties broken
    by original row index) and pairs by rank. exact_assignment solves the
    minimum-total-distance assignment on the dense n x n distance matrix;
    O(n^3), intended for n up to a few hundred. identity pairs row i with
    row i.
    """
    if method not in METHODS:
        raise ValueError(f"unknown matching method {method!r}")
    na, nb = joint_normalize(a, b, feature_subset)
    n, m = na.shape
    if method == IDENTITY:
        perm = np.arange(n)
    elif method == GREEDY_RANK:
        ia = np.argsort(na.sum(axis=1), kind="stable")
        ib = np.argsort(nb.sum(axis=1), kind="stable")
        perm = np.empty(n, dtype=np.int64)
        perm[ia] = ib
    else:
        cost = np.abs(na[:, None, :] - nb[None, :, :]).sum(axis=2) / m
        rows, cols = linear_sum_assignment(cost)
        perm = np.empty(n, dtype=np.int64)
        perm[rows] = cols
    total = float(np.abs(na - nb[perm]).sum() / m)
    return RowMatching(permutation=perm, method=method,
                       total_distance=total, average_distance=total / n)


def similarity(a: Dataset, b: Dataset, method: str = GREEDY_RANK,
               feature_subset: list[str] | None = None) -> float:
    """One minus the average matched-row distance; 1 means identical."""
    return 1.0 - match_rows(a, b, method, feature_subset).average_distance


def exact_match_fraction(a: Dataset, b: Dataset, matching: RowMatching,
                         feature_subset: list[str] | None = None) -> float:
    """Fraction of matched row pairs at distance zero."""
    na, nb = joint_normalize(a, b, feature_subset)
    if len(matching.permutation) != na.shape[0]:
        raise SchemaError("matching size does not fit the datasets")
    d = np.abs(na - nb[matching.permutation]).sum(axis=1)
    return float(np.count_nonzero(d <= _ZERO_TOL * na.shape[1])) / na.shape[0]
