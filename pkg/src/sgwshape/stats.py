"""Two-group comparison of shape descriptors.

The analysis chain is: reduce the n x p descriptor matrix with PCA, test
group separation with a one-way two-group MANOVA (Wilks' lambda and its
exact F transform), and back it with a nonparametric permutation test that
reshuffles group labels under a seeded generator.

Wilks' lambda is det(E) / det(E + H) with E the within-group and H the
between-group scatter matrix; smaller values mean stronger separation.
For two groups the F transform is exact, with (d, n - d - 1) degrees of
freedom at feature dimension d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import f as f_distribution

from .errors import GroupCountError, InvalidParam, SingularScatter

__all__ = [
    "DataMatrix",
    "GroupComparison",
    "pca_reduce",
    "wilks_lambda",
    "manova_two_group",
    "permutation_test",
    "compare_groups",
]


@dataclass(frozen=True)
class DataMatrix:
    """Feature matrix with one labeled row per shape.

    Attributes
    ----------
    X : (n, p) float64, finite
    labels : length-n tuple of group labels
    ids : length-n tuple of shape identifiers
    """

    X: np.ndarray
    labels: tuple
    ids: tuple = ()

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        if x.ndim != 2:
            raise InvalidParam(f"X must be 2-dimensional, got shape {x.shape}")
        if x.shape[0] < 4:
            raise InvalidParam(f"need at least 4 rows, got {x.shape[0]}")
        if not np.isfinite(x).all():
            raise InvalidParam("X contains non-finite entries")
        labels = tuple(self.labels)
        if len(labels) != x.shape[0]:
            raise InvalidParam(f"{len(labels)} labels for {x.shape[0]} rows")
        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(x.shape[0]))
        if len(ids) != x.shape[0]:
            raise InvalidParam(f"{len(ids)} ids for {x.shape[0]} rows")
        for label in dict.fromkeys(labels):
            if labels.count(label) < 2:
                raise InvalidParam(f"group {label!r} has fewer than 2 members")
        x.setflags(write=False)
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def two_group_mask(self) -> np.ndarray:
        """Boolean membership of the first-appearing group.

        Raises GroupCountError unless there are exactly two distinct labels.
        """
        distinct = list(dict.fromkeys(self.labels))
        if len(distinct) != 2:
            raise GroupCountError(
                f"two-group comparison needs exactly 2 groups, got {len(distinct)}: {distinct}"
            )
        return np.array([lab == distinct[0] for lab in self.labels])


@dataclass(frozen=True)
class GroupComparison:
    """Outcome of one two-group comparison."""

    statistic: float  # Wilks' lambda on the true labels
    manova_p: float
    permutation_p: float
    pca_dims: int
    n_permutations: int
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.manova_p <= 1.0 and 0.0 <= self.permutation_p <= 1.0):
            raise InvalidParam(
                f"p-values out of [0, 1]: manova={self.manova_p}, "
                f"permutation={self.permutation_p}"
            )


def pca_reduce(data: DataMatrix, d: int) -> DataMatrix:
    """Project rows onto the top d principal directions of the centered X.

    Directions are ordered by singular value and sign-fixed so that each
    loading vector's largest-magnitude entry is positive, making the output
    deterministic. Labels and ids are preserved.
    """
    limit = min(data.n - 1, data.p)
    if not 1 <= d <= limit:
        raise InvalidParam(f"pca dimension must be in [1, {limit}], got {d}")
    centered = data.X - data.X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:d]
    lead = np.abs(components).argmax(axis=1)
    signs = np.sign(components[np.arange(d), lead])
    signs[signs == 0.0] = 1.0
    return DataMatrix(centered @ (components * signs[:, None]).T, data.labels, data.ids)


def wilks_lambda(X: np.ndarray, mask: np.ndarray) -> float:
    """Wilks' lambda det(E) / det(E + H) for the two-group split `mask`."""
    first = X[mask]
    second = X[~mask]
    mu1 = first.mean(axis=0)
    mu2 = second.mean(axis=0)
    mu = X.mean(axis=0)
    r1 = first - mu1
    r2 = second - mu2
    within = r1.T @ r1 + r2.T @ r2
    d1 = mu1 - mu
    d2 = mu2 - mu
    between = len(first) * np.outer(d1, d1) + len(second) * np.outer(d2, d2)

    sign_e, logdet_e = np.linalg.slogdet(within)
    if sign_e <= 0.0 or not math.isfinite(logdet_e):
        raise SingularScatter(
            "within-group scatter matrix is singular; reduce the feature dimension"
        )
    sign_t, logdet_t = np.linalg.slogdet(within + between)
    if sign_t <= 0.0 or not math.isfinite(logdet_t):
        raise SingularScatter("total scatter matrix is singular")
    return float(math.exp(logdet_e - logdet_t))


def manova_two_group(data: DataMatrix) -> tuple[float, float]:
    """One-way two-group MANOVA: returns (wilks_lambda, p_value).

    Uses the exact F transform F = ((n - d - 1) / d) (1 - L) / L with
    (d, n - d - 1) degrees of freedom, valid for two groups.
    """
    mask = data.two_group_mask()
    n, d = data.n, data.p
    if d > n - 2:
        raise SingularScatter(
            f"feature dimension {d} exceeds within-group degrees of freedom {n - 2}; "
            "reduce the dimension"
        )
    lam = wilks_lambda(data.X, mask)
    dof2 = n - d - 1
    f_stat = (dof2 / d) * (1.0 - lam) / lam
    return lam, float(f_distribution.sf(f_stat, d, dof2))


def permutation_test(data: DataMatrix, n_perm: int, seed: int) -> tuple[float, float]:
    """Permutation test on Wilks' lambda: returns (observed, p_value).

    Labels are reshuffled n_perm times with per-replicate seeded substreams,
    so replicates can run in any order (or concurrently) with identical
    results. The p-value uses the add-one estimator
    ``(1 + #{permuted lambda <= observed}) / (n_perm + 1)``. When the whole
    label-assignment space is no larger than n_perm it is enumerated
    instead and the p-value becomes the exact fraction over that space.
    """
    if n_perm < 1:
        raise InvalidParam(f"need n_perm >= 1, got {n_perm}")
    mask = data.two_group_mask()
    observed = wilks_lambda(data.X, mask)

    n = data.n
    n_first = int(mask.sum())
    space = math.comb(n, n_first)
    if space <= n_perm:
        hits = 0
        for chosen in combinations(range(n), n_first):
            trial = np.zeros(n, dtype=bool)
            trial[list(chosen)] = True
            if wilks_lambda(data.X, trial) <= observed:
                hits += 1
        return observed, hits / space

    hits = 0
    for child in np.random.SeedSequence(seed).spawn(n_perm):
        rng = np.random.default_rng(child)
        trial = mask[rng.permutation(n)]
        if wilks_lambda(data.X, trial) <= observed:
            hits += 1
    return observed, (1 + hits) / (n_perm + 1)


def compare_groups(data: DataMatrix, pca_dims: int, n_perm: int, seed: int) -> GroupComparison:
    """PCA reduction, MANOVA, and permutation test in one pass."""
    reduced = pca_reduce(data, pca_dims)
    lam, manova_p = manova_two_group(reduced)
    _, perm_p = permutation_test(reduced, n_perm, seed)
    space = math.comb(data.n, int(reduced.two_group_mask().sum()))
    return GroupComparison(
        statistic=lam,
        manova_p=manova_p,
        permutation_p=perm_p,
        pca_dims=pca_dims,
        n_permutations=space if space <= n_perm else n_perm,
        seed=seed,
    )
