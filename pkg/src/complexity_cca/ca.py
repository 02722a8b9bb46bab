"""Correspondence analysis of the specialization matrix (ECI / PCI).

Country axes are eigenvectors of the row-stochastic co-occurrence matrix
``C^c = Xd' Xu``; product axes are their ubiquity-normalized averages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, ConvergenceError, DegenerateTableError, DisconnectedError, NumericalError
from .ingest import SpecializationMatrix, weighted_standardize

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
TIE_TOL = 1e-12


def cooccurrence_country(sm: SpecializationMatrix) -> np.ndarray:
    """Country-by-country matrix ``C^c = Xd' Xu`` (rows sum to 1)."""
    return sm.Xd.T @ sm.Xu


def cooccurrence_product(sm: SpecializationMatrix) -> np.ndarray:
    """Product-by-product matrix ``C^p = Xu Xd'`` (rows sum to 1)."""
    return sm.Xu @ sm.Xd.T


def cooccurrence_trace(sm: SpecializationMatrix) -> float:
    """``tr(C^c) = sum_qp x_qp / (d_p s_q)``; equals ``tr(C^p)``."""
    return float((sm.X / np.outer(sm.s, sm.d)).sum())


def chi_square_distances(sm: SpecializationMatrix) -> np.ndarray:
    """Pairwise chi-square distances between country profiles of ``X``."""
    profiles = sm.Xd  # column p is the profile x_.p / d_p
    mass = sm.x_plus / sm.s
    diff = profiles[:, :, None] - profiles[:, None, :]
    return np.sqrt(np.einsum("q,qab->ab", mass, diff**2))


def weighted_corr(a, b, w) -> float:
    """Weighted Pearson correlation with weights ``w`` summing to 1."""
    a = np.asarray(a, dtype=float) - w @ a
    b = np.asarray(b, dtype=float) - w @ b
    denom = np.sqrt((w @ a**2) * (w @ b**2))
    if denom == 0:
        return 0.0
    return float((w @ (a * b)) / denom)


def orient_axes(axes, reference):
    """Flip columns of ``axes`` so that ``reference(column) >= 0``.

    ``reference`` maps a column to a signed score. A zero score falls back
    to making the largest-magnitude entry positive. Returns the signs used.
    """
    axes = np.asarray(axes)
    signs = np.ones(axes.shape[1])
    for j in range(axes.shape[1]):
        col = axes[:, j]
        score = reference(col)
        if abs(score) <= TIE_TOL:
            score = col[np.argmax(np.abs(col))]
        if score < 0:
            signs[j] = -1.0
    return signs


def diversity_reference(sm):
    d = sm.d.astype(float)

    def score(col):
        if np.ptp(d) == 0 or np.ptp(col) == 0:
            return 0.0
        return float(np.corrcoef(col, d)[0, 1])

    return score


def _largest_entry_reference(col):
    return 0.0


def check_connected(sm: SpecializationMatrix):
    comps = sm.components()
    if len(comps) > 1:
        listing = [
            {"products": [sm.product_labels[i] for i in p], "countries": [sm.country_labels[j] for j in c]}
            for p, c in comps
        ]
        sizes = ", ".join(f"{len(p)}x{len(c)}" for p, c in comps)
        raise DisconnectedError(
            f"bipartite graph of X has {len(comps)} components ({sizes}); "
            "eigenvalue 1 is repeated",
            components=listing,
        )


@dataclass
class ReflectionsTrace:
    countries: list  # iteration i -> (m,) array
    products: list  # iteration i -> (n,) array

    @property
    def iterations(self):
        return len(self.countries) - 1


def method_of_reflections(sm: SpecializationMatrix, k: int) -> ReflectionsTrace:
    """Un-normalized reflections seeded with diversity and ubiquity.

    Both indicators drift towards constants as ``k`` grows; no
    normalization is applied.
    """
    if k < 0:
        raise ArgumentError(f"k must be >= 0, got {k}")
    kc = [sm.d.astype(np.float64)]
    kp = [sm.s.astype(np.float64)]
    for _ in range(k):
        country = sm.country_average(kp[-1])
        product = sm.product_average(kc[-1])
        kc.append(country)
        kp.append(product)
    return ReflectionsTrace(kc, kp)


def initial_scores(m, weights, seed=None):
    """Distinct starting scores: country index rank (or a seeded permutation), W-standardized."""
    ranks = np.arange(m, dtype=np.float64)
    if seed is not None:
        ranks = np.random.default_rng(seed).permutation(ranks)
    v, _ = weighted_standardize(ranks, weights)
    return v


class ReciprocalAveraging(NamedTuple):
    country_axis: np.ndarray
    product_axis: np.ndarray
    eigenvalue: float
    iterations: int
    residual: float


def reciprocal_averaging(sm: SpecializationMatrix, tol: float = DEFAULT_TOL,
                         max_iter: int = DEFAULT_MAX_ITER, seed=None) -> ReciprocalAveraging:
    """Leading non-trivial CA axis by alternating averages with re-standardization.

    The scale factor removed at each standardization converges to the
    eigenvalue. Raises :class:`ConvergenceError` after ``max_iter`` rounds.
    """
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    check_connected(sm)
    w = sm.w
    v = initial_scores(sm.shape[1], w, seed)
    scale = np.nan
    delta = np.inf
    for it in range(1, max_iter + 1):
        c, _ = sm.reflect(v)
        c -= w @ c
        scale = float(np.sqrt(w @ c**2))
        if scale <= 1e-300:
            raise NumericalError("reciprocal averaging collapsed to a constant vector")
        c /= scale
        delta = float(np.max(np.abs(c - v)))
        v = c
        if delta < tol:
            break
    else:
        raise ConvergenceError(
            f"reciprocal averaging did not converge in {max_iter} iterations "
            f"(max change {delta:.3e})", residual=delta, iterations=max_iter,
        )
    v = v * orient_axes(v[:, None], diversity_reference(sm))[0]
    return ReciprocalAveraging(v, sm.product_average(v), scale, it, delta)


@dataclass
class CaResult:
    eigenvalues: np.ndarray  # (k,) retained non-trivial eigenvalues
    country_axes: np.ndarray  # (m, k) W-standardized; column 0 is ECI
    product_axes: np.ndarray  # (n, k) Xu @ country_axes; column 0 is PCI
    country_scores: np.ndarray  # (m, k) Xd' @ product_axes
    inertia_shares: np.ndarray
    trace: float
    all_eigenvalues: np.ndarray  # all m-1 non-trivial eigenvalues
    country_labels: tuple
    product_labels: tuple
    method_meta: dict = field(default_factory=dict)

    kind = "CA"

    @property
    def E_std(self):
        return self.country_axes

    @property
    def U(self):
        return self.product_axes

    @property
    def V(self):
        return self.country_scores

    @property
    def num_axes(self):
        return len(self.eigenvalues)

    @property
    def eci(self):
        return self.country_axes[:, 0]

    @property
    def pci(self):
        return self.product_axes[:, 0]


def _repeated(values, tol=TIE_TOL):
    vals = np.asarray(values)
    return [int(i) for i in np.flatnonzero(np.abs(np.diff(vals)) <= tol * max(1.0, abs(vals[0])))]


def ca_eigen(sm: SpecializationMatrix, num_axes: int = 1, largest_component: bool = False,
             sign: str = "diversity") -> CaResult:
    """CA via the symmetric form ``D^-1/2 X' S^-1 X D^-1/2`` of ``C^c``.

    Parameters
    ----------
    num_axes : number of non-trivial axes to keep, ``1 <= num_axes <= m - 1``.
    largest_component : analyze the largest connected component instead of
        raising :class:`DisconnectedError`.
    sign : ``"diversity"`` (default) orients axes to correlate positively
        with diversity; ``"max-entry"`` makes the largest entry positive.
    """
    meta = {"solver": "symmetric-eigh"}
    if largest_component and not sm.is_connected():
        full = sm
        sm = sm.largest_component()
        meta["largest_component"] = {"products": sm.shape[0], "countries": sm.shape[1],
                                     "of": list(full.shape)}
    else:
        check_connected(sm)
    n, m = sm.shape
    if not 1 <= num_axes <= m - 1:
        raise ArgumentError(f"num_axes must be in [1, {m - 1}], got {num_axes}")

    sqrt_d = np.sqrt(sm.d.astype(float))
    B = sm.X / np.sqrt(sm.s.astype(float))[:, None] / sqrt_d[None, :]
    M = B.T @ B
    mu, vecs = np.linalg.eigh(M)
    order = np.argsort(-mu, kind="stable")
    mu, vecs = mu[order], vecs[:, order]
    if abs(mu[0] - 1.0) > 1e-10:
        raise NumericalError(f"trivial eigenvalue reproduced as {mu[0]!r}, expected 1")
    if mu[1] >= 1.0 - 1e-10:
        raise DisconnectedError("eigenvalue 1 is repeated")
    nontrivial = mu[1:]
    trace = cooccurrence_trace(sm)
    if trace <= 1.0 + 1e-12:
        raise DegenerateTableError(f"trace of C^c is {trace}, no inertia to decompose")

    axes = vecs[:, 1:num_axes + 1] / sqrt_d[:, None]
    axes, flat = weighted_standardize(axes, sm.w)
    if flat.any():
        raise NumericalError("degenerate country axis with zero weighted variance")
    if sign == "diversity":
        ref = diversity_reference(sm)
    elif sign == "max-entry":
        ref = _largest_entry_reference
    else:
        raise ArgumentError(f"unknown sign convention {sign!r}")
    axes = axes * orient_axes(axes, ref)
    U = sm.product_average(axes)
    V = sm.country_average(U)

    eig = nontrivial[:num_axes].copy()
    meta["trivial_eigenvalue"] = float(mu[0])
    rep = _repeated(nontrivial[:num_axes + 1])
    if rep:
        meta["repeated_eigenvalues"] = rep
        log.warning("repeated non-trivial eigenvalues at axes %s; those axes are not unique", rep)
    return CaResult(
        eigenvalues=eig,
        country_axes=axes,
        product_axes=U,
        country_scores=V,
        inertia_shares=eig / (trace - 1.0),
        trace=trace,
        all_eigenvalues=nontrivial.copy(),
        country_labels=sm.country_labels,
        product_labels=sm.product_labels,
        method_meta=meta,
    )


def inertia_shares(result) -> np.ndarray:
    """Share of total inertia per retained axis: ``lambda_i / (tr(C^c) - 1)``."""
    if result.trace <= 1.0 + 1e-12:
        raise DegenerateTableError(f"trace {result.trace} leaves no inertia")
    return np.asarray(result.eigenvalues) / (result.trace - 1.0)
