"""Synthetic fixtures: random connected matrices and planted-gradient trade data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateTableError
from .ingest import SpecializationMatrix

MAX_RETRIES = 50
VALUE_SCALE = 1e6
# Threshold sits this fraction below the smallest planted RCA.
THRESHOLD_MARGIN = 0.9


def random_specialization(rng, n, m, density=0.4, max_tries=1000) -> SpecializationMatrix:
    """Random binary ``n x m`` matrix with no empty rows/columns and one component."""
    for _ in range(max_tries):
        X = (rng.random((n, m)) < density).astype(np.uint8)
        if (X.sum(axis=0) == 0).any() or (X.sum(axis=1) == 0).any():
            continue
        sm = SpecializationMatrix.from_binary(X)
        if sm.is_connected():
            return sm
    raise DegenerateTableError(f"no connected {n}x{m} matrix at density {density}")


def planted_matrix(ability, difficulty, noise, rng):
    """``x_qp = 1`` iff ability_p >= difficulty_q, each cell flipped with probability ``noise``."""
    X = (ability[None, :] >= difficulty[:, None]).astype(np.uint8)
    if noise > 0:
        flip = rng.random(X.shape) < noise
        X = np.where(flip, 1 - X, X).astype(np.uint8)
    return X


def _drop_empty(X):
    rows = np.flatnonzero(X.sum(axis=1) > 0)
    cols = np.flatnonzero(X.sum(axis=0) > 0)
    return rows, cols


def realizing_threshold(X, margin=THRESHOLD_MARGIN):
    """Binarization threshold at which trade values ``X * scale`` reproduce ``X``.

    With values proportional to ``X`` the RCA of a one is
    ``x_plus / (s_q d_p)`` and of a zero is 0, so any threshold below the
    smallest planted RCA recovers ``X`` exactly. The threshold is capped at
    1 and rounded down to 3 significant digits.
    """
    X = np.asarray(X, dtype=float)
    s = X.sum(axis=1)
    d = X.sum(axis=0)
    rows, cols = np.nonzero(X)
    rho = float(np.min(X.sum() / (s[rows] * d[cols])))
    t = min(1.0, rho * margin)
    if t < 1.0:
        exp = np.floor(np.log10(t)) - 2
        t = float(f"{np.floor(t / 10**exp) * 10**exp:.3g}")
    return t


@dataclass
class PlantedData:
    X: np.ndarray  # n x m planted binary matrix (empty rows/columns dropped)
    values: np.ndarray  # n x m trade values, X * VALUE_SCALE
    threshold: float  # binarization threshold that reproduces X
    ability: np.ndarray  # (m,)
    difficulty: np.ndarray  # (n,)
    variables: np.ndarray  # (m, z)
    variable_names: tuple
    country_labels: tuple
    product_labels: tuple
    year: int = 2018

    def trade_rows(self):
        rows, cols = np.nonzero(self.X)
        for q, p in sorted(zip(rows.tolist(), cols.tolist()), key=lambda t: (t[1], t[0])):
            yield self.year, self.country_labels[p], self.product_labels[q], float(self.values[q, p])


def planted_gradient(seed, n=200, m=50, noise=0.0, z=1, var_noise=0.0,
                     max_retries=MAX_RETRIES) -> PlantedData:
    """Planted-gradient trade data.

    Country ability and product difficulty are uniform on [0, 1]; a
    country specializes in every product not harder than its ability, then
    cells flip with probability ``noise``. Variable 1 is ability itself plus
    ``var_noise`` Gaussian noise; further variables are random linear
    functions of ability plus noise. Products and countries left with no
    ones are dropped.

    Trade values are ``X`` scaled by ``VALUE_SCALE``. Since every product
    has RCA >= 1 in some country, a nested matrix (which always contains a
    product specialized everywhere) cannot be recovered at threshold 1;
    ``threshold`` records the cutoff that recovers it exactly.
    """
    if not 0 <= noise <= 1:
        raise ArgumentError("noise must be in [0, 1]")
    if n < 2 or m < 2 or z < 1:
        raise ArgumentError("need n, m >= 2 and z >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        ability = rng.random(m)
        difficulty = rng.random(n)
        X = planted_matrix(ability, difficulty, noise, rng)
        rows, cols = _drop_empty(X)
        if len(rows) < 2 or len(cols) < z + 2:
            continue
        Xt = X[np.ix_(rows, cols)]
        if not SpecializationMatrix.from_binary(Xt).is_connected():
            continue
        a = ability[cols]
        variables = np.empty((len(cols), z))
        variables[:, 0] = a + var_noise * rng.standard_normal(len(cols))
        for k in range(1, z):
            slope = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            variables[:, k] = slope * a + max(var_noise, 0.1) * rng.standard_normal(len(cols))
        width_c = len(str(m))
        width_p = len(str(n))
        return PlantedData(
            X=Xt,
            values=Xt * VALUE_SCALE,
            threshold=realizing_threshold(Xt),
            ability=a,
            difficulty=difficulty[rows],
            variables=variables,
            variable_names=tuple(["ability"] + [f"var{k + 1}" for k in range(1, z)]),
            country_labels=tuple(f"C{j + 1:0{width_c}d}" for j in cols),
            product_labels=tuple(f"P{i + 1:0{width_p}d}" for i in rows),
        )
    raise DegenerateTableError(
        f"could not generate a connected, realizable {n}x{m} planted matrix in {max_retries} tries"
    )
