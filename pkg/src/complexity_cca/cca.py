"""Canonical correspondence analysis constrained by country variables.

Two independent routes produce the same ordination:

* :func:`cca_eigen` diagonalizes ``Phi = Y T C^c`` (``T`` the weighted
  least-squares operator onto the country variables);
* :func:`cca_iterative` runs Ter Braak's reciprocal averaging with a
  weighted regression step, one axis at a time with W-orthogonal deflation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ca import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    _repeated,
    check_connected,
    cooccurrence_country,
    cooccurrence_trace,
    initial_scores,
    orient_axes,
    weighted_corr,
)
from .errors import (
    ArgumentError,
    CollinearityError,
    ConvergenceError,
    DegenerateTableError,
    DisconnectedError,
    NumericalError,
)
from .ingest import CountryVariableTable, SpecializationMatrix, weighted_standardize

log = logging.getLogger(__name__)

RCOND_MIN = 1e-12
IMAG_TOL = 1e-10
# Canonical eigenvalues at or below this are null axes (rank deficiency).
NULL_EIGENVALUE = 1e-12


@dataclass(frozen=True)
class EnvironmentOperator:
    """Weighted regression operator ``T = (Y'WY)^-1 Y'W``."""

    T: np.ndarray  # (z + 1) x m
    Y: np.ndarray  # m x (z + 1)
    rcond: float

    @property
    def H(self):
        """Hat operator ``Y T``; a W-orthogonal projector onto span(Y)."""
        return self.Y @ self.T

    def coefficients(self, scores):
        return self.T @ scores

    def fitted(self, scores):
        return self.Y @ (self.T @ scores)


def regression_operator(env: CountryVariableTable, sm: SpecializationMatrix) -> EnvironmentOperator:
    Y = np.asarray(env.Y)
    m, k = Y.shape
    if m != sm.shape[1]:
        raise ArgumentError("variables table is not aligned with the specialization matrix")
    if k > m:
        raise ArgumentError(f"{k} regression columns exceed {m} countries")
    YtW = Y.T * sm.w
    G = YtW @ Y
    sv = np.linalg.svd(G, compute_uv=False)
    rcond = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if rcond <= RCOND_MIN:
        raise CollinearityError(
            f"country variables are collinear under the diversity weights "
            f"(smallest singular value of Y'WY = {sv[-1]:.3e}, rcond = {rcond:.3e})",
            smallest_singular_value=float(sv[-1]),
        )
    T = np.linalg.solve(G, YtW)
    return EnvironmentOperator(T=T, Y=Y, rcond=rcond)


@dataclass
class CcaResult:
    eigenvalues: np.ndarray  # lambda, (k,)
    E: np.ndarray  # (m, k) predicted country scores, H @ V
    E_std: np.ndarray  # (m, k) W-standardized eigenvectors of Phi
    U: np.ndarray  # (n, k) product scores, Xu @ E_std
    V: np.ndarray  # (m, k) country scores, Xd' @ U
    B: np.ndarray  # (z + 1, k) regression coefficients, T @ V
    inertia_shares: np.ndarray
    trace: float
    country_labels: tuple
    product_labels: tuple
    variable_names: tuple
    method_meta: dict = field(default_factory=dict)

    kind = "CCA"

    @property
    def num_axes(self):
        return len(self.eigenvalues)

    @property
    def country_axes(self):
        return self.E_std

    @property
    def product_axes(self):
        return self.U


def _variable_reference(env, sm):
    y1 = env.Y[:, 0]

    def score(col):
        return float(sm.w @ (y1 * col))

    return score


def _assemble(sm, env, op, E_std, eigenvalues, meta, sign):
    E_std, flat = weighted_standardize(E_std, sm.w)
    if flat.any():
        raise NumericalError("degenerate canonical axis with zero weighted variance")
    U = sm.product_average(E_std)
    V = sm.country_average(U)
    if sign == "variable":
        signs = orient_axes(V, _variable_reference(env, sm))
    elif sign == "max-entry":
        signs = orient_axes(E_std, lambda col: 0.0)
    elif sign == "none":
        signs = np.ones(E_std.shape[1])
    else:
        raise ArgumentError(f"unknown sign convention {sign!r}")
    E_std, U, V = E_std * signs, U * signs, V * signs
    B = op.coefficients(V)
    E = op.Y @ B
    trace = cooccurrence_trace(sm)
    if trace <= 1.0 + 1e-12:
        raise DegenerateTableError(f"trace of C^c is {trace}, no inertia to decompose")
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    return CcaResult(
        eigenvalues=eigenvalues,
        E=E,
        E_std=E_std,
        U=U,
        V=V,
        B=B,
        inertia_shares=eigenvalues / (trace - 1.0),
        trace=trace,
        country_labels=sm.country_labels,
        product_labels=sm.product_labels,
        variable_names=tuple(env.names),
        method_meta=meta,
    )


def _check_axes(num_axes, env):
    if num_axes is None:
        return env.z
    if not 1 <= num_axes <= env.z:
        raise ArgumentError(f"num_axes must be in [1, {env.z}], got {num_axes}")
    return num_axes


def phi_matrix(sm: SpecializationMatrix, env: CountryVariableTable, op=None) -> np.ndarray:
    """Dense ``Phi = Y T C^c``."""
    op = op or regression_operator(env, sm)
    return op.Y @ (op.T @ cooccurrence_country(sm))


def _reduced_spectrum(sm, op):
    """Eigenpairs of Phi restricted to span(Y), via a symmetric (z+1)-square problem.

    In coordinates scaled by ``W^1/2`` the hat operator is an orthogonal
    projector ``Q Q'`` and ``C^c`` becomes the symmetric ``M``; eigenvectors
    of ``Phi`` with nonzero eigenvalue are ``W^-1/2 Q a`` for eigenvectors
    ``a`` of ``Q' M Q``.
    """
    sw = np.sqrt(sm.w)
    Q, _ = np.linalg.qr(sw[:, None] * op.Y)
    Bm = sm.X / np.sqrt(sm.s.astype(float))[:, None] / np.sqrt(sm.d.astype(float))[None, :]
    BQ = Bm @ Q
    K = BQ.T @ BQ
    mu, a = np.linalg.eigh(K)
    order = np.argsort(-mu, kind="stable")
    mu, a = mu[order], a[:, order]
    vecs = (Q @ a) / sw[:, None]
    overlap = np.abs(sw @ (Q @ a))
    return mu, vecs, overlap


def _dense_spectrum(sm, op):
    Phi = op.Y @ (op.T @ cooccurrence_country(sm))
    mu, vecs = np.linalg.eig(Phi)
    order = np.argsort(-mu.real, kind="stable")
    mu, vecs = mu[order], vecs[:, order]
    const = np.ones(sm.shape[1]) / np.sqrt(sm.shape[1])
    unit = vecs / np.linalg.norm(vecs, axis=0)
    overlap = np.abs(const @ unit)
    return mu, vecs, overlap


def cca_eigen(sm: SpecializationMatrix, env: CountryVariableTable, num_axes=None,
              solver: str = "reduced", sign: str = "variable") -> CcaResult:
    """CCA through the eigenvalues of ``Phi = Y T C^c``.

    ``solver="reduced"`` (default) uses the symmetric reduction onto
    span(Y); ``solver="dense"`` runs a general eigen-decomposition of the
    full ``Phi`` and truncates imaginary parts below ``1e-10``.
    """
    num_axes = _check_axes(num_axes, env)
    check_connected(sm)
    op = regression_operator(env, sm)
    if solver == "reduced":
        mu, vecs, overlap = _reduced_spectrum(sm, op)
    elif solver == "dense":
        mu, vecs, overlap = _dense_spectrum(sm, op)
    else:
        raise ArgumentError(f"unknown solver {solver!r}")

    t = int(np.argmax(overlap))
    if abs(mu[t] - 1.0) > 1e-8 or overlap[t] < 1 - 1e-6:
        raise NumericalError(f"trivial eigenpair not found (closest eigenvalue {mu[t]!r})")
    keep = np.array([i for i in range(len(mu)) if i != t])
    mu_nt, vecs_nt = mu[keep], vecs[:, keep]
    if mu_nt.real[0] >= 1.0 - 1e-10:
        raise DisconnectedError("eigenvalue 1 of Phi is repeated")
    lead = mu_nt[:num_axes]
    if np.iscomplexobj(lead):
        worst = float(np.max(np.abs(lead.imag)))
        if worst > IMAG_TOL:
            raise NumericalError(f"complex eigenvalues among leading axes (max |imag| = {worst:.3e})")
        vecs_lead = vecs_nt[:, :num_axes]
        vimag = np.abs(vecs_lead.imag).max(axis=0)
        # rotate complex-phase eigenvectors onto the real line before truncating
        phase = np.exp(-1j * np.angle(vecs_lead[np.argmax(np.abs(vecs_lead), axis=0), range(num_axes)]))
        vecs_lead = (vecs_lead * phase).real
        lead = lead.real
        meta_imag = float(max(worst, float(vimag.max()) if vimag.size else 0.0))
    else:
        vecs_lead = vecs_nt[:, :num_axes]
        meta_imag = 0.0
    meta = {
        "solver": f"eigen-{solver}",
        "trivial_eigenvalue": float(np.real(mu[t])),
        "max_imag_truncated": meta_imag,
        "rcond": op.rcond,
    }
    null = [j + 1 for j in range(num_axes) if lead[j] <= NULL_EIGENVALUE]
    if null:
        meta["null_axes"] = null
        log.warning("null canonical axes %s (eigenvalue ~ 0); their directions are arbitrary", null)
    rep = _repeated(np.real(mu_nt[:num_axes + 1]))
    if rep:
        meta["repeated_eigenvalues"] = rep
        log.warning("repeated canonical eigenvalues at axes %s", rep)
    return _assemble(sm, env, op, vecs_lead, lead, meta, sign)


def cca_iterative(sm: SpecializationMatrix, env: CountryVariableTable, num_axes=None,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, seed=None,
                  sign: str = "variable") -> CcaResult:
    """Ter Braak's iterative CCA.

    Per axis: average country scores into product scores, average back,
    regress on the variables with diversity weights, adopt the fitted
    values, W-orthogonalize against earlier axes and standardize, until the
    largest score change drops below ``tol``.
    """
    if not tol > 0:
        raise ArgumentError("tol must be positive")
    num_axes = _check_axes(num_axes, env)
    check_connected(sm)
    op = regression_operator(env, sm)
    w = sm.w
    m = sm.shape[1]
    rng_seed = None if seed is None else np.random.SeedSequence(seed)
    found = []
    lambdas = []
    iters = []
    residuals = []

    def deflate(x):
        for e in found:
            x = x - (w @ (e * x)) * e
        return x - w @ x

    for j in range(num_axes):
        axis_seed = None if rng_seed is None else rng_seed.spawn(1)[0]
        v = deflate(initial_scores(m, w, axis_seed))
        norm = np.sqrt(w @ v**2)
        if norm <= 1e-12:
            raise NumericalError("initial scores lie in the span of earlier axes")
        v = v / norm
        delta = np.inf
        scale = np.nan
        for it in range(1, max_iter + 1):
            country, _ = sm.reflect(v)
            fitted = deflate(op.fitted(country))
            scale = float(np.sqrt(w @ fitted**2))
            if scale <= NULL_EIGENVALUE:
                raise NumericalError(
                    f"axis {j + 1} is null (eigenvalue {scale:.1e}); the table supports only "
                    f"{j} canonical axes, request fewer"
                )
            fitted /= scale
            delta = float(np.max(np.abs(fitted - v)))
            v = fitted
            if delta < tol:
                break
        else:
            raise ConvergenceError(
                f"axis {j + 1} did not converge in {max_iter} iterations (max change {delta:.3e})",
                residual=delta, iterations=max_iter,
            )
        found.append(v)
        lambdas.append(scale)
        iters.append(it)
        residuals.append(delta)

    meta = {"solver": "iterative", "iterations": iters, "residuals": residuals, "rcond": op.rcond}
    return _assemble(sm, env, op, np.column_stack(found), lambdas, meta, sign)


@dataclass
class OrthogonalityReport:
    axes: list  # one dict of residuals per axis
    tol: float
    passed: bool

    def to_dict(self):
        return {"tol": self.tol, "passed": self.passed, "axes": self.axes}


def validate_ordination(result, sm: SpecializationMatrix, env: CountryVariableTable = None,
                        tol: float = 1e-8) -> OrthogonalityReport:
    """Check the orthogonality and standardization identities per axis.

    Absolute residuals are reported alongside relative ones; pass/fail uses
    the relative values (and the absolute standardization error).
    """
    if tuple(result.country_labels) != tuple(sm.country_labels) or \
            tuple(result.product_labels) != tuple(sm.product_labels):
        raise ArgumentError("result labels are not aligned with the specialization matrix")
    d = sm.d.astype(float)
    s = sm.s.astype(float)
    op = regression_operator(env, sm) if (env is not None and result.kind == "CCA") else None
    axes = []
    ok = True
    for j in range(result.num_axes):
        V = result.V[:, j]
        U = result.U[:, j]
        Es = result.E_std[:, j]
        row = {
            "axis": j + 1,
            "dV": float(abs(d @ V)),
            "sU": float(abs(s @ U)),
            "dE_std": float(abs(d @ Es)),
            "E_std_WE_std_minus_1": float(abs(sm.w @ Es**2 - 1.0)),
        }
        # V and U are averages of E_std, so its norm sets their round-off
        # scale; this keeps the ratio meaningful on null (lambda ~ 0) axes.
        scale = max(np.linalg.norm(Es), np.linalg.norm(V), np.linalg.norm(U), 1e-300)
        row["dV_rel"] = row["dV"] / (np.linalg.norm(d) * scale)
        row["sU_rel"] = row["sU"] / (np.linalg.norm(s) * scale)
        row["dE_std_rel"] = row["dE_std"] / (np.linalg.norm(d) * scale)
        checks = [row["dV_rel"], row["sU_rel"], row["dE_std_rel"], row["E_std_WE_std_minus_1"]]
        if op is not None:
            E = result.E[:, j]
            res = float(np.linalg.norm(op.fitted(E) - E))
            row["span_residual"] = res
            row["span_residual_rel"] = res / max(np.linalg.norm(E), 1e-300)
            checks.append(row["span_residual_rel"])
        row["passed"] = bool(max(checks) <= tol)
        ok = ok and row["passed"]
        axes.append(row)
    return OrthogonalityReport(axes=axes, tol=tol, passed=ok)


def equivalence_report(a, b, sm: SpecializationMatrix) -> dict:
    """Per-axis |weighted correlation| and eigenvalue gap between two results."""
    k = min(a.num_axes, b.num_axes)
    corr = [abs(weighted_corr(a.E_std[:, j], b.E_std[:, j], sm.w)) for j in range(k)]
    gaps = [float(abs(a.eigenvalues[j] - b.eigenvalues[j])) for j in range(k)]
    return {"correlations": corr, "eigenvalue_gaps": gaps}
