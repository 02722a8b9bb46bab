"""Trade and country-variable ingestion.

Turns raw ``year,country,product,value`` records into the binary
specialization matrix ``X`` (products in rows, countries in columns) and the
normalized views every ordination routine works from.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    ArgumentError,
    ConstantVariableError,
    DegenerateTableError,
    DomainError,
    OverParameterizedError,
    ParseError,
)

TRADE_HEADER = ["year", "country", "product", "value"]

# Relative band around the threshold treated as a tie (mapped to 0). Absorbs
# rounding so that rescaling all values cannot flip an exact tie.
RCA_TIE_RTOL = 1e-12


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


def _text(data):
    if isinstance(data, (bytes, bytearray)):
        return data.decode("utf-8-sig")
    if isinstance(data, str):
        return data
    raw = data.read()
    return raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else raw


@dataclass
class PruneReport:
    """Products and countries removed on the way to ``X``, with reasons."""

    products: dict = field(default_factory=dict)
    countries: dict = field(default_factory=dict)

    def drop_product(self, label, reason):
        self.products.setdefault(label, reason)

    def drop_country(self, label, reason):
        self.countries.setdefault(label, reason)

    def merged(self, other):
        out = PruneReport(dict(self.products), dict(self.countries))
        for k, v in other.products.items():
            out.drop_product(k, v)
        for k, v in other.countries.items():
            out.drop_country(k, v)
        return out

    def to_dict(self):
        return {
            "dropped_products": sorted(self.products),
            "dropped_countries": sorted(self.countries),
            "reason_per_item": {
                "products": {k: self.products[k] for k in sorted(self.products)},
                "countries": {k: self.countries[k] for k in sorted(self.countries)},
            },
        }


@dataclass(frozen=True)
class TradeTable:
    year: int
    records: tuple  # ((country, product, value), ...) sorted, unique pairs

    @property
    def countries(self):
        return sorted({c for c, _, _ in self.records})

    @property
    def products(self):
        return sorted({p for _, p, _ in self.records})

    def restrict_countries(self, keep):
        keep = set(keep)
        return TradeTable(self.year, tuple(r for r in self.records if r[0] in keep))


def parse_trade_csv(data) -> TradeTable:
    """Parse a trade CSV (bytes, text or file object).

    Duplicate ``(country, product)`` rows are summed. Raises
    :class:`ParseError` for structural problems and :class:`DomainError`
    for negative values, both naming the offending line.
    """
    reader = csv.reader(io.StringIO(_text(data)))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty table", line=1) from None
    if [h.strip() for h in header] != TRADE_HEADER:
        raise ParseError(f"expected header {','.join(TRADE_HEADER)!r}, got {','.join(header)!r}", line=1)

    totals = {}
    years = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        year, country, product, value = (c.strip() for c in row)
        try:
            years.add(int(year))
        except ValueError:
            raise ParseError(f"non-integer year {year!r}", line=lineno) from None
        try:
            v = float(value)
        except ValueError:
            raise ParseError(f"non-numeric value {value!r}", line=lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {value!r}", line=lineno)
        if v < 0:
            raise DomainError(f"negative value {value!r}", line=lineno)
        if not country or not product:
            raise ParseError("empty country or product code", line=lineno)
        key = (country, product)
        totals[key] = totals.get(key, 0.0) + v

    if not totals:
        raise ParseError("empty table")
    if len(years) > 1:
        raise ParseError(f"mixed years in one table: {sorted(years)}")
    if not any(v > 0 for v in totals.values()):
        raise DomainError("no positive trade value")
    records = tuple(sorted((c, p, v) for (c, p), v in totals.items()))
    return TradeTable(year=years.pop(), records=records)


@dataclass(frozen=True)
class RawVariables:
    """Per-country variables as read from file; ``None`` marks a missing cell."""

    names: tuple
    values: dict  # country -> tuple of float | None

    def complete_countries(self):
        return sorted(c for c, row in self.values.items() if all(v is not None for v in row))


def parse_variables_csv(data) -> RawVariables:
    reader = csv.reader(io.StringIO(_text(data)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty table", line=1) from None
    if len(header) < 2 or header[0] != "country":
        raise ParseError("expected header 'country,<name1>,...'", line=1)
    names = tuple(header[1:])
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable names", line=1)
    values = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        country = row[0].strip()
        if country in values:
            raise ParseError(f"duplicate country {country!r}", line=lineno)
        parsed = []
        for cell in row[1:]:
            cell = cell.strip()
            if cell == "":
                parsed.append(None)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r}", line=lineno) from None
            parsed.append(x if math.isfinite(x) else None)
        values[country] = tuple(parsed)
    if not values:
        raise ParseError("empty table")
    return RawVariables(names=names, values=values)


@dataclass(frozen=True)
class RcaMatrix:
    R: np.ndarray  # n x m, products in rows
    product_labels: tuple
    country_labels: tuple
    pruned: PruneReport = field(default_factory=PruneReport, compare=False)


def compute_rca(t: TradeTable) -> RcaMatrix:
    """Balassa revealed comparative advantage, products in rows."""
    countries = t.countries
    products = t.products
    ci = {c: j for j, c in enumerate(countries)}
    pi = {p: i for i, p in enumerate(products)}
    v = np.zeros((len(products), len(countries)))
    for c, p, val in t.records:
        v[pi[p], ci[c]] = val

    report = PruneReport()
    prod_tot = v.sum(axis=1)
    ctry_tot = v.sum(axis=0)
    keep_p = prod_tot > 0
    keep_c = ctry_tot > 0
    for i in np.flatnonzero(~keep_p):
        report.drop_product(products[i], "zero total exports")
    for j in np.flatnonzero(~keep_c):
        report.drop_country(countries[j], "zero total exports")
    if keep_p.sum() < 2 or keep_c.sum() < 2:
        raise DegenerateTableError(
            f"need at least 2 products and 2 countries with positive exports, "
            f"got {int(keep_p.sum())} x {int(keep_c.sum())}"
        )
    v = v[keep_p][:, keep_c]
    prod_tot = prod_tot[keep_p]
    ctry_tot = ctry_tot[keep_c]
    grand = v.sum()
    R = (v / prod_tot[:, None]) / (ctry_tot[None, :] / grand)
    return RcaMatrix(
        R=_frozen(R),
        product_labels=tuple(p for p, k in zip(products, keep_p) if k),
        country_labels=tuple(c for c, k in zip(countries, keep_c) if k),
        pruned=report,
    )


def _csr(binary):
    indptr = np.zeros(binary.shape[0] + 1, dtype=kernels.INDEX_DTYPE)
    rows, cols = np.nonzero(binary)
    np.cumsum(np.bincount(rows, minlength=binary.shape[0]), out=indptr[1:])
    return _frozen(indptr), _frozen(cols.astype(kernels.INDEX_DTYPE))


class SpecializationMatrix:
    """Binary RCA matrix ``X`` (n products x m countries) and derived views.

    Attributes
    ----------
    X : (n, m) uint8 array
    d : (m,) diversity, column sums of ``X``
    s : (n,) ubiquity, row sums of ``X``
    x_plus : int, total of ``X``
    Xu, Xd : rows of ``X`` over ubiquity, columns of ``X`` over diversity
    w : (m,) diagonal of the weight matrix ``W = D / x_plus``
    """

    def __init__(self, X, product_labels, country_labels, pruned=None):
        X = np.asarray(X)
        if X.ndim != 2:
            raise ArgumentError("X must be two-dimensional")
        if not np.isin(X, (0, 1)).all():
            raise ArgumentError("X must be binary")
        X = X.astype(np.uint8)
        n, m = X.shape
        if len(product_labels) != n or len(country_labels) != m:
            raise ArgumentError("label lengths do not match X")
        if n < 2 or m < 2:
            raise DegenerateTableError(f"specialization matrix is {n} x {m}, need at least 2 x 2")
        s = X.sum(axis=1).astype(np.int64)
        d = X.sum(axis=0).astype(np.int64)
        if (s == 0).any() or (d == 0).any():
            raise ArgumentError("X has all-zero rows or columns; binarize() prunes them")

        self.X = _frozen(X)
        self.product_labels = tuple(product_labels)
        self.country_labels = tuple(country_labels)
        self.s = _frozen(s)
        self.d = _frozen(d)
        self.x_plus = int(d.sum())
        Xf = X.astype(np.float64)
        self.Xu = _frozen(Xf / s[:, None])
        self.Xd = _frozen(Xf / d[None, :])
        self.w = _frozen(d / self.x_plus)
        self.pruned = pruned if pruned is not None else PruneReport()
        self._prod_ptr, self._prod_idx = _csr(X)
        self._ctry_ptr, self._ctry_idx = _csr(X.T)

    @classmethod
    def from_binary(cls, X, product_labels=None, country_labels=None):
        X = np.asarray(X)
        n, m = X.shape
        if product_labels is None:
            product_labels = [f"p{i + 1}" for i in range(n)]
        if country_labels is None:
            country_labels = [f"c{j + 1}" for j in range(m)]
        return cls(X, product_labels, country_labels)

    @property
    def shape(self):
        return self.X.shape

    @property
    def W(self):
        return np.diag(self.w)

    def product_average(self, country_scores):
        """``Xu @ v``: per product, mean score over its specialized countries."""
        return kernels.row_means(self._prod_ptr, self._prod_idx, country_scores)

    def country_average(self, product_scores):
        """``Xd' @ u``: per country, mean score over its specialization portfolio."""
        return kernels.row_means(self._ctry_ptr, self._ctry_idx, product_scores)

    def reflect(self, country_scores):
        """Return ``(C^c @ v, Xu @ v)`` in one pass."""
        v = np.asarray(country_scores, dtype=np.float64)
        if v.ndim == 1:
            return kernels.reciprocal_step(
                self._prod_ptr, self._prod_idx, self._ctry_ptr, self._ctry_idx, v
            )
        u = self.product_average(v)
        return self.country_average(u), u

    def components(self):
        """Connected components of the bipartite graph, largest first.

        Each component is a pair ``(product_indices, country_indices)``.
        """
        n, m = self.shape
        parent = list(range(n + m))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        rows, cols = np.nonzero(self.X)
        for q, p in zip(rows.tolist(), cols.tolist()):
            ra, rb = find(q), find(n + p)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups = {}
        for node in range(n + m):
            groups.setdefault(find(node), []).append(node)
        comps = []
        for nodes in groups.values():
            prods = np.array([a for a in nodes if a < n], dtype=np.int64)
            ctrys = np.array([a - n for a in nodes if a >= n], dtype=np.int64)
            comps.append((prods, ctrys))
        comps.sort(key=lambda c: (-(len(c[0]) + len(c[1])), c[1][0] if len(c[1]) else 0))
        return comps

    def is_connected(self):
        return len(self.components()) == 1

    def subset(self, product_idx, country_idx, reason="outside largest component"):
        product_idx = np.asarray(product_idx)
        country_idx = np.asarray(country_idx)
        report = PruneReport(dict(self.pruned.products), dict(self.pruned.countries))
        keep_p = set(product_idx.tolist())
        keep_c = set(country_idx.tolist())
        for i, lab in enumerate(self.product_labels):
            if i not in keep_p:
                report.drop_product(lab, reason)
        for j, lab in enumerate(self.country_labels):
            if j not in keep_c:
                report.drop_country(lab, reason)
        return SpecializationMatrix(
            self.X[np.ix_(product_idx, country_idx)],
            [self.product_labels[i] for i in product_idx],
            [self.country_labels[j] for j in country_idx],
            pruned=report,
        )

    def largest_component(self):
        prods, ctrys = self.components()[0]
        return self.subset(np.sort(prods), np.sort(ctrys))

    def __repr__(self):
        n, m = self.shape
        return f"SpecializationMatrix({n} products x {m} countries, x_plus={self.x_plus})"


def binarize(r: RcaMatrix, threshold: float = 1.0) -> SpecializationMatrix:
    """Binarize with a strict ``R > threshold`` and prune all-zero rows/columns."""
    if not threshold > 0:
        raise ArgumentError(f"threshold must be positive, got {threshold}")
    X = (r.R > threshold * (1.0 + RCA_TIE_RTOL)).astype(np.uint8)
    report = PruneReport(dict(r.pruned.products), dict(r.pruned.countries))
    keep_p = X.sum(axis=1) > 0
    for i in np.flatnonzero(~keep_p):
        report.drop_product(r.product_labels[i], "no country with RCA above threshold")
    X = X[keep_p]
    keep_c = X.sum(axis=0) > 0
    for j in np.flatnonzero(~keep_c):
        report.drop_country(r.country_labels[j], "no product with RCA above threshold")
    X = X[:, keep_c]
    if X.shape[0] < 2 or X.shape[1] < 2:
        raise DegenerateTableError(f"pruned specialization matrix is {X.shape[0]} x {X.shape[1]}")
    return SpecializationMatrix(
        X,
        [lab for lab, k in zip(r.product_labels, keep_p) if k],
        [lab for lab, k in zip(r.country_labels, keep_c) if k],
        pruned=report,
    )


def weighted_standardize(values, weights):
    """Center and scale columns to weighted mean 0 and weighted variance 1.

    ``weights`` must sum to 1. Returns ``(standardized, zero_variance_mask)``;
    zero-variance columns are left centered but unscaled.
    """
    values = np.asarray(values, dtype=np.float64)
    one_d = values.ndim == 1
    a = values[:, None] if one_d else values
    mean = weights @ a
    centered = a - mean
    var = weights @ centered**2
    scale = np.sqrt(var)
    flat = scale <= 1e-14 * np.maximum(1.0, np.abs(mean))
    out = centered / np.where(flat, 1.0, scale)
    return (out[:, 0] if one_d else out), flat


@dataclass(frozen=True)
class CountryVariableTable:
    names: tuple
    country_labels: tuple
    Y_raw: np.ndarray  # m x z
    Y: np.ndarray  # m x (z + 1); last column is the constant

    @property
    def z(self):
        return len(self.names)

    @property
    def standardized(self):
        """The ``z`` standardized variable columns (no constant)."""
        return self.Y[:, :-1]


def standardize_environment(raw, sm: SpecializationMatrix) -> CountryVariableTable:
    """Diversity-weighted standardization of country variables, plus a constant.

    ``raw`` is a :class:`RawVariables` or a mapping ``country -> sequence``
    together with names via ``RawVariables``.
    """
    missing = [c for c in sm.country_labels
               if c not in raw.values or any(v is None for v in raw.values[c])]
    if missing:
        raise ArgumentError(f"countries without complete variable data: {missing}")
    z = len(raw.names)
    m = len(sm.country_labels)
    if z < 1:
        raise ArgumentError("need at least one country variable")
    if z + 1 > m:
        raise OverParameterizedError(f"{z} variables plus a constant exceed {m} countries")
    Y_raw = np.array([raw.values[c] for c in sm.country_labels], dtype=np.float64)
    Ys, flat = weighted_standardize(Y_raw, sm.w)
    if flat.any():
        raise ConstantVariableError(raw.names[int(np.flatnonzero(flat)[0])])
    Y = np.hstack([Ys, np.ones((m, 1))])
    return CountryVariableTable(
        names=tuple(raw.names),
        country_labels=sm.country_labels,
        Y_raw=_frozen(Y_raw),
        Y=_frozen(Y),
    )


def prepare(trade: TradeTable, variables: RawVariables | None = None, threshold: float = 1.0):
    """Driver: intersect country sets, compute RCA, binarize and standardize.

    Countries lacking complete variable data are removed before the RCA
    step and listed in the prune report. Returns ``(sm, env)``; ``env`` is
    ``None`` without variables.
    """
    report = PruneReport()
    if variables is not None:
        complete = set(variables.complete_countries())
        for c in trade.countries:
            if c not in complete:
                report.drop_country(
                    c, "missing variable data" if c in variables.values else "not in variables file"
                )
        trade = trade.restrict_countries(complete)
        if not trade.records:
            raise DegenerateTableError("no country has both trade and variable data")
    rca = compute_rca(trade)
    rca = RcaMatrix(rca.R, rca.product_labels, rca.country_labels, report.merged(rca.pruned))
    sm = binarize(rca, threshold)
    env = standardize_environment(variables, sm) if variables is not None else None
    return sm, env
