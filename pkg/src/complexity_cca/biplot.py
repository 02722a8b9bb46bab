"""Biplots: Type-1 scaled scores, variable rays, group centroids, SVG output."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import ArgumentError, NumericalError
from .ingest import CountryVariableTable, SpecializationMatrix, weighted_standardize

log = logging.getLogger(__name__)

LALL_CATEGORIES = {
    "PPm": "Primary products, minerals",
    "PPo": "Primary products, other (agriculture, forestry, fisheries)",
    "RBa": "Resource-based manufacturing, agriculture, forestry, fisheries",
    "RBo": "Resource-based manufacturing, other",
    "LTt": "Low-tech manufacturing, textiles etc.",
    "LTo": "Low-tech manufacturing, other",
    "MTa": "Medium-tech manufacturing, automotive",
    "MTp": "Medium-tech manufacturing, process-based (e.g., chemicals)",
    "MTe": "Medium-tech manufacturing, engineering-based (e.g., machinery)",
    "HTe": "High-tech manufacturing, electrical and electronics",
    "HTo": "High-tech manufacturing, other (e.g., pharma, aerospace)",
}

UNMAPPED = "unmapped"
PRODUCT_LABEL_LIMIT = 50
PALETTE = (
    "#1f3a93", "#d35400", "#27ae60", "#8e44ad", "#c0392b",
    "#16a085", "#7f8c8d", "#f39c12", "#2c3e50", "#e84393",
)


@dataclass
class ScaledScores:
    U_hat: np.ndarray  # (n, k)
    V_hat: np.ndarray  # (m, k)
    eigenvalues: np.ndarray
    inertia_shares: np.ndarray
    country_labels: tuple
    product_labels: tuple
    kind: str = "CCA"


def scale_type1(result) -> ScaledScores:
    """Divide product and country scores per axis by the square root of the eigenvalue.

    Both sets are scaled by the same factor, so each country stays the
    RCA-weighted average of its products.
    """
    lam = np.asarray(result.eigenvalues, dtype=float)
    if (lam <= 0).any():
        bad = [int(j) + 1 for j in np.flatnonzero(lam <= 0)]
        raise NumericalError(f"non-positive eigenvalue on axes {bad}; Type-1 scaling undefined")
    root = np.sqrt(lam)
    return ScaledScores(
        U_hat=result.U / root,
        V_hat=result.V / root,
        eigenvalues=lam,
        inertia_shares=np.asarray(result.inertia_shares, dtype=float),
        country_labels=tuple(result.country_labels),
        product_labels=tuple(result.product_labels),
        kind=result.kind,
    )


@dataclass
class VariableRays:
    A: np.ndarray  # (z, k) intraclass correlations
    names: tuple


def intraclass_correlations(env: CountryVariableTable, result, sm: SpecializationMatrix) -> VariableRays:
    """Diversity-weighted correlations between each variable and each country axis.

    Works for CA and CCA results alike; the country scores ``V`` are
    W-standardized first, so any per-axis rescaling of ``V`` gives the same
    rays.
    """
    if tuple(env.country_labels) != tuple(result.country_labels):
        raise ArgumentError("variables and ordination are not aligned on countries")
    V = getattr(result, "V_hat", None)
    V = result.V if V is None else V
    Vt, flat = weighted_standardize(V, sm.w)
    if flat.any():
        raise NumericalError("country axis with zero weighted variance")
    A = env.standardized.T @ (sm.w[:, None] * Vt)
    return VariableRays(A=A, names=tuple(env.names))


@dataclass
class GroupCentroid:
    label: str
    coords: np.ndarray
    total_ubiquity: float
    mean_ubiquity: float
    count: int


@dataclass
class CentroidTable:
    rows: list
    unmapped: list = field(default_factory=list)
    omitted: list = field(default_factory=list)

    @property
    def labels(self):
        return [r.label for r in self.rows]

    def coords(self):
        return np.array([r.coords for r in self.rows])


def group_centroids(scores: ScaledScores, sm: SpecializationMatrix, mapping: dict,
                    categories=None) -> CentroidTable:
    """Ubiquity-weighted centroids of product groups.

    Products absent from ``mapping`` go to an ``"unmapped"`` group (and are
    listed). Categories in ``categories`` with no surviving product are
    omitted with a warning. Row order follows ``categories`` when given,
    else first appearance in product order.
    """
    if tuple(scores.product_labels) != tuple(sm.product_labels):
        raise ArgumentError("scores and specialization matrix are not aligned on products")
    members = {}
    unmapped = []
    for i, lab in enumerate(sm.product_labels):
        g = mapping.get(lab)
        if g is None:
            unmapped.append(lab)
            g = UNMAPPED
        members.setdefault(g, []).append(i)
    if unmapped:
        log.warning("%d products have no group and are pooled as %r", len(unmapped), UNMAPPED)

    order = list(categories) if categories is not None else []
    order += [g for g in members if g not in order]
    s = sm.s.astype(float)
    rows = []
    omitted = []
    for g in order:
        idx = members.get(g)
        if not idx:
            if g != UNMAPPED:
                omitted.append(g)
            continue
        weights = s[idx]
        total = float(weights.sum())
        # normalize first so a singleton group reproduces its product bit-for-bit
        coords = (weights / total) @ scores.U_hat[idx]
        rows.append(GroupCentroid(g, coords, total, total / len(idx), len(idx)))
    if omitted:
        log.warning("groups without products omitted: %s", omitted)
    return CentroidTable(rows=rows, unmapped=unmapped, omitted=omitted)


@dataclass
class Point:
    label: str
    kind: str  # "country", "product" or "centroid"
    x: float
    y: float
    size: float
    group: str = ""
    labeled: bool = True
    clipped: bool = False


@dataclass
class Ray:
    name: str
    x: float
    y: float
    color: str


@dataclass
class BiplotOptions:
    caps: dict = field(default_factory=dict)  # 1-based axis -> upper limit
    back_extension: bool = False
    width: int = 800
    height: int = 800
    ray_scale: float | None = None  # None: fit rays to the point cloud


@dataclass
class BiplotModel:
    axis_pair: tuple  # 1-based
    axis_labels: tuple
    inertia: tuple
    countries: list
    products: list
    rays: list
    ray_scale: float
    options: BiplotOptions
    clipped: list

    def points(self):
        return self.countries + self.products


def _axis_name(kind, j, share):
    return f"{kind}-{j} ({100 * share:.1f}%)"


def assemble_biplot(scores: ScaledScores, sm: SpecializationMatrix, rays: VariableRays = None,
                    centroids: CentroidTable = None, axis_pair=(1, 2),
                    options: BiplotOptions = None) -> BiplotModel:
    """Collect points, rays and labels for one pair of axes.

    Countries are sized by diversity, products by ubiquity and centroids by
    mean ubiquity. Points beyond an axis cap stay in the model, flagged
    ``clipped``.
    """
    options = options or BiplotOptions()
    k = scores.V_hat.shape[1]
    a, b = axis_pair
    for ax in (a, b):
        if not 1 <= ax <= k:
            raise ArgumentError(f"axis {ax} out of range 1..{k}")
    if a == b:
        raise ArgumentError("axis pair needs two distinct axes")
    for ax in options.caps:
        if ax not in (a, b):
            log.info("cap on axis %s ignored: not in axis pair %s", ax, axis_pair)
    ia, ib = a - 1, b - 1

    countries = [
        Point(lab, "country", float(scores.V_hat[p, ia]), float(scores.V_hat[p, ib]), float(sm.d[p]))
        for p, lab in enumerate(sm.country_labels)
    ]
    if centroids is not None:
        products = [
            Point(r.label, "centroid", float(r.coords[ia]), float(r.coords[ib]), r.mean_ubiquity, r.label)
            for r in centroids.rows
        ]
    else:
        show = len(sm.product_labels) <= PRODUCT_LABEL_LIMIT
        products = [
            Point(lab, "product", float(scores.U_hat[q, ia]), float(scores.U_hat[q, ib]),
                  float(sm.s[q]), labeled=show)
            for q, lab in enumerate(sm.product_labels)
        ]

    clipped = []
    cap_a = options.caps.get(a)
    cap_b = options.caps.get(b)
    for pt in countries + products:
        if (cap_a is not None and pt.x > cap_a) or (cap_b is not None and pt.y > cap_b):
            pt.clipped = True
            clipped.append({"kind": pt.kind, "label": pt.label, "x": pt.x, "y": pt.y})

    ray_list = []
    if rays is not None:
        for i, name in enumerate(rays.names):
            ray_list.append(Ray(name, float(rays.A[i, ia]), float(rays.A[i, ib]), PALETTE[i % len(PALETTE)]))

    scale = options.ray_scale
    if scale is None:
        scale = 1.0
        pts = countries + products
        longest = max((math.hypot(r.x, r.y) for r in ray_list), default=0.0)
        if pts and longest > 0:
            extent = max(max(abs(_capped(p.x, cap_a)), abs(_capped(p.y, cap_b))) for p in pts)
            if extent > 0:
                scale = 0.9 * extent / longest

    return BiplotModel(
        axis_pair=(a, b),
        axis_labels=(_axis_name(scores.kind, a, scores.inertia_shares[ia]),
                     _axis_name(scores.kind, b, scores.inertia_shares[ib])),
        inertia=(float(scores.inertia_shares[ia]), float(scores.inertia_shares[ib])),
        countries=countries,
        products=products,
        rays=ray_list,
        ray_scale=float(scale),
        options=options,
        clipped=clipped,
    )


def _capped(v, cap):
    return min(v, cap) if cap is not None else v


def _fmt(v):
    return f"{v:.2f}"


def _radius(size, max_size, rmin, rmax):
    if max_size <= 0:
        return rmin
    return rmin + (rmax - rmin) * math.sqrt(size / max_size)


def render_svg(model: BiplotModel) -> bytes:
    """Render the model as SVG 1.1; identical models give identical bytes."""
    opt = model.options
    W, H, pad = opt.width, opt.height, 70
    a, b = model.axis_pair
    cap_a = opt.caps.get(a)
    cap_b = opt.caps.get(b)

    xs = [0.0] + [_capped(p.x, cap_a) for p in model.points()]
    ys = [0.0] + [_capped(p.y, cap_b) for p in model.points()]
    for r in model.rays:
        xs += [r.x * model.ray_scale, -r.x * model.ray_scale if opt.back_extension else 0.0]
        ys += [r.y * model.ray_scale, -r.y * model.ray_scale if opt.back_extension else 0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if cap_a is not None:
        x1 = min(x1, cap_a)
    if cap_b is not None:
        y1 = min(y1, cap_b)
    span_x = (x1 - x0) or 1.0
    span_y = (y1 - y0) or 1.0
    x0, x1 = x0 - 0.05 * span_x, x1 + 0.05 * span_x
    y0, y1 = y0 - 0.05 * span_y, y1 + 0.05 * span_y

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (W - 2 * pad)

    def py(y):
        return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
        f'<path class="axis" d="M{_fmt(pad)} {_fmt(py(0))} H{_fmt(W - pad)}" stroke="#999999" stroke-width="1"/>',
        f'<path class="axis" d="M{_fmt(px(0))} {_fmt(pad)} V{_fmt(H - pad)}" stroke="#999999" stroke-width="1"/>',
        f'<text class="axis-label" x="{_fmt(W / 2)}" y="{_fmt(H - pad / 3)}" text-anchor="middle" '
        f'font-size="14">{escape(model.axis_labels[0])}</text>',
        f'<text class="axis-label" x="{_fmt(pad / 3)}" y="{_fmt(H / 2)}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 {_fmt(pad / 3)} {_fmt(H / 2)})">{escape(model.axis_labels[1])}</text>',
    ]

    ox, oy = px(0), py(0)
    for r in model.rays:
        ex, ey = px(r.x * model.ray_scale), py(r.y * model.ray_scale)
        if opt.back_extension:
            bx, by = px(-r.x * model.ray_scale), py(-r.y * model.ray_scale)
            out.append(f'<line class="ray-back" x1="{_fmt(ox)}" y1="{_fmt(oy)}" x2="{_fmt(bx)}" y2="{_fmt(by)}" '
                       f'stroke="{r.color}" stroke-width="1.5" stroke-dasharray="5,4"/>')
        out.append(f'<line class="ray" x1="{_fmt(ox)}" y1="{_fmt(oy)}" x2="{_fmt(ex)}" y2="{_fmt(ey)}" '
                   f'stroke="{r.color}" stroke-width="2.5"/>')
        out.append(f'<text class="ray-label" x="{_fmt(ex)}" y="{_fmt(ey - 4)}" font-size="12" '
                   f'fill="{r.color}">{escape(r.name)}</text>')

    for group, fill, rmin, rmax in ((model.products, "#e67e22", 2.0, 14.0), (model.countries, "#2980b9", 2.5, 12.0)):
        max_size = max((p.size for p in group), default=0.0)
        for p in group:
            cx, cy = px(_capped(p.x, cap_a)), py(_capped(p.y, cap_b))
            cls = p.kind + (" clipped" if p.clipped else "")
            rad = _radius(p.size, max_size, rmin, rmax)
            stroke = ' stroke="#000000" stroke-dasharray="2,2"' if p.clipped else ' stroke="#ffffff"'
            out.append(f'<circle class={quoteattr(cls)} cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(rad)}" '
                       f'fill="{fill}" fill-opacity="0.6"{stroke}/>')
            if p.labeled:
                out.append(f'<text class="{p.kind}-label" x="{_fmt(cx + rad + 2)}" y="{_fmt(cy + 4)}" '
                           f'font-size="10">{escape(p.label)}</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")
