"""Command line driver.

Commands: ``ca``, ``cca``, ``biplot``, ``validate``, ``synth``.

Exit codes: 0 success, 1 unexpected error, 2 bad arguments, 3 input
file/parse error, 4 degenerate data (domain, too small, constant or too
many variables), 5 collinear variables, 6 disconnected matrix, 7 no
convergence, 8 numerical failure, 9 bad product-group mapping,
10 validation residuals above tolerance.

Settings come from defaults, then a JSON ``--config`` file, then flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, biplot, ca, cca, ingest, synth
from .errors import ArgumentError, ComplexityError, InputError, MappingError, ValidationFailed
from .io import sha256_file, write_csv, write_json, write_scores

log = logging.getLogger("complexity_cca")

METHODS = ("eigen", "iterative", "both")


@dataclass
class RunConfig:
    trade: str | None = None
    vars: str | None = None
    lall: str | None = None
    method: str = "eigen"
    axes: int | None = None
    tol: float = ca.DEFAULT_TOL
    max_iter: int = ca.DEFAULT_MAX_ITER
    sign: str = "auto"
    threshold: float = 1.0
    axis_pair: tuple = (1, 2)
    cap_axis: dict = field(default_factory=dict)
    out: str = "out"
    seed: int | None = None
    largest_component: bool = False
    reflections: int | None = None
    back_extension: bool = False
    # synth
    products: int = 200
    countries: int = 50
    noise: float = 0.0
    variables: int = 1
    var_noise: float = 0.0

    def check(self):
        if not self.tol > 0:
            raise ArgumentError("tol must be positive")
        if self.axes is not None and self.axes < 1:
            raise ArgumentError("axes must be >= 1")
        if self.max_iter < 1:
            raise ArgumentError("max-iter must be >= 1")
        if self.method not in METHODS:
            raise ArgumentError(f"method must be one of {METHODS}")
        if not self.threshold > 0:
            raise ArgumentError("threshold must be positive")


def _parse_pair(text):
    if isinstance(text, (list, tuple)):
        vals = list(text)
    else:
        vals = str(text).split(",")
    try:
        a, b = (int(v) for v in vals)
    except ValueError:
        raise ArgumentError(f"axis pair must look like A,B, got {text!r}") from None
    return a, b


def _parse_caps(items):
    if isinstance(items, dict):
        return {int(k): float(v) for k, v in items.items()}
    caps = {}
    for item in items or []:
        try:
            ax, lim = item.split("=")
            caps[int(ax)] = float(lim)
        except ValueError:
            raise ArgumentError(f"cap must look like AXIS=LIMIT, got {item!r}") from None
    return caps


PATH_KEYS = ("trade", "vars", "lall", "out")


def load_config(path):
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from None
    base = Path(path).parent
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key not in known:
            raise ArgumentError(f"unknown config key {key!r}")
        if key in PATH_KEYS and value is not None and not Path(value).is_absolute():
            value = str(base / value)
        out[key] = value
    return out


def build_config(args) -> RunConfig:
    settings = {}
    if args.config:
        settings.update(load_config(args.config))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    if "axis_pair" in settings:
        settings["axis_pair"] = _parse_pair(settings["axis_pair"])
    if "cap_axis" in settings:
        settings["cap_axis"] = _parse_caps(settings["cap_axis"])
    cfg = RunConfig(**settings)
    cfg.check()
    return cfg


def _read(path, what):
    if path is None:
        raise ArgumentError(f"--{what} is required")
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc}") from None


def _load(cfg, need_vars=False):
    trade = ingest.parse_trade_csv(_read(cfg.trade, "trade"))
    variables = None
    if cfg.vars is not None or need_vars:
        variables = ingest.parse_variables_csv(_read(cfg.vars, "vars"))
    sm, env = ingest.prepare(trade, variables, cfg.threshold)
    if cfg.largest_component and not sm.is_connected():
        sm = sm.largest_component()
        if env is not None:
            env = ingest.standardize_environment(variables, sm)
    digests = {"trade": sha256_file(cfg.trade)}
    if cfg.vars is not None:
        digests["vars"] = sha256_file(cfg.vars)
    return sm, env, variables, digests


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report(command, cfg, digests, sm, result, validation, iterations, **extra):
    rep = {
        "command": command,
        "version": __version__,
        "inputs": digests,
        "config": {
            "method": cfg.method, "axes": result.num_axes, "tol": cfg.tol,
            "max_iter": cfg.max_iter, "threshold": cfg.threshold, "sign": cfg.sign,
        },
        "shape": {"products": sm.shape[0], "countries": sm.shape[1], "x_plus": sm.x_plus},
        "pruned": sm.pruned.to_dict(),
        "eigenvalues": list(result.eigenvalues),
        "inertia_shares": list(result.inertia_shares),
        "trace": result.trace,
        "residuals": validation.to_dict(),
        "iterations": iterations,
        "method_meta": result.method_meta,
    }
    rep.update(extra)
    return rep


def _ca_sign(cfg):
    return "diversity" if cfg.sign in ("auto", "diversity") else cfg.sign


def _cca_sign(cfg):
    return "variable" if cfg.sign in ("auto", "variable") else cfg.sign


def _run_ca(cfg, sm, num_axes):
    result = ca.ca_eigen(sm, num_axes, sign=_ca_sign(cfg))
    extra = {}
    iterations = {"eigen": None}
    if cfg.method in ("iterative", "both"):
        ra = ca.reciprocal_averaging(sm, cfg.tol, cfg.max_iter, seed=cfg.seed)
        iterations = {"reciprocal_averaging": ra.iterations}
        extra["equivalence"] = {
            "correlations": [abs(ca.weighted_corr(ra.country_axis, result.eci, sm.w))],
            "eigenvalue_gaps": [abs(ra.eigenvalue - float(result.eigenvalues[0]))],
        }
        if cfg.method == "iterative":
            if num_axes != 1:
                raise ArgumentError("reciprocal averaging yields the leading axis only; use --axes 1")
            lam = np.array([ra.eigenvalue])
            U = ra.product_axis[:, None]
            result = ca.CaResult(
                eigenvalues=lam, country_axes=ra.country_axis[:, None], product_axes=U,
                country_scores=sm.country_average(U), inertia_shares=lam / (result.trace - 1.0),
                trace=result.trace, all_eigenvalues=result.all_eigenvalues,
                country_labels=sm.country_labels, product_labels=sm.product_labels,
                method_meta={"solver": "reciprocal-averaging", "iterations": ra.iterations,
                             "residual": ra.residual},
            )
    return result, iterations, extra


def _run_cca(cfg, sm, env, num_axes):
    extra = {}
    if cfg.method == "eigen":
        result = cca.cca_eigen(sm, env, num_axes, sign=_cca_sign(cfg))
        iterations = {"eigen": None}
    else:
        result = cca.cca_iterative(sm, env, num_axes, cfg.tol, cfg.max_iter, seed=cfg.seed,
                                   sign=_cca_sign(cfg))
        iterations = {"iterative": result.method_meta["iterations"]}
        if cfg.method == "both":
            eig = cca.cca_eigen(sm, env, num_axes, sign=_cca_sign(cfg))
            extra["equivalence"] = cca.equivalence_report(eig, result, sm)
            result = eig
    return result, iterations, extra


def cmd_ca(cfg: RunConfig) -> int:
    sm, env, _, digests = _load(cfg)
    out = _out_dir(cfg)
    k = cfg.axes or min(2, sm.shape[1] - 1)
    result, iterations, extra = _run_ca(cfg, sm, k)
    validation = cca.validate_ordination(result, sm)
    write_scores(out / "eci.csv", "country", sm.country_labels, result.country_axes, "axis")
    write_scores(out / "pci.csv", "product", sm.product_labels, result.product_axes, "axis")
    if env is not None:
        rays = biplot.intraclass_correlations(env, result, sm)
        extra["intraclass_correlations"] = {n: list(rays.A[i]) for i, n in enumerate(rays.names)}
    if cfg.reflections is not None:
        trace = ca.method_of_reflections(sm, cfg.reflections)
        header = ["kind", "label"] + [f"iter{i}" for i in range(trace.iterations + 1)]
        rows = [["country", lab] + [float(it[p]) for it in trace.countries]
                for p, lab in enumerate(sm.country_labels)]
        rows += [["product", lab] + [float(it[q]) for it in trace.products]
                 for q, lab in enumerate(sm.product_labels)]
        write_csv(out / "reflections.csv", header, rows)
    extra["all_nontrivial_eigenvalues"] = list(result.all_eigenvalues)
    write_json(out / "report.json", _report("ca", cfg, digests, sm, result, validation, iterations, **extra))
    return 0


def cmd_cca(cfg: RunConfig) -> int:
    sm, env, _, digests = _load(cfg, need_vars=True)
    out = _out_dir(cfg)
    result, iterations, extra = _run_cca(cfg, sm, env, cfg.axes)
    validation = cca.validate_ordination(result, sm, env)
    write_scores(out / "cca_e_std.csv", "country", sm.country_labels, result.E_std, "cca")
    write_scores(out / "cca_e.csv", "country", sm.country_labels, result.E, "cca")
    write_scores(out / "cca_u.csv", "product", sm.product_labels, result.U, "cca")
    write_scores(out / "cca_v.csv", "country", sm.country_labels, result.V, "cca")
    names = list(env.names) + ["const"]
    write_csv(out / "cca_b.csv", ["variable", "axis", "coefficient"],
              [[names[i], j + 1, float(result.B[i, j])]
               for i in range(result.B.shape[0]) for j in range(result.B.shape[1])])
    rays = biplot.intraclass_correlations(env, result, sm)
    extra["intraclass_correlations"] = {n: list(rays.A[i]) for i, n in enumerate(rays.names)}
    if "equivalence" in extra:
        write_json(out / "equivalence.json", extra["equivalence"])
    write_json(out / "report.json", _report("cca", cfg, digests, sm, result, validation, iterations, **extra))
    return 0


def read_lall(path):
    import csv
    import io as _io

    text = _read(path, "lall").decode("utf-8-sig")
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["product", "category"]:
        raise InputError("Lall mapping must have header 'product,category'")
    mapping = {}
    offenders = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise InputError(f"line {lineno}: expected 2 fields")
        prod, cat = row[0].strip(), row[1].strip()
        if cat not in biplot.LALL_CATEGORIES:
            offenders.append(cat)
        mapping[prod] = cat
    if offenders:
        bad = sorted(set(offenders))
        raise MappingError(f"unknown Lall categories: {bad}", offenders=bad)
    return mapping


def cmd_biplot(cfg: RunConfig) -> int:
    sm, env, _, digests = _load(cfg)
    out = _out_dir(cfg)
    need = max(cfg.axis_pair)
    if env is not None:
        k = cfg.axes or env.z
        if k < need:
            raise ArgumentError(f"axis pair {cfg.axis_pair} needs at least {need} axes, have {k}")
        result, iterations, extra = _run_cca(cfg, sm, env, k)
    else:
        k = max(cfg.axes or need, need)
        result, iterations, extra = _run_ca(cfg, sm, k)
    validation = cca.validate_ordination(result, sm, env)
    scores = biplot.scale_type1(result)
    rays = biplot.intraclass_correlations(env, result, sm) if env is not None else None
    centroids = None
    if cfg.lall is not None:
        mapping = read_lall(cfg.lall)
        centroids = biplot.group_centroids(scores, sm, mapping, categories=list(biplot.LALL_CATEGORIES))
        extra["centroids"] = {
            "unmapped_products": centroids.unmapped,
            "omitted_groups": centroids.omitted,
            "groups": [{"label": r.label, "coords": list(r.coords), "total_ubiquity": r.total_ubiquity,
                        "mean_ubiquity": r.mean_ubiquity, "count": r.count} for r in centroids.rows],
        }
    options = biplot.BiplotOptions(caps=dict(cfg.cap_axis), back_extension=cfg.back_extension)
    model = biplot.assemble_biplot(scores, sm, rays, centroids, cfg.axis_pair, options)
    (out / "biplot.svg").write_bytes(biplot.render_svg(model))
    write_csv(out / "biplot.csv", ["entity", "kind", "axis_a", "axis_b", "size", "group"],
              [[p.label, p.kind, p.x, p.y, float(p.size), p.group] for p in model.points()]
              + [[r.name, "ray", r.x, r.y, "", ""] for r in model.rays])
    extra["biplot"] = {"axis_pair": list(model.axis_pair), "axis_labels": list(model.axis_labels),
                       "clipped": model.clipped, "ray_scale": model.ray_scale}
    write_json(out / "report.json", _report("biplot", cfg, digests, sm, result, validation, iterations, **extra))
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    sm, env, _, digests = _load(cfg)
    out = _out_dir(cfg)
    res_ca = ca.ca_eigen(sm, cfg.axes or min(2, sm.shape[1] - 1), sign=_ca_sign(cfg))
    report = {"version": __version__, "inputs": digests, "pruned": sm.pruned.to_dict(),
              "ca": cca.validate_ordination(res_ca, sm).to_dict()}
    trivial = {"C_c_row_sum_residual": float(np.max(np.abs(ca.cooccurrence_country(sm).sum(axis=1) - 1)))}
    passed = report["ca"]["passed"]
    if env is not None:
        res_cca, _, extra = _run_cca(cfg, sm, env, cfg.axes if cfg.axes and cfg.axes <= env.z else None)
        report["cca"] = cca.validate_ordination(res_cca, sm, env).to_dict()
        passed = passed and report["cca"]["passed"]
        phi = cca.phi_matrix(sm, env)
        trivial["Phi_row_sum_residual"] = float(np.max(np.abs(phi.sum(axis=1) - 1)))
        if "equivalence" in extra:
            report["equivalence"] = extra["equivalence"]
    report["trivial_spectrum"] = trivial
    report["passed"] = bool(passed and max(trivial.values()) <= 1e-10)
    write_json(out / "validation.json", report)
    if not report["passed"]:
        raise ValidationFailed("validation residuals exceed tolerance; see validation.json")
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ArgumentError("synth needs --seed")
    data = synth.planted_gradient(cfg.seed, cfg.products, cfg.countries, cfg.noise,
                                  cfg.variables, cfg.var_noise)
    out = _out_dir(cfg)
    write_csv(out / "trade.csv", ingest.TRADE_HEADER, list(data.trade_rows()))
    write_csv(out / "vars.csv", ["country"] + list(data.variable_names),
              [[c] + [float(v) for v in data.variables[j]] for j, c in enumerate(data.country_labels)])
    write_csv(out / "truth.csv", ["entity", "kind", "value"],
              [[c, "country_ability", float(a)] for c, a in zip(data.country_labels, data.ability)]
              + [[p, "product_difficulty", float(b)] for p, b in zip(data.product_labels, data.difficulty)])
    rows, cols = np.nonzero(data.X)
    write_csv(out / "planted.csv", ["product", "country"],
              sorted((data.product_labels[q], data.country_labels[p]) for q, p in zip(rows, cols)))
    write_json(out / "config.json", {"trade": "trade.csv", "vars": "vars.csv", "threshold": data.threshold})
    write_json(out / "synth.json", {
        "version": __version__, "seed": cfg.seed, "noise": cfg.noise, "var_noise": cfg.var_noise,
        "requested": {"products": cfg.products, "countries": cfg.countries, "variables": cfg.variables},
        "shape": {"products": int(data.X.shape[0]), "countries": int(data.X.shape[1])},
        "threshold": data.threshold,
    })
    return 0


COMMANDS = {"ca": cmd_ca, "cca": cmd_cca, "biplot": cmd_biplot, "validate": cmd_validate, "synth": cmd_synth}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--trade", help="trade CSV (year,country,product,value)")
    common.add_argument("--vars", help="country variables CSV (country,<name>,...)")
    common.add_argument("--lall", help="product group mapping CSV (product,category)")
    common.add_argument("--axes", type=int, help="number of axes to extract")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--tol", type=float, help=f"iterative tolerance (default {ca.DEFAULT_TOL:g})")
    common.add_argument("--max-iter", dest="max_iter", type=int,
                        help=f"iteration cap (default {ca.DEFAULT_MAX_ITER})")
    common.add_argument("--sign", choices=("auto", "diversity", "variable", "max-entry"))
    common.add_argument("--threshold", type=float, help="RCA binarization threshold (default 1)")
    common.add_argument("--axis-pair", dest="axis_pair", help="biplot axes, e.g. 1,2")
    common.add_argument("--cap-axis", dest="cap_axis", action="append", metavar="AXIS=LIMIT",
                        help="upper plot limit for an axis; repeatable")
    common.add_argument("--back-extension", dest="back_extension", action="store_const", const=True,
                        help="draw dashed backward extensions of variable rays")
    common.add_argument("--largest-component", dest="largest_component", action="store_const", const=True,
                        help="analyze the largest connected component instead of failing")
    common.add_argument("--reflections", type=int, metavar="K", help="(ca) also write K reflection steps")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--seed", type=int, help="random seed (synth; iterative start)")
    common.add_argument("--products", type=int, help="(synth) number of products")
    common.add_argument("--countries", type=int, help="(synth) number of countries")
    common.add_argument("--noise", type=float, help="(synth) cell flip probability")
    common.add_argument("--variables", type=int, help="(synth) number of country variables")
    common.add_argument("--var-noise", dest="var_noise", type=float, help="(synth) noise on variables")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="complexity-cca", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ca", parents=[common], help="correspondence analysis: ECI/PCI")
    sub.add_parser("cca", parents=[common], help="canonical correspondence analysis")
    sub.add_parser("biplot", parents=[common], help="Type-1 biplot as SVG and CSV")
    sub.add_parser("validate", parents=[common], help="orthogonality and spectrum diagnostics")
    sub.add_parser("synth", parents=[common], help="planted-gradient synthetic fixtures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ComplexityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
