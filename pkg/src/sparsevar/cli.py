"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error. Every
failure prints one line ``sparsevar-error code=<n> type=<Name> msg=<text>``
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from dataclasses import fields, replace

import numpy as np

from . import _plots
from .analysis import export_diagnostics, forecast, generate_irf
from .benchmarks import select_order_ic
from .core import CoefficientSet, ModelSpec, Scaling, SeriesMatrix, lag_regression, standardize
from .exceptions import DataError, NumericalError, SparseVARError, UsageError
from .refit import ifgls, relaxed_ls, restriction_from_fit, weighted_relaxed_ls
from .simulate import simulate_var
from .solvers import SolverOptions
from .tuning import estimate_fixed, rolling_cv

FORMAT_VERSION = 1
_SPEC_KEYS = {f.name for f in fields(ModelSpec)}
_EXTRA_KEYS = {"k", "standardize", "max_iter", "tol", "format_version"}
_INDEX_NAMES = {"", "date", "time", "index", "t", "period"}


# ---------------------------------------------------------------- file helpers

def _num(x) -> str:
    return repr(float(x))


def dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def read_csv(path: str):
    """``(values, labels)``; a leading time-index column is dropped."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {path}") from exc
    if len(rows) < 2:
        raise DataError(f"{path} needs a header row and at least one data row")
    header, body = rows[0], rows[1:]

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    drop = header[0].strip().lower() in _INDEX_NAMES or not all(numeric(r[0]) for r in body)
    if drop:
        header, body = header[1:], [r[1:] for r in body]
    try:
        values = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path} has a non-numeric entry: {exc}") from exc
    if values.ndim != 2 or values.shape[1] != len(header):
        raise DataError(f"{path} has ragged rows")
    return values, [h.strip() for h in header]


def write_csv(path: str, header, rows, index=None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(([""] if index is not None else []) + list(header))
    for n, row in enumerate(rows):
        w.writerow(([index[n]] if index is not None else []) + [_num(x) for x in row])
    text = buf.getvalue()
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------- config

def load_config(path):
    cfg = load_json(path) if path else {}
    unknown = set(cfg) - _SPEC_KEYS - _EXTRA_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "p" not in cfg:
        raise UsageError("config must set p")
    spec = ModelSpec(**{k: (tuple(v) if isinstance(v, list) else v)
                        for k, v in cfg.items() if k in _SPEC_KEYS})
    opts = SolverOptions(max_iter=int(cfg.get("max_iter", 10000)), tol=float(cfg.get("tol", 1e-4)))
    return cfg, spec, opts


def load_data(path: str, cfg: dict):
    values, labels = read_csv(path)
    k = int(cfg.get("k", values.shape[1]))
    if not 1 <= k <= values.shape[1]:
        raise UsageError(f"k={k} is incompatible with {values.shape[1]} data columns")
    raw = SeriesMatrix(values, k, values.shape[1] - k, labels)
    scaling = None
    data = raw
    if cfg.get("standardize", False):
        data, scaling = standardize(raw)
    return raw, data, scaling


def _spec_dict(spec: ModelSpec) -> dict:
    out = {}
    for f in fields(ModelSpec):
        v = getattr(spec, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def _coef_columns(coef: CoefficientSet, labels) -> list:
    endo, exo = labels[: coef.k], labels[coef.k :]
    cols = ["intercept"]
    cols += [f"L{l}.{endo[j]}" for l in range(1, coef.p + 1) for j in range(coef.k)]
    cols += [f"X{l}.{exo[j]}" for l in range(1, coef.s + 1) for j in range(coef.m)]
    return cols


def _residual_cov(coef: CoefficientSet, data: SeriesMatrix, delta: int) -> np.ndarray:
    reg = lag_regression(data.values, data.k, coef.p, coef.s, delta)
    resid = reg.y - coef.b @ reg.z
    return resid @ resid.T / reg.teff


def _model_record(coef, data, raw, scaling, spec, delta) -> dict:
    need = coef.lags_needed
    return {
        "format_version": FORMAT_VERSION,
        "k": coef.k, "m": coef.m, "p": coef.p, "s": coef.s,
        "struct": coef.struct, "lambda": coef.lam, "alpha": coef.alpha, "gamma": coef.gamma,
        "delta": delta, "labels": list(raw.labels),
        "b": coef.b.tolist(),
        "sigma_u": _residual_cov(coef, data, delta).tolist(),
        "scaling": None if scaling is None else {"mean": scaling.mean.tolist(), "sd": scaling.sd.tolist()},
        "history": raw.values[raw.T - need :].tolist() if need else [],
        "refit": coef.extra.get("refit", "none"),
        "spec": _spec_dict(spec),
    }


def _load_model(path: str):
    rec = load_json(path)
    if rec.get("format_version") != FORMAT_VERSION:
        raise UsageError(f"{path}: unsupported model format_version {rec.get('format_version')!r}")
    coef = CoefficientSet(np.array(rec["b"], dtype=float), rec["k"], rec["m"], rec["p"], rec["s"],
                          lam=rec["lambda"], alpha=rec["alpha"], gamma=rec["gamma"], struct=rec["struct"])
    sc = rec.get("scaling")
    scaling = None if sc is None else Scaling(np.array(sc["mean"]), np.array(sc["sd"]))
    return rec, coef, scaling


def _threads(args) -> int:
    env = os.environ.get("SPARSEVAR_THREADS")
    if env:
        return int(env)
    return args.threads or (os.cpu_count() or 1)


# ---------------------------------------------------------------- commands

def cmd_cv(args) -> int:
    cfg, spec, opts = load_config(args.config)
    raw, data, scaling = load_data(args.data, cfg)
    report = rolling_cv(data, spec, opts, threads=_threads(args))
    diag = export_diagnostics(report)
    os.makedirs(args.out, exist_ok=True)
    v = report.optimal_variant
    doc = {
        "format_version": FORMAT_VERSION,
        "optimal_lambda": report.optimal_lambda,
        "optimal_index": report.optimal_index,
        "optimal_alpha": report.optimal_alpha,
        "optimal_gamma": report.optimal_gamma,
        "in_sample_msfe": report.in_sample_msfe,
        "oos_msfe": report.oos_msfe,
        "benchmarks": dict(report.benchmark_msfe),
        "lambda_grid": report.lambda_grids[v].tolist(),
        "per_lambda_msfe": report.per_lambda_msfe.tolist(),
        "per_lambda_se": report.per_lambda_se.tolist(),
        "variants": [{"alpha": a, "gamma": g} for a, g in report.variants],
        "grid_position_flag": diag["grid_position_flag"],
        "lambda_curve": diag["lambda_curve"],
        "sparsity_grid": diag["sparsity_grid"],
        "spec": _spec_dict(report.spec),
        "standardized": scaling is not None,
    }
    dump_json(doc, os.path.join(args.out, "report.json"))
    coef = report.final_coefficients
    write_csv(os.path.join(args.out, "coefficients.csv"), _coef_columns(coef, raw.labels), coef.b,
              index=list(raw.labels[: coef.k]))
    delta = spec.h if report.spec.direct else 1
    dump_json(_model_record(coef, data, raw, scaling, report.spec, delta),
              os.path.join(args.out, "model.json"))
    with open(os.path.join(args.out, "sparsity.svg"), "w", encoding="utf-8") as fh:
        fh.write(_plots.sparsity_svg(diag["sparsity_grid"]))
    with open(os.path.join(args.out, "lambda_curve.svg"), "w", encoding="utf-8") as fh:
        fh.write(_plots.lambda_curve_svg(diag["lambda_curve"], report.optimal_index))
    return 0


def _parse_lambdas(text: str) -> tuple:
    try:
        lams = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"bad --lambda value {text!r}") from exc
    if not lams or any(x <= 0 for x in lams):
        raise UsageError("--lambda needs positive values")
    return lams


def cmd_fit(args) -> int:
    cfg, spec, opts = load_config(args.config)
    raw, data, scaling = load_data(args.data, cfg)
    spec = replace(spec, own_lambdas=True, lambdas=_parse_lambdas(args.lambdas)).resolve(data)
    fits = estimate_fixed(data, spec, opts)
    os.makedirs(args.out, exist_ok=True)
    delta = spec.h if spec.direct else 1
    for n, coef in enumerate(fits):
        write_csv(os.path.join(args.out, f"coefficients_{n}.csv"), _coef_columns(coef, raw.labels),
                  coef.b, index=list(raw.labels[: coef.k]))
        dump_json(_model_record(coef, data, raw, scaling, spec, delta),
                  os.path.join(args.out, f"model_{n}.json"))
    return 0


def cmd_predict(args) -> int:
    rec, coef, scaling = _load_model(args.model)
    if rec["delta"] > 1 and args.n_ahead != 1:
        raise UsageError("a direct multi-step model produces its own horizon only; use --n-ahead 1")
    history = np.array(rec["history"], dtype=float).reshape(-1, coef.k + coef.m)
    newx = None
    if args.newx:
        newx, _ = read_csv(args.newx)
    if scaling is not None:
        history = scaling.apply(history)
        if newx is not None:
            newx = (newx - scaling.mean[coef.k :]) / scaling.sd[coef.k :]
    out = forecast(coef, history, args.n_ahead, newx)
    if scaling is not None:
        out = scaling.invert(out, range(coef.k))
    write_csv(args.out, rec["labels"][: coef.k], out)
    return 0


def cmd_simulate(args) -> int:
    spec = load_json(args.spec)
    if "phi" not in spec or "sigma_u" not in spec:
        raise UsageError("simulation spec needs 'phi' and 'sigma_u'")
    data = simulate_var(np.array(spec["phi"], dtype=float), np.array(spec["sigma_u"], dtype=float),
                        args.t, burn_in=args.burn_in, seed=args.seed, nu=spec.get("nu"))
    labels = spec.get("labels") or [f"y{i + 1}" for i in range(data.k)]
    write_csv(args.out, labels, data.values)
    return 0


def cmd_irf(args) -> int:
    rec, coef, scaling = _load_model(args.model)
    labels = rec["labels"]
    try:
        shock = int(args.shock)
    except ValueError:
        if args.shock not in labels[: coef.k]:
            raise UsageError(f"unknown series {args.shock!r}")
        shock = labels.index(args.shock)
    size = args.size
    if scaling is not None:
        size = size / scaling.sd[shock]
    resp = generate_irf(coef, np.array(rec["sigma_u"]), shock, size, args.periods, args.unit_variance)
    if scaling is not None:
        resp = resp * scaling.sd[: coef.k]
    write_csv(args.out, labels[: coef.k], resp)
    return 0


def cmd_benchmark(args) -> int:
    cfg = load_json(args.config) if args.config else {}
    values, labels = read_csv(args.data)
    k = args.k or int(cfg.get("k", values.shape[1]))
    data = SeriesMatrix(values, k, values.shape[1] - k, labels)
    p, s, fit, table = select_order_ic(data, args.pmax, args.smax, args.criterion.upper(), args.h)
    doc = {"format_version": FORMAT_VERSION, "criterion": args.criterion.upper(), "p": p, "s": s,
           "ic_table": table.tolist(), "b_hat": fit.b_hat.tolist(), "sigma_u": fit.sigma_u_hat.tolist()}
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def cmd_refit(args) -> int:
    rec, coef, scaling = _load_model(args.model)
    if coef.struct != "Basic":
        raise UsageError("refitting is offered for Basic-structure models only")
    if coef.m and coef.s:
        raise UsageError("refitting covers VAR models only")
    values, _ = read_csv(args.data)
    data = SeriesMatrix(values, coef.k, values.shape[1] - coef.k)
    if scaling is not None:
        data = SeriesMatrix(scaling.apply(data.values), data.k, data.m)
    reg = lag_regression(data.values[:, : coef.k], coef.k, coef.p, 0, rec["delta"])
    rmap = restriction_from_fit(coef, args.eps1)
    sigma = None
    if args.method == "rls":
        out = relaxed_ls(reg, rmap)
    elif args.method == "wls":
        out = weighted_relaxed_ls(reg, rmap, reg.y.var(axis=1))
    else:
        out, sigma = ifgls(reg, rmap, eps1=args.eps1)
    out = out.with_b(out.b, struct="Basic", lam=coef.lam, extra={"refit": args.method})
    new = dict(rec)
    new["b"] = out.b.tolist()
    new["refit"] = args.method
    new["sigma_u"] = (sigma if sigma is not None else _residual_cov(out, data, rec["delta"])).tolist()
    dump_json(new, args.out)
    return 0


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sparsevar", description="Structured-penalty VAR/VARX toolkit")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cv", help="rolling cross-validation and out-of-sample evaluation")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("fit", help="full-sample fits at given penalties")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--lambda", dest="lambdas", required=True, help="comma-separated penalties")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="forecast from a stored model")
    p.add_argument("--model", required=True)
    p.add_argument("--n-ahead", type=int, default=1)
    p.add_argument("--newx", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="simulate a Gaussian VAR")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("irf", help="orthogonalized impulse responses")
    p.add_argument("--model", required=True)
    p.add_argument("--shock", required=True, help="series index or label")
    p.add_argument("--size", type=float, default=1.0)
    p.add_argument("--periods", type=int, default=10)
    p.add_argument("--unit-variance", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_irf)

    p = sub.add_parser("benchmark", help="AIC/BIC least-squares lag selection")
    p.add_argument("--data", required=True)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--smax", type=int, default=0)
    p.add_argument("--criterion", choices=["aic", "bic", "AIC", "BIC"], default="bic")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("refit", help="refit the support of a stored Basic model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["rls", "wls", "ifgls"], required=True)
    p.add_argument("--eps1", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refit)
    return ap


def _fail(code: int, exc: BaseException) -> int:
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"sparsevar-error code={code} type={type(exc).__name__} msg={msg}\n")
    return code


def _format_warning(message, category, filename, lineno, line=None):
    return f"sparsevar-warning type={category.__name__} msg={' '.join(str(message).split())}\n"


def main(argv=None) -> int:
    warnings.formatwarning = _format_warning
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail(2, exc)
    except (DataError, OSError) as exc:
        return _fail(3, exc)
    except (NumericalError, SparseVARError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(4, exc)
    except (TypeError, ValueError, KeyError) as exc:
        return _fail(2, exc)


if __name__ == "__main__":
    sys.exit(main())
