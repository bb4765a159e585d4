"""Command-line front end.

Commands: estimate, region, test, trace-scan, simulate, ingest.  Flags can
also be supplied through a flat ``key=value`` config file (--config); flags
given on the command line take precedence.  Outputs are JSON documents with
a schema_version field and CSV files with a header row; every command is a
pure function of its inputs, so repeated runs are byte-identical.

Exit codes: 0 on success, 1 on a hard error, 2 when some per-k or per-pair
computations failed but others succeeded (failures are reported in-band).
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from .covariance import estimate_v_star_laws
from .equality_tests import (
    test_equal_expectiles_laws,
    test_equal_expectiles_qb,
    test_equal_quantiles,
)
from .errors import DomainError, TailjointError
from .inference import (
    marginal_interval_laws,
    marginal_interval_qb,
    region_boundary_points,
    region_extreme_laws,
    region_extreme_qb,
    region_intermediate_laws,
    region_intermediate_qb,
)
from .marginal import (
    estimate_margins,
    extrapolate_expectile_laws,
    extrapolate_expectile_qb,
)
from .sample import (
    MultivariateSample,
    ingest_csv,
    emit_csv,
    tau_from_k,
    to_negative_weekly_log_returns,
)
from .simulation import (
    SimulationModel,
    run_mc_coverage,
    run_mc_interval_coverage,
    run_mc_mse,
    run_mc_power,
)
from .taildep import extremal_coefficient

SCHEMA_VERSION = "1"

_INT_KEYS = {"k", "k_min", "k_max", "n", "reps", "seed", "workers"}
_FLOAT_KEYS = {"tau", "tau_prime", "alpha"}
_BOOL_KEYS = {"naive", "intermediate", "date_column", "no_returns"}


def _parse_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DomainError(f"{path}: line {lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(key: str, text: str):
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    if key in _BOOL_KEYS:
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise DomainError(f"config key {key}: expected a boolean, got {text!r}")
    return text


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None) is None:
        return args
    for key, text in _parse_config_file(args.config).items():
        if not hasattr(args, key):
            raise DomainError(f"config key {key!r} is not a recognized flag")
        if getattr(args, key) is None:
            setattr(args, key, _coerce(key, text))
    return args


def _resolve_tau(args, n: int) -> float:
    if (args.k is None) == (args.tau is None):
        raise DomainError("exactly one of --k and --tau must be given")
    if args.k is not None:
        if not 2 <= args.k <= n - 1:
            raise DomainError(f"--k must lie in [2, {n - 1}] for n={n}")
        return tau_from_k(n, args.k)
    if not 0.0 < args.tau < 1.0:
        raise DomainError(f"--tau must lie in (0,1), got {args.tau}")
    return args.tau


def _resolve_tau_prime(args, n: int) -> float:
    return args.tau_prime if args.tau_prime is not None else 1.0 - 1.0 / n


def _methods(args) -> tuple[str, ...]:
    method = args.method if args.method is not None else "both"
    if method == "both":
        return ("laws", "qb")
    if method in ("laws", "qb"):
        return (method,)
    raise DomainError(f"--method must be laws, qb or both, got {method!r}")


def _alpha(args) -> float:
    alpha = args.alpha if args.alpha is not None else 0.05
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"--alpha must lie in (0,1), got {alpha}")
    return alpha


def _load_sample(args) -> MultivariateSample:
    if args.input is None:
        raise DomainError("--input is required")
    return ingest_csv(args.input, has_date_column=bool(args.date_column))


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _emit_json(doc, out_dir, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(_json_text(doc))
    else:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(_json_text(doc), encoding="utf-8")


def _emit_csv_rows(header, rows, out_dir, name: str) -> None:
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(_csv_cell(x) for x in row))
    text = "\n".join(lines) + "\n"
    if out_dir is None:
        sys.stdout.write(text)
    else:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(text, encoding="utf-8")


def _csv_cell(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def cmd_estimate(args) -> int:
    sample = _load_sample(args)
    tau = _resolve_tau(args, sample.n)
    tau_prime = _resolve_tau_prime(args, sample.n)
    alpha = _alpha(args)
    naive = bool(args.naive)
    margins = estimate_margins(sample, tau)
    rows = []
    for j, label in enumerate(sample.labels):
        try:
            col = sample.column(j)
            entry = {
                "label": label,
                "gamma_hat": margins.gamma_hat[j],
                "q_hat": margins.q_hat[j],
                "xi_laws": margins.xi_laws[j],
                "xi_qb": margins.xi_qb[j],
                "xi_star_laws": extrapolate_expectile_laws(col, tau, tau_prime),
                "xi_star_qb": extrapolate_expectile_qb(col, tau, tau_prime),
            }
            laws_iv = marginal_interval_laws(sample, tau, tau_prime, j, alpha, naive=naive)
            qb_iv = marginal_interval_qb(sample, tau, tau_prime, j, alpha, naive=naive)
            entry["interval_laws"] = {"lower": laws_iv.lower, "upper": laws_iv.upper}
            entry["interval_qb"] = {"lower": qb_iv.lower, "upper": qb_iv.upper}
        except TailjointError as exc:
            raise DomainError(f"margin {label!r}: {exc}") from exc
        rows.append(entry)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "estimate",
        "n": sample.n,
        "d": sample.d,
        "k": args.k if args.k is not None else None,
        "tau": tau,
        "tau_prime": tau_prime,
        "alpha": alpha,
        "naive": naive,
        "margins": rows,
    }
    _emit_json(doc, args.out, "estimate.json")
    if args.out is not None:
        _print_estimate_table(rows)
    return 0


def _print_estimate_table(rows) -> None:
    header = f"{'margin':<12}{'gamma':>9}{'q':>12}{'xi~':>12}{'xi^':>12}{'xi~*':>12}{'xi^*':>12}"
    print(header)
    for r in rows:
        print(
            f"{r['label']:<12}{r['gamma_hat']:>9.4f}{r['q_hat']:>12.5g}"
            f"{r['xi_laws']:>12.5g}{r['xi_qb']:>12.5g}"
            f"{r['xi_star_laws']:>12.5g}{r['xi_star_qb']:>12.5g}"
        )


def _region_groups(d: int):
    if d in (2, 3):
        return [tuple(range(d))]
    return [pair for pair in itertools.combinations(range(d), 2)]


def cmd_region(args) -> int:
    sample = _load_sample(args)
    if sample.d < 2:
        raise DomainError("joint regions require at least two margins")
    tau = _resolve_tau(args, sample.n)
    alpha = _alpha(args)
    naive = bool(args.naive)
    intermediate = bool(args.intermediate)
    tau_prime = None if intermediate else _resolve_tau_prime(args, sample.n)
    builders = {
        ("laws", True): lambda s: region_intermediate_laws(s, tau, alpha, naive=naive),
        ("qb", True): lambda s: region_intermediate_qb(s, tau, alpha, naive=naive),
        ("laws", False): lambda s: region_extreme_laws(s, tau, tau_prime, alpha, naive=naive),
        ("qb", False): lambda s: region_extreme_qb(s, tau, tau_prime, alpha, naive=naive),
    }
    docs = []
    failures = 0
    for group in _region_groups(sample.d):
        sub = sample.select(group)
        tag = "-".join(sub.labels)
        for method in _methods(args):
            try:
                region = builders[(method, intermediate)](sub)
            except TailjointError as exc:
                docs.append(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "command": "region",
                        "margins": list(sub.labels),
                        "method": method,
                        "status": "failed",
                        "error": str(exc),
                    }
                )
                failures += 1
                continue
            doc = {
                "schema_version": SCHEMA_VERSION,
                "command": "region",
                "margins": list(sub.labels),
                "method": method,
                "status": "ok",
            }
            doc.update(region.to_json_dict())
            docs.append(doc)
            if args.out is not None:
                boundary = region_boundary_points(region)
                _emit_csv_rows(
                    sub.labels,
                    boundary.tolist(),
                    args.out,
                    f"boundary_{tag}_{method}.csv",
                )
    if failures == len(docs):
        raise DomainError("all requested regions failed: " + docs[0]["error"])
    _emit_json(docs, args.out, "regions.json")
    return 2 if failures else 0


def cmd_test(args) -> int:
    sample = _load_sample(args)
    if sample.d < 2:
        raise DomainError("equality tests require at least two margins")
    tau = _resolve_tau(args, sample.n)
    tau_prime = _resolve_tau_prime(args, sample.n)
    alpha = _alpha(args)
    testers = {
        "laws": test_equal_expectiles_laws,
        "qb": test_equal_expectiles_qb,
        "quantile": test_equal_quantiles,
    }
    groups = [tuple(range(sample.d))]
    if sample.d > 2:
        groups += list(itertools.combinations(range(sample.d), 2))
    rows = []
    failures = 0
    for group in groups:
        sub = sample.select(group)
        for kind, tester in testers.items():
            row = {"margins": list(sub.labels), "kind": kind}
            try:
                result = tester(sub, tau, tau_prime, alpha)
                row["status"] = "ok"
                row.update(result.to_json_dict())
            except TailjointError as exc:
                row["status"] = "failed"
                row["error"] = str(exc)
                failures += 1
            rows.append(row)
        if len(group) == 2:
            try:
                omega = extremal_coefficient(sub, tau, 0, 1)
                rows.append(
                    {
                        "margins": list(sub.labels),
                        "kind": "extremal_coefficient",
                        "status": "ok",
                        "statistic": omega,
                    }
                )
            except TailjointError as exc:
                rows.append(
                    {
                        "margins": list(sub.labels),
                        "kind": "extremal_coefficient",
                        "status": "failed",
                        "error": str(exc),
                    }
                )
                failures += 1
    if failures == len(rows):
        raise DomainError("all tests failed: " + rows[0]["error"])
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "test",
        "tau": tau,
        "tau_prime": tau_prime,
        "alpha": alpha,
        "results": rows,
    }
    _emit_json(doc, args.out, "tests.json")
    if args.out is not None:
        _print_test_table(rows)
    return 2 if failures else 0


def _print_test_table(rows) -> None:
    print(f"{'margins':<28}{'kind':<22}{'statistic':>12}{'p_value':>10}  reject")
    for r in rows:
        tag = "+".join(r["margins"])
        if r["status"] != "ok":
            print(f"{tag:<28}{r['kind']:<22}  failed: {r['error']}")
        elif r["kind"] == "extremal_coefficient":
            print(f"{tag:<28}{r['kind']:<22}{r['statistic']:>12.4f}")
        else:
            print(
                f"{tag:<28}{r['kind']:<22}{r['statistic']:>12.4f}"
                f"{r['p_value']:>10.4f}  {r['reject']}"
            )


def cmd_trace_scan(args) -> int:
    sample = _load_sample(args)
    tau_prime = _resolve_tau_prime(args, sample.n)
    if args.k is not None:
        if args.k_min is not None or args.k_max is not None:
            raise DomainError("give either --k or a --k-min/--k-max range")
        k_min = k_max = args.k
    else:
        if args.k_min is None or args.k_max is None:
            raise DomainError("trace-scan needs --k or both --k-min and --k-max")
        k_min, k_max = args.k_min, args.k_max
    if not 2 <= k_min <= k_max <= sample.n - 1:
        raise DomainError(
            f"k range [{k_min}, {k_max}] outside [2, {sample.n - 1}] for n={sample.n}"
        )
    rows = []
    failures = 0
    for k in range(k_min, k_max + 1):
        tau = tau_from_k(sample.n, k)
        try:
            cov = estimate_v_star_laws(sample, tau, tau_prime)
            rows.append((k, float(np.trace(cov.entries)), "ok"))
        except TailjointError as exc:
            rows.append((k, math.nan, f"failed: {exc}"))
            failures += 1
    if failures == len(rows):
        raise DomainError("trace scan failed at every k: " + rows[0][2])
    _emit_csv_rows(("k", "trace", "status"), rows, args.out, "trace_scan.csv")
    return 2 if failures else 0


def parse_model_spec(text: str) -> tuple[SimulationModel, dict]:
    """Parse ``kind`` or ``kind:key=value,...`` into a simulation model.

    Keys: d, gamma (slash-separated for per-margin values), theta, vartheta.
    """
    kind, _, rest = text.partition(":")
    params = {}
    for item in rest.split(","):
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"model parameter {item!r}: expected key=value")
        params[key.strip()] = value.strip()
    d = int(params.pop("d", "1" if kind.startswith("univariate") else "2"))
    gamma_text = params.pop("gamma", format(1.0 / 3.0, ".17g"))
    gammas = tuple(float(g) for g in gamma_text.split("/"))
    if len(gammas) == 1:
        gammas = gammas * d
    theta = float(params.pop("theta", "10"))
    vartheta = float(params.pop("vartheta", "3"))
    if params:
        raise DomainError(f"unknown model parameters: {sorted(params)}")
    return SimulationModel(kind, d, gammas, theta=theta, vartheta=vartheta), {
        "d": d,
        "gamma": gamma_text,
    }


def cmd_simulate(args) -> int:
    if args.model is None:
        raise DomainError("--model is required")
    if args.n is None:
        raise DomainError("--n is required")
    model, _ = parse_model_spec(args.model)
    n = args.n
    tau = _resolve_tau(args, n)
    alpha = _alpha(args)
    reps = args.reps if args.reps is not None else 100
    seed = args.seed if args.seed is not None else 1
    workers = args.workers if args.workers is not None else 1
    naive = bool(args.naive)
    experiment = args.experiment if args.experiment is not None else "mse"
    reports = []
    if experiment == "mse":
        reports.append(run_mc_mse(model, n, tau, reps, seed, workers=workers))
    elif experiment == "coverage":
        for method in _methods(args):
            reports.append(
                run_mc_coverage(
                    model, n, tau, reps, alpha, method, seed,
                    tau_prime=args.tau_prime, naive=naive, workers=workers,
                )
            )
    elif experiment == "interval":
        tau_prime = _resolve_tau_prime(args, n)
        for method in _methods(args):
            reports.append(
                run_mc_interval_coverage(
                    model, n, tau, tau_prime, reps, alpha, method, seed,
                    naive=naive, workers=workers,
                )
            )
    elif experiment == "power":
        tau_prime = _resolve_tau_prime(args, n)
        reports.append(
            run_mc_power(
                model, n, tau, tau_prime, reps, alpha, seed,
                methods=_methods(args), workers=workers,
            )
        )
    else:
        raise DomainError(
            f"--experiment must be mse, coverage, interval or power, got {experiment!r}"
        )
    docs = []
    for r in reports:
        doc = {"schema_version": SCHEMA_VERSION, "command": "simulate", "naive": naive}
        doc.update(r.to_json_dict())
        # wall-clock time would break byte-identical reruns
        del doc["elapsed_seconds"]
        docs.append(doc)
    _emit_json(docs, args.out, "simulate.json")
    if args.out is not None:
        header = sorted({key for doc in docs for key in doc})
        rows = [[doc.get(key, "") for key in header] for doc in docs]
        _emit_csv_rows(header, rows, args.out, "simulate.csv")
    return 0


def cmd_ingest(args) -> int:
    if args.out is None:
        raise DomainError("--out is required for ingest")
    if args.input is None:
        raise DomainError("--input is required")
    has_dates = True if not args.no_returns else bool(args.date_column)
    sample = ingest_csv(args.input, has_date_column=has_dates)
    if not args.no_returns:
        sample = to_negative_weekly_log_returns(sample)
        name = "returns.csv"
    else:
        name = "ingested.csv"
    Path(args.out).mkdir(parents=True, exist_ok=True)
    emit_csv(sample, Path(args.out) / name)
    print(f"wrote {name}: n={sample.n}, d={sample.d}, columns={','.join(sample.labels)}")
    return 0


def _add_common(sub, *, levels=True):
    sub.add_argument("--config", default=None)
    sub.add_argument("--input", default=None)
    sub.add_argument("--date-column", dest="date_column", action="store_true", default=None)
    sub.add_argument("--out", default=None)
    if levels:
        sub.add_argument("--k", type=int, default=None)
        sub.add_argument("--tau", type=float, default=None)
        sub.add_argument("--tau-prime", dest="tau_prime", type=float, default=None)
        sub.add_argument("--alpha", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailjoint",
        description="Joint estimation and inference for extreme expectiles "
        "of heavy-tailed multivariate data.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("estimate", help="per-margin tail and expectile estimates")
    _add_common(p)
    p.add_argument("--method", default=None)
    p.add_argument("--naive", action="store_true", default=None)
    p.set_defaults(run=cmd_estimate)

    p = commands.add_parser("region", help="joint confidence regions with boundaries")
    _add_common(p)
    p.add_argument("--method", default=None)
    p.add_argument("--naive", action="store_true", default=None)
    p.add_argument("--intermediate", action="store_true", default=None)
    p.set_defaults(run=cmd_region)

    p = commands.add_parser("test", help="expectile and quantile equality tests")
    _add_common(p)
    p.set_defaults(run=cmd_test)

    p = commands.add_parser("trace-scan", help="trace of the extrapolated covariance per k")
    _add_common(p)
    p.add_argument("--k-min", dest="k_min", type=int, default=None)
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.set_defaults(run=cmd_trace_scan)

    p = commands.add_parser("simulate", help="Monte Carlo experiments on benchmark models")
    _add_common(p)
    p.add_argument("--experiment", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--method", default=None)
    p.add_argument("--naive", action="store_true", default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(run=cmd_simulate)

    p = commands.add_parser("ingest", help="validate a CSV and derive weekly returns")
    _add_common(p, levels=False)
    p.add_argument("--no-returns", dest="no_returns", action="store_true", default=None)
    p.set_defaults(run=cmd_ingest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return args.run(args)
    except TailjointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
