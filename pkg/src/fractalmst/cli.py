"""Command-line front end.

Subcommands: sample, mst, threshold, regularity, scaling, occupancy, lonely,
counterexample, fit. Exit codes: 0 success, 1 usage error, 2 runtime failure
(with a diagnostic naming measure, m, trial and seed when a trial dies).

CSV outputs get a sidecar `<out>.meta.json` echoing the effective config,
including the measure object, so every file is self-describing.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .emst import mst_fast
from .experiments import (
    DEFAULT_C_GRID,
    RunConfig,
    counterexample_run,
    fit_lonely_growth,
    fit_scaling,
    load_config,
    lonely_run,
    lonely_summaries,
    occupancy_run,
    parse_m_grid,
    read_scaling_csv,
    scaling_run,
    write_edges_csv,
    write_lonely_csv,
    write_occupancy_csv,
    write_scaling_csv,
)
from .measures import MeasureSpec, available_kinds, sample
from .regularity import estimate_regularity
from .rng import derive_stream


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        raise _UsageError(message)


def _parse_measure(text: str) -> MeasureSpec:
    if text.lstrip().startswith("{"):
        return MeasureSpec.from_json(text)
    return MeasureSpec.from_name(text)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_meta(out: str, payload: dict) -> None:
    Path(str(out) + ".meta.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _estimate(measure: MeasureSpec, args) -> dict:
    stream = derive_stream(args.seed, [measure.stream_label, 2**47])  # estimator role label
    est = estimate_regularity(measure, args.reference_size, args.centers, stream)
    return {
        "d_hat": est.d_hat,
        "alpha_hat": est.alpha_hat,
        "beta_hat": est.beta_hat,
        "alpha_min": est.alpha_min,
        "beta_max": est.beta_max,
        "delta_range": list(est.delta_range),
        "n_centers": est.n_centers,
        "fit_r2": est.fit_r2,
        "nominal_dim": measure.nominal_dim,
    }


def _apply_config(args) -> None:
    if getattr(args, "config", None):
        cfg: RunConfig = load_config(args.config)
        if cfg.experiment != args.command:
            raise _UsageError(f"config is for experiment {cfg.experiment!r}, not {args.command!r}")
        args.measure = cfg.measure
        args.m_grid = list(cfg.m_grid)
        args.trials = cfg.trials
        args.seed = cfg.seed


def _config_echo(args, measure: MeasureSpec, experiment: str) -> dict:
    return RunConfig(
        measure=measure,
        m_grid=list(getattr(args, "m_grid", []) or []),
        trials=int(getattr(args, "trials", 1) or 1),
        seed=args.seed,
        experiment=experiment,
    ).to_json()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sample(args) -> int:
    measure = args.measure
    stream = derive_stream(args.seed, [measure.stream_label, args.m, 0])
    cloud = sample(measure, args.m, stream)
    if args.out:
        header = ",".join("xyz"[:1] if cloud.ambient_dim == 1 else "xyz"[: cloud.ambient_dim])
        lines = [header] + [",".join(format(c, ".17g") for c in row) for row in cloud.points]
        Path(args.out).write_text("\n".join(lines) + "\n")
        _write_meta(args.out, {"measure": measure.to_json(), "m": args.m, "seed": args.seed, "stream_key": cloud.seed})
    _emit({"measure_id": measure.measure_id, "m": cloud.m, "stream_key": cloud.seed, "written": bool(args.out)})
    return 0


def _cmd_mst(args) -> int:
    measure = args.measure
    stream = derive_stream(args.seed, [measure.stream_label, args.m, 0])
    cloud = sample(measure, args.m, stream)
    result = mst_fast(cloud)
    if args.out:
        write_edges_csv(result, args.out)
        _write_meta(args.out, {"measure": measure.to_json(), "m": args.m, "seed": args.seed})
    _emit(
        {
            "measure_id": measure.measure_id,
            "m": cloud.m,
            "stream_key": cloud.seed,
            "longest_edge": result.longest_edge,
            "threshold_radius": result.longest_edge / 2.0,
            "total_length": result.total_length,
        }
    )
    return 0


def _cmd_threshold(args) -> int:
    measure = args.measure
    stream = derive_stream(args.seed, [measure.stream_label, args.m, 0])
    cloud = sample(measure, args.m, stream)
    result = mst_fast(cloud)
    _emit(
        {
            "measure_id": measure.measure_id,
            "m": cloud.m,
            "threshold_radius": result.longest_edge / 2.0,
            "longest_edge": result.longest_edge,
        }
    )
    return 0


def _cmd_regularity(args) -> int:
    payload = _estimate(args.measure, args)
    payload["measure_id"] = args.measure.measure_id
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _emit(payload)
    return 0


def _cmd_scaling(args) -> int:
    _apply_config(args)
    measure = args.measure
    records = scaling_run(measure, args.m_grid, args.trials, args.seed)
    if args.out:
        write_scaling_csv(records, args.out)
        _write_meta(args.out, _config_echo(args, measure, "scaling"))
    summary = {"measure_id": measure.measure_id, "rows": len(records)}
    if len(set(args.m_grid)) >= 3:
        fit = fit_scaling(records)
        summary["fit"] = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2, "predictor": fit.predictor}
    _emit(summary)
    return 0


def _cmd_occupancy(args) -> int:
    _apply_config(args)
    measure = args.measure
    est = _estimate(measure, args)
    alpha = args.alpha if args.alpha is not None else est["alpha_hat"]
    c_grid = [float(c) for c in args.c_grid.split(",")] if args.c_grid else list(DEFAULT_C_GRID)
    records = occupancy_run(
        measure, args.m_grid, args.trials, c_grid, args.seed, alpha_hat=alpha, d=measure.nominal_dim
    )
    if args.out:
        write_occupancy_csv(records, args.out)
        meta = _config_echo(args, measure, "occupancy")
        meta["alpha_hat"] = alpha
        meta["estimate"] = est
        _write_meta(args.out, meta)
    _emit(
        {
            "measure_id": measure.measure_id,
            "alpha_hat": alpha,
            "estimate": est,
            "rows": [
                {"m": r.m, "C": r.C, "delta": r.delta, "n_balls": r.n_balls, "full_fraction": r.full_fraction}
                for r in records
            ],
        }
    )
    return 0


def _cmd_lonely(args) -> int:
    _apply_config(args)
    measure = args.measure
    est = _estimate(measure, args)
    beta = args.beta if args.beta is not None else est["beta_hat"]
    records = lonely_run(measure, args.m_grid, args.trials, args.seed, beta_hat=beta, d=measure.nominal_dim)
    summaries = lonely_summaries(records)
    if args.out:
        write_lonely_csv(records, args.out)
        meta = _config_echo(args, measure, "lonely")
        meta["beta_hat"] = beta
        meta["estimate"] = est
        _write_meta(args.out, meta)
    payload = {
        "measure_id": measure.measure_id,
        "beta_hat": beta,
        "per_m": [
            {
                "m": s.m,
                "delta": s.delta,
                "n_balls": s.n_balls,
                "median_y": s.median_y,
                "mean_y": s.mean_y,
                "var_y": s.var_y,
                "rel_var": s.rel_var,
            }
            for s in summaries
        ],
    }
    if len(summaries) >= 3 and all(s.median_y > 0 for s in summaries):
        fit = fit_lonely_growth(summaries)
        payload["growth_fit"] = {"slope": fit.slope, "r2": fit.r2, "predictor": fit.predictor}
    _emit(payload)
    return 0


def _cmd_counterexample(args) -> int:
    _apply_config(args)
    report = counterexample_run(args.m_grid, args.trials, args.seed, i_max=args.i_max)
    if args.out:
        write_scaling_csv(report.records, args.out)
        measure = MeasureSpec.from_name("set_F") if args.i_max == 40 else MeasureSpec.from_name("set_F", i_max=args.i_max)
        _write_meta(args.out, _config_echo(args, measure, "counterexample"))
    _emit(
        {
            "m_values": report.m_values,
            "R": report.ratios,
            "strictly_increasing": report.strictly_increasing,
            "last_over_first": report.last_over_first,
        }
    )
    return 0


def _cmd_fit(args) -> int:
    records = read_scaling_csv(args.input)
    fit = fit_scaling(records)
    payload = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "n_range": list(fit.n_range),
        "predictor": fit.predictor,
        "implied_dimension": 1.0 / fit.slope if fit.slope != 0 else None,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _emit(payload)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser, *, measure=True, grid=False, m=False, estimator=False):
    if measure:
        p.add_argument(
            "--measure",
            type=_parse_measure,
            default=MeasureSpec.from_name("unit_square"),
            metavar="NAME|JSON",
            help=f"measure name ({', '.join(available_kinds())}) or inline JSON spec",
        )
    if m:
        p.add_argument("--m", type=int, default=1024, help="sample size")
    if grid:
        p.add_argument("--m-grid", type=parse_m_grid, default="1024:131072:8", metavar="A:B:STEPS", help="geometric grid of sample sizes")
        p.add_argument("--trials", type=int, default=20, help="independent trials per grid point")
        p.add_argument("--config", type=str, default=None, help="JSON run config; overrides the flags above")
    if estimator:
        p.add_argument("--reference-size", type=int, default=100_000, help="reference cloud size for ball-mass estimation")
        p.add_argument("--centers", type=int, default=200, help="number of estimation centers")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", type=str, default=None, help="output path (csv)")
    p.add_argument("--format", choices=["csv"], default="csv", help="output format")


def _build_parser() -> _Parser:
    parser = _Parser(prog="fractalmst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw a point cloud and dump coordinates")
    _add_common(p, m=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("mst", help="build the MST of one cloud")
    _add_common(p, m=True)
    p.set_defaults(func=_cmd_mst)

    p = sub.add_parser("threshold", help="connectivity threshold of one cloud")
    _add_common(p, m=True)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("regularity", help="estimate ball-mass dimension and envelope")
    _add_common(p, estimator=True)
    p.set_defaults(func=_cmd_regularity)

    p = sub.add_parser("scaling", help="longest-edge scaling run over an m grid")
    _add_common(p, grid=True)
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("occupancy", help="full-occupancy fractions over (m, C)")
    _add_common(p, grid=True, estimator=True)
    p.add_argument("--c-grid", type=str, default=None, help="comma-separated C multipliers")
    p.add_argument("--alpha", type=float, default=None, help="ball-mass lower constant; estimated when omitted")
    p.set_defaults(func=_cmd_occupancy)

    p = sub.add_parser("lonely", help="lonely-ball statistic over an m grid")
    _add_common(p, grid=True, estimator=True)
    p.add_argument("--beta", type=float, default=None, help="ball-mass upper constant; estimated when omitted")
    p.set_defaults(func=_cmd_lonely)

    p = sub.add_parser("counterexample", help="rate divergence on the slab-and-bridge set")
    _add_common(p, measure=False, grid=True)
    p.add_argument("--i-max", type=int, default=40, help="slab/bridge truncation index")
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("fit", help="fit the scaling exponent from a CSV")
    p.add_argument("--in", dest="input", required=True, help="scaling CSV produced by `scaling`")
    p.add_argument("--out", type=str, default=None, help="write the fit as JSON")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=_cmd_fit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if isinstance(getattr(args, "m_grid", None), str):
            args.m_grid = parse_m_grid(args.m_grid)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: report and set exit code
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
