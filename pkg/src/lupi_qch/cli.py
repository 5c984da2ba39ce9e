"""Command-line front end.

Subcommands:
    pne     write the Poisson-Nash equilibrium as an ``action,probability`` table
    fit     fit PNE / QCH / QCH-IPL to weekly lab data, one JSON report per week
    hist    weekly average daily frequencies with model overlays
    synth   generate a synthetic dataset in the lab file format
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

from .data import (
    DAYS_PER_WEEK,
    DataError,
    load_lab_dataset,
    pooled_counts,
    synthesize_traces,
    traces_to_dataset,
    weekly_traces,
    write_lab_dataset,
)
from .game import GameSpec
from .hierarchy import DEFAULT_LEVELS, GridSpec, build_hierarchy, fit_lambda, poisson_levels, predict
from .ipl import ipl_fit_lambda
from .metrics import chi_squared, log_likelihood, proportion_below, significance_stars, wasserstein_1d
from .pne import SolverError, indifference_residual, solve_pne

log = logging.getLogger("lupi_qch")

MODELS = ("pne", "qch", "qch-ipl")

#: Per-week level means estimated from the field game, used to pin the QCH baseline.
FIELD_TAU = (1.80, 3.17, 4.17, 4.64, 5.02, 6.76, 6.12)


class UsageError(Exception):
    pass


def _game(args) -> GameSpec:
    try:
        return GameSpec(K=args.k, n=args.n, prize=args.prize)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _weeks(text: str, n_weeks: int) -> list[int]:
    if text == "all":
        return list(range(1, n_weeks + 1))
    try:
        weeks = [int(w) for w in text.split(",")]
    except ValueError:
        raise UsageError(f"bad week selector {text!r}") from None
    bad = [w for w in weeks if not 1 <= w <= n_weeks]
    if bad:
        raise UsageError(f"unknown week(s) {bad}; data has weeks 1..{n_weeks}")
    return weeks


def _taus(text: str | None, weeks: list[int]) -> list[float]:
    if text is None:
        raise UsageError("--tau is required for the qch model")
    if text == "field":
        return [FIELD_TAU[w - 1] if w <= len(FIELD_TAU) else FIELD_TAU[-1] for w in weeks]
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --tau {text!r}") from None
    if len(vals) == 1:
        return vals * len(weeks)
    if len(vals) != len(weeks):
        raise UsageError(f"--tau has {len(vals)} values for {len(weeks)} week(s)")
    return vals


def _grid(text: str) -> GridSpec:
    try:
        return GridSpec.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    if args.data is None:
        raise UsageError("--data is required")
    return load_lab_dataset(args.data, K=args.k)


def fit_model(model: str, traces, spec: GameSpec, args, tau: float | None = None) -> dict:
    """Fit one model to one week's traces and return the report record."""
    counts = pooled_counts(traces, spec.K)
    rec: dict = {"model": model}
    if model == "pne":
        pred = solve_pne(spec)
    elif model == "qch":
        grid = _grid(args.lambda_grid)
        lam, _ = fit_lambda(counts, (tau, args.levels), spec, grid)
        levels = poisson_levels(tau, args.levels)
        pred = predict(levels, build_hierarchy(levels, lam, spec))
        rec.update(tau=tau, **{"lambda": lam})
    elif model == "qch-ipl":
        res, lam = ipl_fit_lambda(
            traces, spec, _grid(args.lambda_grid), args.epsilon, args.max_iter,
            args.restarts, args.seed, args.levels, jobs=args.jobs,
        )
        pred = res.prediction
        rec.update(
            **{"lambda": lam},
            iterations=res.iterations,
            converged=res.converged,
            population=res.population.tolist(),
            mean_levels={f.agent_id: f.mean_level for f in res.agent_fits},
        )
    else:
        raise UsageError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")

    per_day = args.per_day if args.per_day else len(traces)
    empirical = counts / counts.sum()
    chi2, df = chi_squared(counts / DAYS_PER_WEEK, pred, per_day, args.bin_size, args.bins)
    rec.update(
        loglik=log_likelihood(counts, pred),
        chi2=chi2,
        df=df,
        stars=significance_stars(chi2, df),
        proportion_below=proportion_below(empirical, pred),
        wasserstein=wasserstein_1d(empirical, pred),
        n_obs=int(counts.sum()),
        prediction=pred.tolist(),
    )
    return rec


def cmd_pne(args) -> int:
    spec = _game(args)
    try:
        p = solve_pne(spec)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("action", "probability"))
        for k, pk in enumerate(p, start=1):
            w.writerow((k, repr(float(pk))))
    finally:
        if args.out:
            out.close()
    print(f"indifference_residual={indifference_residual(p, spec):.3e}", file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    spec = _game(args)
    if args.model not in MODELS:
        raise UsageError(f"unknown model {args.model!r}; choose from {', '.join(MODELS)}")
    ds = _load(args)
    weeks = _weeks(args.week, ds.n_weeks)
    taus = _taus(args.tau, weeks) if args.model == "qch" else [None] * len(weeks)
    reports = []
    for week, tau in zip(weeks, taus):
        log.info("fitting %s to week %d", args.model, week)
        rec = fit_model(args.model, weekly_traces(ds, week), spec, args, tau)
        reports.append({"week": week, **rec})
    text = _pretty(reports) if args.pretty else "".join(json.dumps(r) + "\n" for r in reports)
    _emit(text, args.out)
    return 0


def _pretty(reports: list[dict]) -> str:
    rows = [
        ("Log-likelihood", lambda r: f"{r['loglik']:.1f}"),
        ("tau", lambda r: f"{r['tau']:.2f}" if "tau" in r else "-"),
        ("lambda", lambda r: f"{r['lambda']:.2f}" if "lambda" in r else "-"),
        ("chi2 (avg frequency)", lambda r: f"{r['chi2']:.2f}"),
        ("(df)", lambda r: f"({r['df']}){r['stars']}"),
        ("Proportion below (%)", lambda r: f"{r['proportion_below']:.2f}"),
        ("Wasserstein distance", lambda r: f"{r['wasserstein']:.4f}"),
    ]
    head = ["Week"] + [f"({r['week']})" for r in reports] + ["Average"]
    lines = [reports[0]["model"].upper(), "  ".join(f"{h:>10}" if i else f"{h:<22}" for i, h in enumerate(head))]
    for name, fmt in rows:
        cells = [fmt(r) for r in reports]
        avg = "-"
        if name.startswith(("Proportion", "Wasserstein")):
            key = "proportion_below" if name.startswith("Proportion") else "wasserstein"
            avg = f"{np.mean([r[key] for r in reports]):.4f}"
        lines.append(f"{name:<22}  " + "  ".join(f"{c:>10}" for c in cells + [avg]))
    return "\n".join(lines) + "\n"


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_hist(args) -> int:
    spec = _game(args)
    models = [m for m in args.models.split(",") if m] if args.models else []
    bad = [m for m in models if m not in MODELS]
    if bad:
        raise UsageError(f"unknown model(s) {bad}; choose from {', '.join(MODELS)}")
    ds = _load(args)
    weeks = _weeks(args.week, ds.n_weeks)
    if len(weeks) != 1:
        raise UsageError("hist takes a single --week")
    traces = weekly_traces(ds, weeks[0])
    per_day = args.per_day if args.per_day else len(traces)
    counts = pooled_counts(traces, spec.K)
    cutoff = min(args.cutoff, spec.K)
    cols = {"empirical": counts / DAYS_PER_WEEK}
    for m in models:
        tau = _taus(args.tau, weeks)[0] if m == "qch" else None
        rec = fit_model(m, traces, spec, args, tau)
        cols[m] = per_day * np.asarray(rec["prediction"])
    lines = [",".join(["action", *cols])]
    for k in range(cutoff):
        lines.append(",".join([str(k + 1), *(repr(float(v[k])) for v in cols.values())]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _read_betas(path) -> list[np.ndarray]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(np.array([float(x) for x in line.replace(",", " ").split()]))
    if not rows:
        raise UsageError(f"{path}: no beta rows")
    return [r / r.sum() for r in rows]


def _preset_betas(name: str, agents: int, levels: int, tau: float) -> list[np.ndarray]:
    pop = poisson_levels(tau, levels)
    if name == "poisson":
        return [pop] * agents
    if name == "poisson-pure":
        # each agent plays a single level, level shares follow the Poisson weights
        counts = np.floor(pop * agents).astype(int)
        short = agents - counts.sum()
        counts[np.argsort(-(pop * agents - counts), kind="stable")[:short]] += 1
        eye = np.eye(levels + 1)
        return [eye[l] for l in np.repeat(np.arange(levels + 1), counts)]
    raise UsageError(f"unknown preset {name!r}; choose poisson or poisson-pure")


def cmd_synth(args) -> int:
    spec = _game(args)
    if args.rounds < 1 or args.agents < 1:
        raise UsageError("--rounds and --agents must be positive")
    if args.out is None:
        raise UsageError("--out is required")
    if args.betas:
        betas = _read_betas(args.betas)
        if len(betas) == 1:
            betas = betas * args.agents
        elif len(betas) != args.agents:
            raise UsageError(f"{len(betas)} beta rows for {args.agents} agents")
    else:
        betas = _preset_betas(args.preset, args.agents, args.levels, args.tau or 1.5)
    traces = synthesize_traces(betas, args.lam, spec, args.rounds, args.seed)
    write_lab_dataset(traces_to_dataset(traces), args.out)
    return 0


def _add_game(p):
    p.add_argument("--k", type=int, default=99, help="largest choosable number")
    p.add_argument("--n", type=float, default=26.9, help="mean number of players")
    p.add_argument("--prize", type=float, default=1.0)


def _add_fit(p):
    p.add_argument("--data", help="participant,round,choice table")
    p.add_argument("--week", default="all", help="week number, comma list, or 'all'")
    p.add_argument("--tau", help="QCH level mean: one value, a per-week comma list, or 'field'")
    p.add_argument("--lambda-grid", default="1:20:500", help="lo:hi:count")
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS, help="highest reasoning level m")
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the IPL grid")
    p.add_argument("--per-day", type=float, default=None, help="submissions per day (default: participants)")
    p.add_argument("--bin-size", type=int, default=2)
    p.add_argument("--bins", type=int, default=6)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lupi-qch", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="file of 'flag = value' lines applied before other flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pne", help="Poisson-Nash equilibrium table")
    _add_game(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pne)

    p = sub.add_parser("fit", help="fit a model per week")
    _add_game(p)
    _add_fit(p)
    p.add_argument("--model", default="qch-ipl", help="pne, qch or qch-ipl")
    p.add_argument("--pretty", action="store_true", help="table layout instead of JSON lines")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("hist", help="average daily frequencies with model overlays")
    _add_game(p)
    _add_fit(p)
    p.add_argument("--models", default="", help="comma list of models to overlay")
    p.add_argument("--cutoff", type=int, default=20)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("synth", help="synthetic dataset")
    _add_game(p)
    p.add_argument("--betas", help="file with one level-weight row per agent (or one row for all)")
    p.add_argument("--preset", default="poisson-pure", help="poisson or poisson-pure")
    p.add_argument("--tau", type=float, default=None, help="level mean for presets (default 1.5)")
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--lambda", dest="lam", type=float, default=10.0)
    p.add_argument("--rounds", type=int, default=49)
    p.add_argument("--agents", type=int, default=38)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)
    return parser


def _config_args(path: str, command: str) -> list[str]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'flag = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.lstrip("-")
        if value.lower() in ("true", "yes", "on"):
            out.append(flag)
        elif value.lower() not in ("false", "no", "off"):
            out += [flag, *shlex.split(value)]
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    try:
        if known.config:
            cmd = next((a for a in rest if not a.startswith("-")), None)
            if cmd is None:
                raise UsageError("missing command")
            i = rest.index(cmd)
            rest = rest[: i + 1] + _config_args(known.config, cmd) + rest[i + 1 :]
        args = parser.parse_args(rest)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
