"""Command-line front end.

Subcommands cover data simulation, single and replicated likelihood
estimates, the full surrogate-optimisation and SPSA runs, the Kalman grid
baseline, the standalone DIRECT test harness, and surrogate/acquisition
grid dumps. All delimited output is CSV with headers and 17-significant-
digit floats (bitwise round-trippable); report subcommands also render
matplotlib figures next to their CSV output unless ``--no-plots`` is given.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import acquisition, direct, driver, gp, kalman, particle, spsa
from .models import get_model, validate_theta


class UsageError(Exception):
    """Bad flags or argument values; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload) -> None:
    def convert(obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return [convert(v) for v in obj]
        if isinstance(obj, dict):
            return {k: convert(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [convert(v) for v in obj]
        return obj

    with open(path, "w") as fh:
        json.dump(convert(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_series(path) -> np.ndarray:
    """Read an observation series from CSV (column 'y', or the last column)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"no data in {path}")
    try:
        float(rows[0][-1])
        col = len(rows[0]) - 1
        start = 0
    except ValueError:
        header = [h.strip() for h in rows[0]]
        col = header.index("y") if "y" in header else len(header) - 1
        start = 1
    values = [float(r[col]) for r in rows[start:] if r]
    if not values:
        raise ValueError(f"no data rows in {path}")
    return np.asarray(values)


def _parse_theta(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])
    except ValueError:
        raise UsageError(f"could not parse parameter list '{text}'") from None


def _theta_header(d: int) -> list:
    return [f"theta{i + 1}" for i in range(d)]


def _checked_theta(model, text: str) -> np.ndarray:
    try:
        return validate_theta(model, _parse_theta(text))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _checked_model(name: str):
    try:
        return get_model(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_simulate(args) -> int:
    model = _checked_model(args.model)
    theta = _checked_theta(model, args.theta)
    _require(args.T >= 1, "--T must be at least 1")
    from .models import simulate

    states, obs = simulate(model, theta, args.T, args.seed)
    rows = [(t + 1, states[t], obs.y[t]) for t in range(args.T)]
    _write_csv(args.out, ["t", "x", "y"], rows)
    return 0


def _cmd_pf_loglik(args) -> int:
    model = _checked_model(args.model)
    theta = _checked_theta(model, args.theta)
    _require(args.particles >= 1, "--particles must be at least 1")
    _require(args.reps >= 1, "--reps must be at least 1")
    y = _load_series(args.data)
    rows = []
    for rep in range(args.reps):
        est = particle.estimate_loglik(
            model, theta, y, args.particles, seed=args.seed + rep,
            resampling=args.resampling,
        )
        rows.append((rep, est.seed, est.value, est.degenerate))
    _write_csv(args.out, ["rep", "seed", "loglik", "degenerate"], rows)
    return 0


def _cmd_kalman_grid(args) -> int:
    _require(args.grid >= 3, "--grid must be at least 3")
    y = _load_series(args.data)
    theta_mle = kalman.grid_mle(y, args.grid)
    loglik = kalman.kalman_loglik(theta_mle, y)
    print("theta_mle,loglik")
    print(f"{_fmt(theta_mle)},{_fmt(loglik)}")
    return 0


def _surface_rows(grid, mu, sigma, ei):
    for i in range(grid.shape[0]):
        yield (*grid[i], mu[i], sigma[i], ei[i])


def _cmd_gpo(args) -> int:
    model = _checked_model(args.model)
    theta1 = _checked_theta(model, args.theta1)
    _require(args.iters >= 1, "--iters must be at least 1")
    _require(args.particles >= 1, "--particles must be at least 1")
    _require(args.zeta >= 0.0, "--zeta must be non-negative")
    y = _load_series(args.data)
    snapshots = []
    if args.snapshots:
        try:
            snapshots = [int(tok) for tok in args.snapshots.split(",") if tok.strip()]
        except ValueError:
            raise UsageError(f"could not parse --snapshots '{args.snapshots}'") from None
        _require(
            all(1 <= k <= args.iters for k in snapshots),
            "--snapshots entries must lie in [1, --iters]",
        )

    config = driver.GpoConfig(
        iterations=args.iters,
        n_particles=args.particles,
        theta1=theta1,
        zeta=args.zeta,
        seed=args.seed,
        resampling=args.resampling,
    )
    result = driver.run_gpo(model, y, config, snapshot_iters=snapshots)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    d = model.param_dim
    rows = [
        (r.iteration, *r.theta, r.loglik_hat, r.mu_max, r.ei_max)
        for r in result.per_iteration
    ]
    _write_csv(
        out_dir / "iterates.csv",
        ["k", *_theta_header(d), "loglik_hat", "mu_max", "ei_max"],
        rows,
    )
    hyper = result.final_posterior.hyper
    _write_json(
        out_dir / "result.json",
        {
            "model": model.name,
            "theta_hat": list(result.theta_hat),
            "hyperparams": {
                "mean_const": hyper.mean_const,
                "signal_var": hyper.signal_var,
                "length_scales": list(hyper.length_scales),
                "noise_var": hyper.noise_var,
            },
            "n_loglik_evals": result.n_loglik_evals,
            "iterations": args.iters,
            "n_particles": args.particles,
            "n_degenerate": sum(r.degenerate for r in result.per_iteration),
            "zeta": args.zeta,
            "seed": args.seed,
        },
    )

    surfaces = {"final": result.final_posterior}
    for k, post in result.snapshots.items():
        surfaces[str(k)] = post
    if d <= 2:
        for tag, post in surfaces.items():
            grid, mu, sigma, ei = driver.posterior_surface(
                post, args.surface_grid, args.zeta
            )
            _write_csv(
                out_dir / f"surface_{tag}.csv",
                [*_theta_header(d), "mu", "sigma", "ei"],
                _surface_rows(grid, mu, sigma, ei),
            )
            if not args.no_plots:
                from . import plots

                if d == 1:
                    plots.render_surface_1d(
                        grid, mu, sigma, ei,
                        post.train.thetas, post.train.loglik,
                        out_dir / f"surface_{tag}.png",
                    )
                else:
                    plots.render_surface_2d(
                        grid, mu, post.train.thetas,
                        result.theta_hat if tag == "final" else None,
                        out_dir / f"surface_{tag}.png",
                    )
    if not args.no_plots:
        from . import plots

        plots.render_trace(
            result.history.thetas, 1, None, out_dir / "trace.png"
        )
    return 0


def _cmd_spsa(args) -> int:
    model = _checked_model(args.model)
    theta0 = _checked_theta(model, args.theta0)
    _require(args.iters >= 1, "--iters must be at least 1")
    _require(args.particles >= 1, "--particles must be at least 1")
    _require(args.a >= 0.0, "--a must be non-negative")
    _require(args.c > 0.0, "--c must be positive")
    y = _load_series(args.data)

    def objective(theta, seed):
        return particle.estimate_loglik(model, theta, y, args.particles, seed=seed).value

    config = spsa.SpsaConfig(iterations=args.iters, a=args.a, c=args.c)
    trace = spsa.run_spsa(objective, theta0, model.domain, config, seed=args.seed)
    rows = [
        (k, *trace.iterates[k], 2 * k) for k in range(trace.iterates.shape[0])
    ]
    _write_csv(
        args.out, ["iter", *_theta_header(model.param_dim), "evals"], rows
    )
    if not args.no_plots:
        from . import plots

        plots.render_trace(
            trace.iterates, 2, None, Path(args.out).with_suffix(".png")
        )
    return 0


def _cmd_direct_test(args) -> int:
    _require(args.max_evals >= 1, "--max-evals must be at least 1")
    try:
        objective, domain = direct.get_test_function(args.fn)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = direct.maximize(
        objective, domain, direct.DirectConfig(max_evals=args.max_evals)
    )
    print(",".join(_theta_header(domain.dim)) + ",value,n_evals")
    print(
        ",".join(_fmt(v) for v in result.theta)
        + f",{_fmt(result.value)},{result.n_evals}"
    )
    return 0


def _surrogate_from_uniform_samples(model, y, n_particles, n_samples, seed):
    """Fit the surrogate to PF estimates at uniformly sampled parameters."""
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(
        model.domain.lower, model.domain.upper, size=(n_samples, model.param_dim)
    )
    values = []
    for j in range(n_samples):
        est = particle.estimate_loglik(
            model, thetas[j], y, n_particles, seed=seed + 1 + j
        )
        values.append(est.value)
    values = np.asarray(values)
    finite = values[np.isfinite(values)]
    floor = finite.min() - 100.0 if finite.size else -1e10
    values = np.where(np.isfinite(values), values, floor)
    return gp.fit(gp.IterateSet(thetas, values), model.domain)


def _cmd_gp_dump(args) -> int:
    model = _checked_model(args.model)
    _require(model.param_dim <= 2, "grid dumps support at most 2 parameters")
    _require(args.particles >= 1, "--particles must be at least 1")
    _require(args.samples >= 1, "--samples must be at least 1")
    _require(args.grid >= 2, "--grid must be at least 2")
    y = _load_series(args.data)
    post = _surrogate_from_uniform_samples(
        model, y, args.particles, args.samples, args.seed
    )
    grid, mu, sigma, _ = driver.posterior_surface(post, args.grid, zeta=0.01)
    d = model.param_dim
    _write_csv(
        args.out,
        [*_theta_header(d), "mu", "sigma"],
        ((*grid[i], mu[i], sigma[i]) for i in range(grid.shape[0])),
    )
    if not args.no_plots and d == 1:
        from . import plots

        plots.render_curve_1d(
            grid, {"posterior mean": mu, "posterior sd": sigma},
            Path(args.out).with_suffix(".png"),
        )
    return 0


def _cmd_ei_dump(args) -> int:
    model = _checked_model(args.model)
    _require(model.param_dim <= 2, "grid dumps support at most 2 parameters")
    _require(args.particles >= 1, "--particles must be at least 1")
    _require(args.samples >= 1, "--samples must be at least 1")
    _require(args.grid >= 2, "--grid must be at least 2")
    _require(args.zeta >= 0.0, "--zeta must be non-negative")
    y = _load_series(args.data)
    post = _surrogate_from_uniform_samples(
        model, y, args.particles, args.samples, args.seed
    )
    grid, _, _, ei = driver.posterior_surface(post, args.grid, zeta=args.zeta)
    d = model.param_dim
    _write_csv(
        args.out,
        [*_theta_header(d), "ei"],
        ((*grid[i], ei[i]) for i in range(grid.shape[0])),
    )
    if not args.no_plots and d == 1:
        from . import plots

        plots.render_curve_1d(
            grid, {"expected improvement": ei}, Path(args.out).with_suffix(".png")
        )
    return 0


def replicate_study(
    model,
    theta,
    y,
    n_particles: int,
    n_reps: int,
    seed: int,
    out_dir,
    resampling: str = "systematic",
    render: bool = True,
) -> dict:
    """Replicated likelihood estimation with moment, normality and QQ reports.

    Writes ``replicates.csv``, ``summary.json`` and ``qq.csv`` (plus a
    figure unless disabled) into ``out_dir`` and returns the summary dict.
    For the linear-Gaussian model the summary includes the exact reference
    value and the estimator bias against it.
    """
    if n_reps < 20:
        raise ValueError("a replicate study needs at least 20 replicates")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    values = particle.replicate_loglik(
        model, theta, y, n_particles, n_reps, base_seed=seed, resampling=resampling
    )
    rows = [
        (rep, seed + rep, values[rep], not np.isfinite(values[rep]))
        for rep in range(n_reps)
    ]
    _write_csv(out_dir / "replicates.csv", ["rep", "seed", "loglik", "degenerate"], rows)

    finite = values[np.isfinite(values)]
    stat, p_value = particle.normality_diagnostic(finite)
    summary = {
        "n_reps": n_reps,
        "n_degenerate": int(n_reps - finite.size),
        "mean": float(np.mean(finite)),
        "std": float(np.std(finite, ddof=1)),
        "skewness": float(stats.skew(finite)),
        "excess_kurtosis": float(stats.kurtosis(finite)),
        "normality_statistic": stat,
        "normality_p_value": p_value,
    }
    if model.name == "lgss":
        reference = kalman.kalman_loglik(theta, y)
        summary["kalman_loglik"] = reference
        summary["bias"] = float(np.mean(finite) - reference)
    _write_json(out_dir / "summary.json", summary)

    n = finite.size
    probs = (np.arange(1, n + 1) - 0.5) / n
    sample_q = np.sort(finite)
    theo_q = stats.norm.ppf(probs, loc=summary["mean"], scale=summary["std"])
    _write_csv(
        out_dir / "qq.csv",
        ["p", "sample_quantile", "theoretical_quantile"],
        zip(probs, sample_q, theo_q),
    )
    if render:
        from . import plots

        center = summary.get("kalman_loglik", summary["mean"])
        plots.render_replicates(finite, center, out_dir / "replicates.png")
    return summary


def _cmd_replicate_study(args) -> int:
    model = _checked_model(args.model)
    theta = _checked_theta(model, args.theta)
    _require(args.particles >= 1, "--particles must be at least 1")
    _require(args.reps >= 20, "--reps must be at least 20")
    y = _load_series(args.data)
    replicate_study(
        model,
        theta,
        y,
        args.particles,
        args.reps,
        args.seed,
        args.out_dir,
        resampling=args.resampling,
        render=not args.no_plots,
    )
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> _Parser:
    parser = _Parser(prog="gposmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("simulate", _cmd_simulate, "simulate a synthetic dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--T", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)

    p = add("pf-loglik", _cmd_pf_loglik, "particle log-likelihood estimate(s)")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--particles", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--resampling", choices=particle.RESAMPLING_SCHEMES,
                   default="systematic")
    p.add_argument("--out", required=True)

    p = add("kalman-grid", _cmd_kalman_grid, "grid-search MLE via the Kalman filter")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", type=int, default=201)

    p = add("gpo", _cmd_gpo, "full surrogate-optimisation run")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--theta1", required=True)
    p.add_argument("--iters", required=True, type=int)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--snapshots", default="")
    p.add_argument("--surface-grid", type=int, default=201)
    p.add_argument("--resampling", choices=particle.RESAMPLING_SCHEMES,
                   default="systematic")
    p.add_argument("--no-plots", action="store_true")

    p = add("spsa", _cmd_spsa, "SPSA baseline run")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--theta0", required=True)
    p.add_argument("--iters", required=True, type=int)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--a", type=float, default=0.03)
    p.add_argument("--c", type=float, default=0.04)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")

    p = add("direct-test", _cmd_direct_test, "run DIRECT on a built-in test function")
    p.add_argument("--fn", required=True)
    p.add_argument("--max-evals", type=int, default=500)

    p = add("gp-dump", _cmd_gp_dump, "surrogate mean/sd grid dump")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--samples", type=int, default=6)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")

    p = add("ei-dump", _cmd_ei_dump, "expected-improvement grid dump")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--samples", type=int, default=6)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")

    p = add("replicate-study", _cmd_replicate_study,
            "replicated estimation with normality report")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--resampling", choices=particle.RESAMPLING_SCHEMES,
                   default="systematic")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-plots", action="store_true")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        print("error: a subcommand is required (see --help)", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
