"""Command-line front end: experiment tables, counterexample demo, spectrum runs.

Subcommands: run, table1, table2, counterexample, spectrum, converge.
Exit codes: 0 success, 2 config error, 3 numerical failure.

All output is deterministic: CSV with 17-significant-digit scientific floats,
JSON with sorted keys. Table commands emit computed columns side by side with
the published values they are compared against.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import glm, onestep, problems, spectra
from .errors import ConfigError, GlmStabError, NumericalError

FLOAT_FMT = "%.16e"    # 17 significant digits: exact float64 round-trip

# Published experiment values (side-by-side columns, tolerance-checked only by
# the test suite). Table 1: h -> (lte_mean, lte_max, mu). Table 2:
# a -> (lte_mean, lte_max, mu, tau_max).
TABLE1_PROBLEM = {"a1": 1.2, "a2": 1.2, "b1": -0.14, "b2": -0.15, "beta": 10.0}
TABLE1_H = (7.5e-1, 7.5e-2, 7.5e-3, 7.5e-4)
TABLE1_TFINAL = 40.0
TABLE1_PUBLISHED = {
    7.5e-1: (1.37e10, 1.51e11, 7.68e-1),
    7.5e-2: (3.75e-3, 9.42e-3, 9.03e-3),
    7.5e-3: (3.60e-7, 6.38e-4, -9.70e-2),
    7.5e-4: (1.95e-9, 6.24e-5, -9.04e-2),
}

TABLE2_A = (1.15, 1.45, 1.75, 2.05)
TABLE2_H = 0.05
TABLE2_TFINAL = 100.0
# b1 as printed is -0.5; the published mu column is only reproducible with the
# corrected reading -0.05 (which also restores the standing assumption
# b2 < b1 < 0 against the printed b2).
TABLE2_B1 = {"as-printed": -0.5, "corrected": -0.05}
TABLE2_B2 = {"as-printed": -0.055, "corrected": -0.55}
TABLE2_PUBLISHED = {
    1.15: (5.50e-5, 4.38e-3, -2.33e-2, 1.068),
    1.45: (1.18e-4, 5.02e-3, -1.69e-3, 1.086),
    1.75: (2.88e-4, 5.70e-3, 1.78e-2, 1.11),
    2.05: (7.96e-4, 6.4e-3, 3.64e-2, 1.23),
}


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return FLOAT_FMT % x


def _log10(v: float) -> float:
    return math.log10(max(float(v), 1e-300))


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(out: str) -> str:
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# experiment rows (shared by the table commands and the acceptance tests)


@dataclass
class ExperimentRow:
    """Everything one table row needs: estimates plus per-step series."""

    h: float
    n_steps: int
    diverged: bool
    mu: float                 # w-sequence trail estimate
    mu_frame: float           # leading mode of the full-frame trail
    argmax_t: float
    lte_mean: float
    lte_max: float
    tau_max: float
    times: np.ndarray         # t_n for n = 0..n_steps (first-block times)
    norms: np.ndarray         # ||x_n|| along the first blocks
    lte: np.ndarray           # per-step restart defect series (scaled)
    running_mu: np.ndarray    # origin-anchored running average, length n_steps


def experiment_row(tab: glm.GlmTableau, params: problems.RotatingCosineParams,
                   h: float, t_final: float, t0: float = 0.0, x0=(1.0, 0.0),
                   start: str = "rk4", n0: Optional[int] = None,
                   denominator: str = "t0", sum_start: str = "origin",
                   lte_scale: str = "per-h", with_frame: bool = False) -> ExperimentRow:
    """Integrate one parameter set and compute the diagnostic row."""
    if h <= 0.0:
        raise ConfigError(f"h must be positive, got {h}")
    if t_final <= t0:
        raise ConfigError(f"t_final {t_final} must exceed t0 {t0}")
    prob = problems.rotating_cosine_problem(params)
    n_f = int(round((t_final - t0) / h))
    if start == "rk4":
        x0s = glm.start_rk4(prob, x0, t0, h, tab.k)
    elif start == "reference":
        ref = lambda t: problems.reference_batch(params, np.atleast_1d(t), x0=x0, t0=t0)[0]
        x0s = glm.start_from_reference(ref, t0, h, tab.k)
    else:
        raise ConfigError(f"unknown start procedure {start!r}")
    traj, phis = glm.run_linear(tab, prob, x0s, n_f, h, t0, keep_transitions=True)
    m = traj.n_steps

    split = onestep.spectral_split(tab)
    w = onestep.extract_w(traj, split)
    trail = spectra.vector_trail_from_values(w.values, h, t0)
    if n0 is None:
        n0 = m // 2
    est = spectra.mu_appr(trail, n0, m - n0, denominator=denominator,
                          sum_start=sum_start)

    mu_frame = math.nan
    if with_frame:
        ftrail = spectra.new_matrix_trail(tab.k * prob.d, h, t0)
        spectra.qr_advance_series(ftrail, phis)
        fest = spectra.mu_appr(ftrail, n0, m - n0, denominator=denominator,
                               sum_start=sum_start)
        mu_frame = float(fest.mu[0])

    times = t0 + h * np.arange(m + tab.k)
    refs = problems.reference_batch(params, times, x0=x0, t0=t0)
    lte = glm.lte_series(tab, phis, refs)
    if lte_scale == "per-h":
        lte = lte / h
    elif lte_scale != "defect":
        raise ConfigError(f"unknown lte scale {lte_scale!r}")
    _, tau_max = glm.tau_series(lte)

    logs = trail.logs()[:, 0]
    running = np.cumsum(logs) / (h * np.arange(1, m + 1))
    first = traj.first_blocks()
    return ExperimentRow(
        h=h, n_steps=m, diverged=traj.diverged, mu=float(est.mu[0]),
        mu_frame=mu_frame, argmax_t=float(est.argmax_t[0]),
        lte_mean=float(lte.mean()), lte_max=float(lte.max()), tau_max=tau_max,
        times=times[: m + 1], norms=np.linalg.norm(first, axis=1),
        lte=lte, running_mu=running,
    )


def table1_rows(**overrides) -> list:
    tab = glm.get_tableau("bdf2")
    params = problems.RotatingCosineParams(**TABLE1_PROBLEM)
    return [experiment_row(tab, params, h, TABLE1_TFINAL, **overrides)
            for h in TABLE1_H]


def table2_rows(b1_reading: str = "as-printed", b2_reading: str = "as-printed",
                **overrides) -> list:
    tab = glm.get_tableau("bdf2")
    rows = []
    for a in TABLE2_A:
        params = problems.RotatingCosineParams(
            a1=a, a2=a, b1=TABLE2_B1[b1_reading], b2=TABLE2_B2[b2_reading], beta=1.0)
        rows.append(experiment_row(tab, params, TABLE2_H, TABLE2_TFINAL,
                                   with_frame=True, **overrides))
    return rows


# ---------------------------------------------------------------------------
# subcommands


def _load_config(raw: Optional[str]) -> dict:
    if raw is None:
        return {}
    text = raw
    if not raw.lstrip().startswith("{"):
        try:
            with open(raw) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {raw!r}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if not cfg:
        cfg = dict(TABLE1_PROBLEM)
    params, t0, x0 = problems.rotating_config(cfg)
    if args.h is None or args.tfinal is None:
        raise ConfigError("run needs --h and --tfinal")
    tab = glm.get_tableau(args.method)
    row = experiment_row(tab, params, args.h, args.tfinal, t0=t0, x0=tuple(x0),
                         start=args.start, n0=args.n0,
                         denominator=args.denominator, sum_start=args.sum_start,
                         lte_scale=args.lte_scale)
    out = _ensure_out(args.out)
    steps = []
    for n in range(row.n_steps + 1):
        steps.append([
            n, _fmt(row.times[n]), _fmt(row.norms[n]),
            _fmt(row.lte[n]) if n < len(row.lte) else "",
            _fmt(row.running_mu[n - 1]) if n >= 1 else "",
        ])
    _write_csv(os.path.join(out, "run.csv"),
               ["n", "t", "norm_x", "lte", "running_mu"], steps)
    _write_json(os.path.join(out, "run_report.json"), {
        "method": args.method, "h": row.h, "n_steps": row.n_steps,
        "diverged": row.diverged, "mu_appr": row.mu, "argmax_t": row.argmax_t,
        "lte_mean": row.lte_mean, "lte_max": row.lte_max, "tau_max": row.tau_max,
        "denominator": args.denominator, "sum_start": args.sum_start,
        "lte_scale": args.lte_scale,
    })
    print(f"run: mu_appr={row.mu:+.6e} lte_mean={row.lte_mean:.6e} "
          f"lte_max={row.lte_max:.6e} tau_max={row.tau_max:.4f} "
          f"diverged={row.diverged} -> {out}/run.csv")
    return 0


def cmd_table1(args) -> int:
    rows = table1_rows(denominator=args.denominator, sum_start=args.sum_start)
    out = _ensure_out(args.out)
    body, fig = [], []
    for h, row in zip(TABLE1_H, rows):
        pub = TABLE1_PUBLISHED[h]
        body.append([_fmt(h), _fmt(row.lte_mean), _fmt(row.lte_max), _fmt(row.mu),
                     _fmt(pub[0]), _fmt(pub[1]), _fmt(pub[2]), int(row.diverged)])
        for n in range(len(row.lte)):
            fig.append([_fmt(h), n, _fmt(row.times[n]),
                        _fmt(_log10(row.lte[n])), _fmt(_log10(row.norms[n]))])
    _write_csv(os.path.join(out, "table1.csv"),
               ["h", "lte_mean", "lte_max", "mu", "pub_lte_mean", "pub_lte_max",
                "pub_mu", "diverged"], body)
    _write_csv(os.path.join(out, "figure1.csv"),
               ["h", "n", "t", "log10_lte", "log10_norm_x"], fig)
    for h, row in zip(TABLE1_H, rows):
        print(f"table1 h={h:g}: mu={row.mu:+.6e} (published {TABLE1_PUBLISHED[h][2]:+.3e}) "
              f"lte_mean={row.lte_mean:.3e} lte_max={row.lte_max:.3e}")
    return 0


def cmd_table2(args) -> int:
    out = _ensure_out(args.out)
    body, fig = [], []
    for b2_reading in ("as-printed", "corrected"):
        rows = table2_rows(b1_reading=args.b1_reading, b2_reading=b2_reading,
                           denominator=args.denominator, sum_start=args.sum_start)
        for a, row in zip(TABLE2_A, rows):
            pub = TABLE2_PUBLISHED[a]
            body.append([b2_reading, _fmt(a), _fmt(TABLE2_B1[args.b1_reading]),
                         _fmt(TABLE2_B2[b2_reading]), _fmt(row.lte_mean),
                         _fmt(row.lte_max), _fmt(row.mu), _fmt(row.mu_frame),
                         _fmt(row.tau_max), _fmt(pub[0]), _fmt(pub[1]),
                         _fmt(pub[2]), _fmt(pub[3])])
            if b2_reading == "as-printed":
                for n in range(len(row.lte)):
                    fig.append([_fmt(a), n, _fmt(row.times[n]),
                                _fmt(_log10(row.lte[n])), _fmt(_log10(row.norms[n]))])
            print(f"table2 b2={b2_reading} a={a}: mu={row.mu:+.6e} "
                  f"mu_frame={row.mu_frame:+.6e} (published {pub[2]:+.3e}) "
                  f"tau_max={row.tau_max:.4f} (published {pub[3]})")
    _write_csv(os.path.join(out, "table2.csv"),
               ["b2_reading", "a", "b1", "b2", "lte_mean", "lte_max", "mu",
                "mu_frame", "tau_max", "pub_lte_mean", "pub_lte_max", "pub_mu",
                "pub_tau_max"], body)
    _write_csv(os.path.join(out, "figure2.csv"),
               ["a", "n", "t", "log10_lte", "log10_norm_x"], fig)
    return 0


def cmd_counterexample(args) -> int:
    tab = glm.get_tableau(args.method)
    delta = glm.require_inside_gap(tab, args.D, args.L, args.h)
    sp = problems.ScalarCosineParams(D=args.D, L=args.L, omega=2.0 * math.pi / args.h)
    osc = problems.scalar_cosine_problem(sp)
    frozen = problems.constant_problem(args.D + args.L)
    x0s = glm.start_rk4(osc, (1.0,), 0.0, args.h, tab.k)
    t_osc = glm.run_linear(tab, osc, x0s, args.steps, args.h)
    t_frz = glm.run_linear(tab, frozen, x0s, args.steps, args.h)
    n_osc = np.abs(t_osc.last_blocks()[:, 0])
    exact = np.array([problems.scalar_cosine_reference(sp, t) for t in t_osc.times()])
    deviation = float(np.max(np.abs(t_osc.states - t_frz.states)))
    growth = float(n_osc[-1] / n_osc[0])
    m = t_osc.n_steps
    per_period = float(np.exp(np.log(growth) / m))  # coefficient period is h
    out = _ensure_out(args.out)
    body = []
    for n in range(m + 1):
        body.append([n, _fmt(t_osc.times()[n]), _fmt(t_osc.last_blocks()[n, 0]),
                     _fmt(t_frz.last_blocks()[n, 0]), _fmt(exact[n])])
    _write_csv(os.path.join(out, "counterexample.csv"),
               ["n", "t", "x_oscillatory", "x_frozen", "x_exact"], body)
    report = {
        "method": args.method, "h": args.h, "D": args.D, "L": args.L,
        "stability_gap": delta, "steps": m, "growth_factor": growth,
        "growth_per_period": per_period,
        "exact_decay_factor": float(exact[-1] / exact[0]),
        "max_oscillatory_frozen_deviation": deviation,
    }
    _write_json(os.path.join(out, "counterexample_report.json"), report)
    print(f"counterexample {args.method}: growth {growth:.3e} over {m} steps "
          f"(exact decays by {report['exact_decay_factor']:.3e}); "
          f"frozen-coefficient deviation {deviation:.3e}")
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load_config(args.config)
    if not cfg:
        cfg = dict(TABLE1_PROBLEM)
    params, t0, x0 = problems.rotating_config(cfg)
    if args.h is None or args.tfinal is None:
        raise ConfigError("spectrum needs --h and --tfinal")
    tab = glm.get_tableau(args.method)
    prob = problems.rotating_cosine_problem(params)
    n_f = int(round((args.tfinal - t0) / args.h))
    x0s = glm.start_rk4(prob, x0, t0, args.h, tab.k)
    traj, phis = glm.run_linear(tab, prob, x0s, n_f, args.h, t0,
                                keep_transitions=True)
    m = traj.n_steps
    if args.mode == "frame":
        trail = spectra.new_matrix_trail(tab.k * prob.d, args.h, t0)
        spectra.qr_advance_series(trail, phis)
    else:
        split = onestep.spectral_split(tab)
        w = onestep.extract_w(traj, split)
        trail = spectra.vector_trail_from_values(w.values, args.h, t0)
    n0 = m // 2
    est = spectra.mu_appr(trail, n0, m - n0, denominator=args.denominator)
    ends = spectra.lyapunov_endpoints(trail)
    H = args.H if args.H is not None else max(1.0, 10.0 * args.h)
    ss = spectra.sacker_sell_window(trail, H)
    bundle = {
        "mode": args.mode,
        "eta": [float(v) for v in ends.eta],
        "mu": [float(v) for v in ends.mu],
        "mu_appr": [float(v) for v in est.mu],
        "alpha": [float(v) for v in ss.alpha],
        "beta": [float(v) for v in ss.beta],
        "window": {"n0": n0, "n": m - n0, "H": H, "burn_in": ends.burn_in},
        "h": args.h,
        "denominator_mode": args.denominator,
        "diverged": traj.diverged,
    }
    if args.oracle_h is not None:
        oracle = spectra.continuous_qr_oracle(prob, args.tfinal, args.oracle_h, t0=t0)
        span = oracle.ts[-1] - oracle.ts[0]
        bundle["oracle_mean_rates"] = [
            float(v / span) for v in spectra.integrate_diag(oracle, oracle.ts[0],
                                                            oracle.ts[-1])]
    out = _ensure_out(args.out)
    _write_json(os.path.join(out, "spectrum.json"), bundle)
    print(f"spectrum ({args.mode}): mu={bundle['mu']} beta={bundle['beta']}")
    return 0


CONVERGE_H = {
    "bdf2": (2e-2, 1e-2, 5e-3),
    "ab2": (2e-2, 1e-2, 5e-3),
    "be": (1e-2, 5e-3, 2.5e-3),
}


def cmd_converge(args) -> int:
    tab = glm.get_tableau(args.method)
    params = problems.RotatingCosineParams(**TABLE1_PROBLEM)
    prob = problems.rotating_cosine_problem(params)
    hs = CONVERGE_H.get(args.method, (2e-2, 1e-2, 5e-3))
    t_final = args.tfinal if args.tfinal is not None else 2.0
    ge, le = [], []
    for h in hs:
        n = int(round(t_final / h))
        ref = lambda t: problems.reference_batch(params, np.atleast_1d(t))[0]
        x0s = glm.start_from_reference(ref, 0.0, h, tab.k)
        traj, phis = glm.run_linear(tab, prob, x0s, n, h, keep_transitions=True)
        m = traj.n_steps
        times = h * np.arange(m + tab.k)
        refs = problems.reference_batch(params, times)
        ge.append(float(np.linalg.norm(traj.last_blocks()[-1] - refs[m + tab.k - 1])))
        le.append(float(glm.lte_series(tab, phis, refs).max()))
    lh = np.log(np.asarray(hs))
    global_slope = float(np.polyfit(lh, np.log(ge), 1)[0])
    lte_slope = float(np.polyfit(lh, np.log(le), 1)[0])
    out = _ensure_out(args.out)
    _write_csv(os.path.join(out, "converge.csv"),
               ["h", "global_error", "lte_max"],
               [[_fmt(h), _fmt(g), _fmt(l)] for h, g, l in zip(hs, ge, le)])
    _write_json(os.path.join(out, "converge_report.json"), {
        "method": args.method, "h_list": list(hs), "t_final": t_final,
        "global_errors": ge, "lte_max": le,
        "global_slope": global_slope, "lte_slope": lte_slope,
    })
    print(f"converge {args.method}: global slope {global_slope:.3f}, "
          f"restart-defect slope {lte_slope:.3f}")
    return 0


# ---------------------------------------------------------------------------


def _add_common(p, with_method=True):
    if with_method:
        p.add_argument("--method", default="bdf2", help="tableau name (bdf2, ab2, be)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--denominator", choices=("t0", "N0"), default="t0",
                   help="time reference in the exponent denominator")
    p.add_argument("--sum-start", choices=("origin", "window"), default="origin",
                   help="where the exponent log-sum starts")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glmstab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="single integration + diagnostic report")
    _add_common(p)
    p.add_argument("--config", help="problem JSON (inline or a file path)")
    p.add_argument("--h", type=float)
    p.add_argument("--tfinal", type=float)
    p.add_argument("--start", choices=("rk4", "reference"), default="rk4")
    p.add_argument("--n0", type=int, default=None,
                   help="estimator window start (default: half the run)")
    p.add_argument("--lte-scale", choices=("per-h", "defect"), default="per-h")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("table1", help="step-size sweep experiment table")
    _add_common(p, with_method=False)
    p.set_defaults(fn=cmd_table1)

    p = sub.add_parser("table2", help="amplitude sweep experiment table")
    _add_common(p, with_method=False)
    p.add_argument("--b1-reading", choices=tuple(TABLE2_B1), default="as-printed")
    p.set_defaults(fn=cmd_table2)

    p = sub.add_parser("counterexample",
                       help="resonant scalar problem vs frozen coefficients")
    _add_common(p)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--D", type=float, default=0.3)
    p.add_argument("--L", type=float, default=-0.1)
    p.add_argument("--steps", type=int, default=200)
    p.set_defaults(fn=cmd_counterexample)

    p = sub.add_parser("spectrum", help="QR-trail exponent estimates as JSON")
    _add_common(p)
    p.add_argument("--config", help="problem JSON (inline or a file path)")
    p.add_argument("--h", type=float)
    p.add_argument("--tfinal", type=float)
    p.add_argument("--mode", choices=("frame", "w"), default="frame")
    p.add_argument("--H", type=float, default=None, help="window width for the "
                   "spectral-interval estimate (default max(1, 10h))")
    p.add_argument("--oracle-h", type=float, default=None,
                   help="also run the continuous-QR oracle at this fine step")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("converge", help="order-of-convergence study")
    _add_common(p)
    p.add_argument("--tfinal", type=float, default=None)
    p.set_defaults(fn=cmd_converge)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
