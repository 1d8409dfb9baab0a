"""Command-line entry point.

Subcommands:
  run <config>            integrate one scenario, emit trajectory CSV/JSON
  sweep <config>          steady-state map over (pulse width x delay)
  benchmark <config>      hierarchy vs brute-force time-bin oracle, with
                          sup-norm / L2 discrepancy report
  oracle-compare <config> oracle self-validation against closed forms
  enginebench <config>    compiled vs pure-python kernel timing comparison

Every computation is seedless and deterministic; `--threads` only fans out
independent sweep cells.  MIRRORQED_OUTDIR overrides output directories,
MIRRORQED_ENGINE=python forces the fallback kernels.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import grid as gridmod
from . import oracle, output
from .config import ConfigError, parse_config_file
from .engine import available_engines, engine_name, get_engine
from .experiments import run_scenario, sweep_steady_state
from .system import EXCITED_VACUUM

__all__ = ["main"]


def _load(path, mode):
    try:
        return parse_config_file(path, mode=mode)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _build_grid(cfg):
    tau = cfg.params.tau if cfg.model == "feedback" else 0.0
    return gridmod.build(cfg.dt, cfg.horizon, tau)


def _print_report(traj):
    rep = traj.report
    print(f"engine={traj.engine} source={traj.source} dt={traj.grid.dt:.9g} "
          f"steps={traj.grid.n_steps}")
    if rep:
        print(f"elements={rep['element_count']} memory={rep['memory_bytes'] / 1e6:.2f} MB "
              f"flops/step~{rep['flops_per_step']:.3g}")
        for fam in rep.get("families", []):
            print(f"  {fam['name']:12s} rank {fam['rank']} shape {fam['shape']} "
                  f"ring {fam['ring_depth']}")


def cmd_run(args):
    cfg = _load(args.config, "run")
    for w in cfg.warnings:
        print(f"warning: {w}")
    grid = _build_grid(cfg)
    eng = get_engine(args.engine)
    traj = run_scenario(cfg.params, cfg.pulse, grid, model=cfg.model, engine=eng,
                        fast_brackets=args.fast_brackets)
    _print_report(traj)
    path = output.emit(traj, cfg.out_path, cfg.out_format)
    ss = f" steady_state={traj.steady_state:.6g}" if traj.steady_state is not None else ""
    print(f"wrote {path}  P(T)={traj.population[-1]:.6g}{ss}")
    return 0


def cmd_sweep(args):
    cfg = _load(args.config, "sweep")
    eng = get_engine(args.engine)
    t0 = time.time()
    res = sweep_steady_state(cfg.sweep_family, cfg.sweep_widths, cfg.sweep_taus,
                             cfg.params, workers=args.threads, engine=eng)
    path = output.emit(res, cfg.out_path, cfg.out_format)
    n_bad = int(np.sum(~res.converged))
    print(f"wrote {path}  cells={res.steady_state.size} "
          f"unconverged={n_bad}  elapsed={time.time() - t0:.1f}s")
    return 0


def cmd_benchmark(args):
    """Same scenario through the hierarchy and the brute-force oracle."""
    cfg = _load(args.config, "benchmark")
    grid = _build_grid(cfg)
    eng = get_engine(args.engine)
    traj = run_scenario(cfg.params, cfg.pulse, grid, model=cfg.model, engine=eng,
                        fast_brackets=args.fast_brackets)
    mirror = cfg.model == "feedback"
    t_o, pop_o, _ = oracle.brute_force_timebin(cfg.params, cfg.pulse, cfg.oracle_bins,
                                               grid.horizon, mirror=mirror)
    # compare on the oracle's coarser time grid
    stride = (t_o[1] - t_o[0]) / grid.dt
    if abs(stride - round(stride)) > 1e-6:
        pop_h = np.interp(t_o, traj.times, traj.population)
    else:
        pop_h = traj.population[:: round(stride)][: t_o.size]
    diff = pop_h - pop_o
    sup = float(np.max(np.abs(diff)))
    l2 = float(np.sqrt(np.trapezoid(diff ** 2, t_o)))
    peak = float(np.max(traj.population))
    out = Path(cfg.out_path)
    path_h = output.emit(traj, str(out.with_name(out.stem + "_hierarchy" + out.suffix)),
                         cfg.out_format)
    otraj = traj.__class__(t_o, pop_o, cfg.params, cfg.pulse, grid, "oracle", cfg.model,
                           engine_name(eng), {})
    path_o = output.emit(otraj, str(out.with_name(out.stem + "_oracle" + out.suffix)),
                         cfg.out_format)
    print(f"wrote {path_h} and {path_o}")
    print(f"nBins={cfg.oracle_bins} sup-norm={sup:.6g} L2={l2:.6g} peak={peak:.6g} "
          f"sup/peak={sup / max(peak, 1e-300):.4f}")
    return 0


def cmd_oracle_compare(args):
    """Oracle self-checks: closed forms + bin-halving convergence."""
    cfg = _load(args.config, "oracle-compare")
    p = cfg.params
    report = {"nBins": cfg.oracle_bins}
    if p.initial_state == EXCITED_VACUUM:
        for label, nb in (("coarse", cfg.oracle_bins), ("fine", 2 * cfg.oracle_bins)):
            t_o, pop_o, _ = oracle.brute_force_timebin(p, None, nb, cfg.horizon, mirror=True)
            exact = np.array([abs(oracle.vacuum_feedback_exact(p.gamma, p.tau, p.phi, t)) ** 2
                              for t in t_o])
            report[f"sup_vs_exact_{label}"] = float(np.max(np.abs(pop_o - exact)))
        report["halving_gain"] = report["sup_vs_exact_coarse"] / report["sup_vs_exact_fine"]
        report["residue_limit"] = oracle.steady_state_residue(p.gamma, p.tau)
    else:
        for label, nb in (("coarse", cfg.oracle_bins), ("fine", 2 * cfg.oracle_bins)):
            t_o, pop_o, _ = oracle.brute_force_timebin(p, cfg.pulse, nb, cfg.horizon,
                                                       mirror=False)
            grid = gridmod.build(cfg.dt, cfg.horizon, 0.0)
            traj = run_scenario(p, cfg.pulse, grid, model="flat")
            pop_h = np.interp(t_o, traj.times, traj.population)
            report[f"sup_vs_flat_markov_{label}"] = float(np.max(np.abs(pop_o - pop_h)))
        report["halving_gain"] = (report["sup_vs_flat_markov_coarse"]
                                  / report["sup_vs_flat_markov_fine"])
    text = json.dumps(report, sort_keys=True, indent=2)
    out = Path(cfg.out_path).with_suffix(".json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + "\n")
    print(text)
    print(f"wrote {out}")
    return 0


def cmd_enginebench(args):
    """Run the configured scenario on every available engine and compare."""
    cfg = _load(args.config, "run")
    grid = _build_grid(cfg)
    results = {}
    for name in available_engines():
        eng = get_engine(name)
        t0 = time.time()
        traj = run_scenario(cfg.params, cfg.pulse, grid, model=cfg.model, engine=eng,
                            fast_brackets=args.fast_brackets)
        results[name] = (time.time() - t0, traj.population)
        print(f"{name:9s} {results[name][0]:8.3f} s")
    if len(results) == 2:
        pc, pp = results["compiled"][1], results["python"][1]
        dev = float(np.max(np.abs(pc - pp)))
        print(f"max |compiled - python| = {dev:.3e}")
        print(f"speedup x{results['python'][0] / max(results['compiled'][0], 1e-9):.2f}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="mirrorqed",
        description="Emitter population dynamics under coherent time-delayed feedback")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker processes for sweep cells (default 1)")
    ap.add_argument("--engine", default=None, choices=[None, "auto", "compiled", "python"],
                    help="kernel engine (default: auto)")
    ap.add_argument("--fast-brackets", action="store_true",
                    help="hoist the per-element feedback bracket (bit-identical result, "
                         "reduced cost; the default keeps the documented cost model)")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, fn in (("run", cmd_run), ("sweep", cmd_sweep), ("benchmark", cmd_benchmark),
                     ("oracle-compare", cmd_oracle_compare), ("enginebench", cmd_enginebench)):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.set_defaults(fn=fn)
    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
