"""Command-line front end: ``safebounds --config run.json [--mode M] [--threads N] [--out-dir D]``."""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import _accel
from .abstraction import build_imc, build_imdp, build_mc, kernel_lipschitz_bound, suggested_partition
from .barrier import PiecewiseBarrier, certify, load_barrier, synthesize
from .config import MODES, ConfigError, RunConfig, load_config
from .errors import SafeBoundsError
from .oracle import exact_dp
from .value_iteration import safety_over_initial, vi_fixed_policy, vi_mc, vi_synthesize

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt(v):
    return f"{v:.6g}"


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_bounds(path, grid, p_lower, p_upper, actions):
    """One row per safe cell; ``actions`` has shape (H, n_cells) or is None."""
    lower, upper = grid.cell_bounds()
    n = grid.dim
    H = 0 if actions is None else actions.shape[0]
    header = (
        ["state_index"]
        + [f"cell_lower_{d}" for d in range(n)]
        + [f"cell_upper_{d}" for d in range(n)]
        + ["P_s_lower", "P_s_upper"]
        + [f"action_k{k}" for k in range(H)]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(grid.n_cells):
            row = [i] + [repr(float(v)) for v in lower[i]] + [repr(float(v)) for v in upper[i]]
            row += [repr(float(p_lower[i])), repr(float(p_upper[i]))]
            if H:
                row += [int(a) for a in actions[:, i]]
            w.writerow(row)


def _write_policy(path, actions):
    H, n_cells = actions.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state_index"] + [f"action_k{k}" for k in range(H)])
        for i in range(n_cells):
            w.writerow([i] + [int(a) for a in actions[:, i]])


def _oracle_initial_safety(sol, X0):
    """Worst oracle safety over X0: mesh points inside it plus its endpoints."""
    x = sol.mesh[(sol.mesh >= X0.lower[0]) & (sol.mesh <= X0.upper[0])]
    x = np.concatenate([x, [X0.lower[0], X0.upper[0]]])
    return float(np.min(sol.safety(x)))


def execute(cfg):
    """Run ``cfg.mode``; write result files to ``cfg.out_dir`` and return (summary, stdout line)."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = lambda name: os.path.join(cfg.out_dir, name)  # noqa: E731
    t0 = time.perf_counter()
    H = cfg.horizon
    summary = {"mode": cfg.mode, "H": H, "P_lo": None, "P_hi": None, "dx": None}
    system = cfg.system

    if cfg.mode == "suggest-partition":
        L = cfg.lipschitz if cfg.lipschitz is not None else kernel_lipschitz_bound(system)
        n_p = suggested_partition(L, H, cfg.epsilon, cfg.safe_set.diameter, system.dim)
        summary.update(lipschitz=L, epsilon=cfg.epsilon, diameter=cfg.safe_set.diameter, n_partitions=n_p)
        line = str(n_p)

    elif cfg.mode == "oracle":
        sol = exact_dp(system, cfg.safe_set, H, cfg.mesh_size, mode=cfg.action)
        p = _oracle_initial_safety(sol, cfg.initial_set)
        sol.write_csv(out("oracle.csv"))
        summary.update(P_lo=p, P_hi=p, quadrature_error=sol.quadrature_error, mesh_size=cfg.mesh_size)
        line = f"P_s ∈ [{_fmt(p)}, {_fmt(p)}]"

    else:
        grid = cfg.grid
        summary["dx"] = grid.max_cell_width()
        summary["n_cells"] = grid.n_cells
        if cfg.mode == "imc-verify":
            imc = build_imc(system, grid, cfg.action, cfg.prune_threshold)
            vb = vi_fixed_policy(imc, H)
            acts = np.full((H, grid.n_cells), cfg.action, dtype=np.int64)
            p_lo, p_hi = safety_over_initial(vb, grid, cfg.initial_set)
            _write_bounds(out("bounds.csv"), grid, vb.safety_lower(), vb.safety_upper(), acts)
        elif cfg.mode == "imdp-synthesize":
            imdp = build_imdp(system, grid, cfg.prune_threshold)
            policy, vb = vi_synthesize(imdp, H)
            p_lo, p_hi = safety_over_initial(vb, grid, cfg.initial_set)
            _write_bounds(out("bounds.csv"), grid, vb.safety_lower(), vb.safety_upper(), policy.action_index)
            _write_policy(out("policy.csv"), policy.action_index)
        elif cfg.mode == "mc-baseline":
            mc = build_mc(system, grid, cfg.action)
            v = vi_mc(mc, H)
            cells = grid.cells_intersecting(cfg.initial_set)
            p_lo = p_hi = 1.0 - float(np.max(v[0, cells]))
            acts = np.full((H, grid.n_cells), cfg.action, dtype=np.int64)
            _write_bounds(out("bounds.csv"), grid, 1.0 - v[0, :-1], 1.0 - v[0, :-1], acts)
        if cfg.mode in ("imc-verify", "imdp-synthesize", "mc-baseline"):
            summary.update(P_lo=p_lo, P_hi=p_hi)
            line = f"P_s ∈ [{_fmt(p_lo)}, {_fmt(p_hi)}]"
        else:
            if cfg.mode == "barrier-certify":
                if cfg.barrier_file:
                    barrier = load_barrier(cfg.barrier_file)
                else:
                    barrier = PiecewiseBarrier.indicator(grid.n_cells)
                cert = certify(barrier, system, grid, cfg.initial_set, H, cfg.action,
                               prune_threshold=cfg.prune_threshold)
            else:
                barrier, cert = synthesize(system, grid, cfg.initial_set, H, cfg.action,
                                           prune_threshold=cfg.prune_threshold)
                summary["iterations"] = cert.synthesis_info["iterations"]
            cert.save(out("barrier.json"))
            summary.update(P_lo=cert.lower_bound, eta=cert.eta, beta=cert.beta,
                           lower_bound=cert.lower_bound, valid=cert.valid)
            line = f"barrier bound = {_fmt(cert.lower_bound)}"

    summary["runtime_ms"] = round(1000.0 * (time.perf_counter() - t0), 3)
    _write_json(out("summary.json"), summary)
    return summary, line


def run(config, mode=None, threads=None, out_dir=None, base_dir=None):
    """Validate and execute a config dict; returns the process exit status."""
    config = dict(config)
    if mode is not None:
        config["mode"] = mode
    if threads is not None:
        config["threads"] = threads
    if out_dir is not None:
        config["out_dir"] = out_dir
    try:
        cfg = RunConfig.from_dict(config, base_dir=base_dir)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    _accel.set_threads(cfg.threads)
    try:
        _, line = execute(cfg)
    except SafeBoundsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(line)
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="safebounds",
        description="Certified bounds on probabilistic safety of stochastic systems.",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("--mode", choices=MODES, help="override the mode set in the config")
    parser.add_argument("--threads", type=int, help="thread-count hint for the compute kernels")
    parser.add_argument("--out-dir", help="directory for result files (default: config's out_dir or .)")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    base_dir = os.path.dirname(os.path.abspath(args.config))
    return run(config, args.mode, args.threads, args.out_dir, base_dir)


if __name__ == "__main__":
    sys.exit(main())
