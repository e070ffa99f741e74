"""Run configuration: JSON loading and validation with field-level diagnostics."""

import json
import os
from dataclasses import dataclass

import numpy as np

from .geometry import HyperRect, UniformGrid
from .kernel import AffineGaussianSystem

MODES = (
    "imc-verify",
    "imdp-synthesize",
    "mc-baseline",
    "barrier-certify",
    "barrier-synthesize",
    "oracle",
    "suggest-partition",
)
GRID_MODES = {"imc-verify", "imdp-synthesize", "mc-baseline", "barrier-certify", "barrier-synthesize"}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


def _matrix(v):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        return None
    return a


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _box_diags(d, name, n, diags):
    if not isinstance(d, dict) or "lower" not in d or "upper" not in d:
        diags.append(f"{name}: must be an object with 'lower' and 'upper'")
        return None
    lo, hi = _matrix(d["lower"]), _matrix(d["upper"])
    if lo is None or hi is None or lo.ndim != 1 or hi.shape != lo.shape:
        diags.append(f"{name}: lower and upper must be numeric vectors of equal length")
        return None
    if n is not None and lo.size != n:
        diags.append(f"{name}: expected {n} entries, got {lo.size}")
        return None
    if np.any(lo > hi):
        diags.append(f"{name}: lower must not exceed upper")
        return None
    return HyperRect(lo, hi)


def _barrier_diags(path, counts, diags):
    try:
        with open(path) as fh:
            data = json.load(fh)
        values = data["barrier"] if isinstance(data, dict) else data
        n = len(values)
    except (OSError, ValueError, KeyError, TypeError):
        diags.append(f"barrier_file: {path} does not hold a barrier list")
        return
    if isinstance(counts, list) and all(_is_int(k) and k > 0 for k in counts):
        expect = int(np.prod(counts)) + 1
        if n != expect:
            diags.append(f"barrier_file: expected {expect} values (cells then unsafe), got {n}")


def validate(config):
    """Return every schema or consistency problem in ``config`` (empty when valid)."""
    diags = []
    if not isinstance(config, dict):
        return ["config: must be a JSON object"]

    mode = config.get("mode")
    if mode not in MODES:
        diags.append(f"mode: must be one of {', '.join(MODES)}")

    n = m = None
    dyn = config.get("dynamics")
    if not isinstance(dyn, dict):
        diags.append("dynamics: missing or not an object")
    else:
        A = _matrix(dyn.get("A"))
        if A is None or A.ndim != 2 or A.shape[0] != A.shape[1] or A.size == 0:
            diags.append("dynamics.A: must be a non-empty square matrix")
        else:
            n = A.shape[0]
        if n is not None:
            B = _matrix(dyn.get("B", [[0.0]] * n))
            if B is None or (B.size and (B.ndim != 2 or B.shape[0] != n)):
                diags.append(f"dynamics.B: must be a matrix with {n} rows")
            else:
                m = B.shape[1] if B.size else 0
            c = _matrix(dyn.get("c", [0.0] * n))
            if c is None or c.shape != (n,):
                diags.append(f"dynamics.c: must be a vector of length {n}")
            sigma = _matrix(dyn.get("sigma"))
            if sigma is None or sigma.shape != (n,):
                diags.append(f"dynamics.sigma: must be a vector of length {n}")
            elif not np.all(sigma > 0):
                diags.append("dynamics.sigma: sigma must be strictly positive")

    actions = config.get("actions")
    if actions is not None and m is not None:
        if not isinstance(actions, list) or len(actions) == 0:
            diags.append("actions: must be a non-empty list of input vectors")
        else:
            for k, u in enumerate(actions):
                a = _matrix(u)
                if a is None or a.ndim != 1 or a.size != m:
                    diags.append(f"actions[{k}]: must be a vector of length {m}")
    n_actions = len(actions) if isinstance(actions, list) and actions else 1

    safe = _box_diags(config.get("safe_set"), "safe_set", n, diags)
    if safe is not None and np.any(safe.widths <= 0):
        diags.append("safe_set: every axis must have positive width")
        safe = None

    if mode != "suggest-partition" or "initial_set" in config:
        init = _box_diags(config.get("initial_set"), "initial_set", n, diags)
        if init is not None and safe is not None and not safe.contains_box(init):
            diags.append("initial_set: must lie inside safe_set")

    H = config.get("horizon")
    if not _is_int(H) or H < 0:
        diags.append("horizon: must be a nonnegative integer")

    if mode in GRID_MODES:
        counts = config.get("counts")
        if not isinstance(counts, list) or not all(_is_int(k) and k > 0 for k in counts):
            diags.append("counts: must be a list of positive integers")
        elif n is not None and len(counts) != n:
            diags.append(f"counts: expected {n} entries, got {len(counts)}")

    action = config.get("action", 0)
    if not _is_int(action) or not 0 <= action < n_actions:
        diags.append(f"action: must be an integer in [0, {n_actions})")

    bf = config.get("barrier_file")
    if bf is not None and not (isinstance(bf, str) and os.path.isfile(bf)):
        diags.append(f"barrier_file: file not found: {bf}")
    elif bf is not None and mode == "barrier-certify":
        _barrier_diags(bf, config.get("counts"), diags)

    if mode == "suggest-partition":
        eps = config.get("epsilon")
        if not isinstance(eps, (int, float)) or isinstance(eps, bool) or eps <= 0:
            diags.append("epsilon: must be a positive number for suggest-partition")
        L = config.get("lipschitz")
        if L is not None and (not isinstance(L, (int, float)) or L < 0):
            diags.append("lipschitz: must be a nonnegative number")

    if mode == "oracle":
        if n is not None and n != 1:
            diags.append("dynamics.A: the oracle mode supports 1-D systems only")
        ms = config.get("mesh_size", 4001)
        if not _is_int(ms) or ms < 100:
            diags.append("mesh_size: must be an integer >= 100")

    pt = config.get("prune_threshold", 1e-12)
    if not isinstance(pt, (int, float)) or pt < 0 or pt >= 1:
        diags.append("prune_threshold: must be a number in [0, 1)")

    th = config.get("threads", 1)
    if not _is_int(th) or th < 1:
        diags.append("threads: must be a positive integer")
    return diags


@dataclass
class RunConfig:
    system: AffineGaussianSystem
    safe_set: HyperRect
    initial_set: HyperRect
    horizon: int
    counts: list
    mode: str
    action: int = 0
    barrier_file: str = None
    epsilon: float = None
    lipschitz: float = None
    mesh_size: int = 4001
    prune_threshold: float = 1e-12
    threads: int = 1
    out_dir: str = "."

    @property
    def grid(self):
        return UniformGrid(self.safe_set, self.counts)

    @classmethod
    def from_dict(cls, d, base_dir=None):
        d = dict(d)
        bf = d.get("barrier_file")
        if bf is not None and base_dir and not os.path.isabs(bf):
            d["barrier_file"] = os.path.join(base_dir, bf)
        diags = validate(d)
        if diags:
            raise ConfigError(diags)
        system = AffineGaussianSystem.from_config(d["dynamics"], d.get("actions"))
        init = d.get("initial_set")
        return cls(
            system=system,
            safe_set=HyperRect.from_dict(d["safe_set"]),
            initial_set=HyperRect.from_dict(init) if init else None,
            horizon=d["horizon"],
            counts=d.get("counts"),
            mode=d["mode"],
            action=d.get("action", 0),
            barrier_file=d.get("barrier_file"),
            epsilon=d.get("epsilon"),
            lipschitz=d.get("lipschitz"),
            mesh_size=d.get("mesh_size", 4001),
            prune_threshold=d.get("prune_threshold", 1e-12),
            threads=d.get("threads", 1),
            out_dir=d.get("out_dir", "."),
        )


def load_config(path):
    """Read a JSON config file; raises :class:`ConfigError` on unreadable input."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
