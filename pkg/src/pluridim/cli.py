"""Command-line experiment runner.

Every subcommand reads one JSON config, validates it against ``CONFIG_SCHEMA``,
applies ``PLURIDIM_*`` environment overrides and the ``--seed`` flag, then
writes ``report.json`` (plus CSV/SVG artifacts) into the output directory.

Exit codes: 0 success, 1 a verification failed, 2 invalid config or map,
3 numerical failure inside a computation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from . import __version__
from .dimension import conjecture2_formula, estimate_dimension, mane_formula, theorem_bound
from .endomorphism import check_regularity, from_spec, to_spec
from .greens import EscapeParams, escape_radius, escape_rate, green_grid
from .lyapunov import check_bounds, estimate_exponents
from .output import complex_columns, dumps, interleave, write_csv, write_points_csv, write_svg
from .sampler import backward_orbit, sample_measure
from .verifier import (
    Lemma1Config, covering_statistics, verify_inverse_branch, verify_preimage_scaling,
)

ENV_PREFIX = "PLURIDIM_"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SIGMA = 3.0

_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_opt_num = {"type": ["number", "null"]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["map"],
    "properties": {
        "map": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variant", "coefficients"],
            "properties": {
                "variant": {"enum": ["one_d", "product", "skew2d", "dense"]},
                "degree": {"type": "integer"},
                "coefficients": {"type": ["array", "object"]},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "n_points": {"type": "integer", "minimum": 1},
        "burn_in": {"type": "integer", "minimum": 0},
        "cocycle_length": {"type": "integer", "minimum": 1},
        "transient": {"type": "integer", "minimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 3},
        "out": {"type": "string"},
        "svg": {"type": "boolean"},
        "dimension": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "r_lo": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "r_hi": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "n_scales": {"type": "integer", "minimum": 2},
                "k": {"type": "integer", "minimum": 4},
            },
        },
        "green": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "re_range": {"oneOf": [_pair, {"type": "null"}]},
                "im_range": {"oneOf": [_pair, {"type": "null"}]},
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 1},
                          "minItems": 2, "maxItems": 2},
                "base": {"type": ["array", "null"], "items": _pair},
                "max_iter": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "lemma1": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "n_trials": {"type": "integer", "minimum": 1},
                "eps": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 3},
                "omega_radius": _opt_num,
                "c_n": _opt_num,
                "n_test_points": {"type": "integer", "minimum": 2},
            },
        },
        "lemma2": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "m": {"type": "integer", "minimum": 1},
                "r": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "covering": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "m_min": {"type": "integer", "minimum": 1, "maximum": 12},
                "m_max": {"type": "integer", "minimum": 1, "maximum": 12},
                "r0": {"type": "number", "exclusiveMinimum": 0},
                "kappa0": {"type": "number", "minimum": 1},
            },
        },
    },
}


@dataclass
class DimensionSettings:
    r_lo: float | None = None
    r_hi: float | None = None
    n_scales: int = 12
    k: int = 10


@dataclass
class GreenSettings:
    re_range: list | None = None      # default [-R, R]
    im_range: list | None = None
    shape: list = field(default_factory=lambda: [200, 200])
    base: list | None = None          # [re, im] per coordinate; first is overwritten by the grid
    max_iter: int = 1000
    tol: float = 1e-9


@dataclass
class Lemma1Settings:
    n_trials: int = 20
    eps: float | None = None          # falls back to the top-level eps
    omega_radius: float | None = None
    c_n: float | None = None
    n_test_points: int = 10_000


@dataclass
class Lemma2Settings:
    m: int = 6
    r: float = 0.05


@dataclass
class CoveringSettings:
    m_min: int = 1
    m_max: int = 8
    r0: float = 0.5
    kappa0: float = 1.0


@dataclass
class ExperimentConfig:
    map: dict
    seed: int = 0
    n_points: int = 5000
    burn_in: int = 40
    cocycle_length: int = 50
    transient: int = 40
    eps: float = 0.1
    out: str = "out"
    svg: bool = False
    dimension: DimensionSettings = field(default_factory=DimensionSettings)
    green: GreenSettings = field(default_factory=GreenSettings)
    lemma1: Lemma1Settings = field(default_factory=Lemma1Settings)
    lemma2: Lemma2Settings = field(default_factory=Lemma2Settings)
    covering: CoveringSettings = field(default_factory=CoveringSettings)

    @classmethod
    def from_dict(cls, raw):
        jsonschema.validate(raw, CONFIG_SCHEMA)
        kw = {k: v for k, v in raw.items() if k not in SECTIONS}
        kw.update({k: SECTIONS[k](**raw[k]) for k in SECTIONS if k in raw})
        return cls(**kw)

    def to_dict(self):
        """Settings that determine results; the output directory is excluded."""
        d = asdict(self)
        d.pop("out")
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


SECTIONS = {"dimension": DimensionSettings, "green": GreenSettings, "lemma1": Lemma1Settings,
            "lemma2": Lemma2Settings, "covering": CoveringSettings}


class ConfigError(ValueError):
    pass


def _parse_env_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_env_overrides(raw, environ=None):
    """``PLURIDIM_A__B=v`` sets raw["a"]["b"] = v (v parsed as JSON when possible)."""
    environ = os.environ if environ is None else environ
    out = json.loads(json.dumps(raw))
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX) or key == ENV_PREFIX + "WORKERS":
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"environment override {key} targets a non-section")
        node[path[-1]] = _parse_env_value(environ[key])
    return out


def load_config(path, seed=None, out=None, svg=None, environ=None):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = apply_env_overrides(raw, environ)
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out"] = out
    if svg:
        raw["svg"] = True
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {loc}: {exc.message}") from exc
    cfg.lemma1.eps = cfg.eps if cfg.lemma1.eps is None else cfg.lemma1.eps
    if cfg.covering.m_max <= cfg.covering.m_min:
        raise ConfigError("covering.m_max must exceed covering.m_min")
    return cfg


# --- pipeline stages -----------------------------------------------------------

class Run:
    """Shared state for one invocation: the map, config, artifacts and cached stages."""

    def __init__(self, F, cfg, workers):
        self.F, self.cfg, self.workers = F, cfg, workers
        self.artifacts = []
        self._sample = None
        self._lyap = None

    def path(self, name):
        self.artifacts.append(name)
        return os.path.join(self.cfg.out, name)

    def sample(self):
        if self._sample is None:
            c = self.cfg
            self._sample = sample_measure(self.F, c.n_points, burn_in=c.burn_in, seed=c.seed,
                                          workers=self.workers)
        return self._sample

    def lyapunov(self):
        if self._lyap is None:
            c = self.cfg
            self._lyap = estimate_exponents(self.F, self.sample(), cocycle_length=c.cocycle_length,
                                            seed=c.seed, workers=self.workers,
                                            transient=c.transient)
        return self._lyap


def cmd_green(run):
    F, g = run.F, run.cfg.green
    R = escape_radius(F)
    re_range = g.re_range or [-R, R]
    im_range = g.im_range or [-R, R]
    base = None if g.base is None else [complex(a, b) for a, b in g.base]
    if base is not None and len(base) != F.n:
        raise ConfigError("green.base needs one [re, im] pair per coordinate")
    params = EscapeParams.for_map(F, max_iter=g.max_iter, tol=g.tol)
    pts, vals = green_grid(F, re_range, im_range, tuple(g.shape), base=base, params=params)
    write_csv(run.path("green.csv"), complex_columns(F.n) + ["G"],
              np.column_stack([interleave(pts), vals]))
    return {"escape_radius": R, "grid_shape": list(g.shape), "re_range": list(re_range),
            "im_range": list(im_range), "n_points": int(vals.size)}, True


def _sample_outputs(run):
    S = run.sample()
    write_points_csv(run.path("points.csv"), S.points)
    R = escape_radius(run.F)
    if run.cfg.svg:
        write_svg(run.path("points.svg"), S.points[:, 0], R)
    return S, R


def cmd_sample(run):
    S, R = _sample_outputs(run)
    G = escape_rate(run.F, S.points)
    return {"n_points": len(S), "burn_in": S.burn_in, "map_id": S.map_id,
            "base_point": [[z.real, z.imag] for z in S.base_point],
            "escape_radius": R, "max_escape_rate": float(G.max())}, True


def _lyapunov_record(run):
    est = run.lyapunov()
    bounds = check_bounds(est, run.F.d, run.F.n)
    rec = est.to_dict()
    rec["bounds"] = bounds
    return rec, all(b["pass"] for b in bounds.values())


def cmd_lyapunov(run):
    return _lyapunov_record(run)


def _dimension_record(run):
    F, c = run.F, run.cfg.dimension
    est = run.lyapunov()
    rep = estimate_dimension(run.sample().points, r_lo=c.r_lo, r_hi=c.r_hi,
                             n_scales=c.n_scales, k=c.k, seed=run.cfg.seed)
    exps = [est.lambda_max] if F.n == 1 else [est.lambda_min, est.lambda_max]
    bound = theorem_bound(F.d, est.lambda_max, F.n)
    rec = rep.to_dict()
    rec["label"] = "correlation/local dimension"
    rec["mane"] = mane_formula(F.d, est.lambda_max) if F.n == 1 else None
    rec["conjecture2"] = conjecture2_formula(F.d, exps)
    rec["theorem_bound"] = bound
    checks = {
        "correlation_le_bound": rep.correlation_dim <= bound + SIGMA * rep.correlation_stderr,
        "knn_le_bound": rep.knn_dim <= bound + SIGMA * rep.knn_stderr,
    }
    rec["checks"] = checks
    rec["pass"] = all(checks.values())
    return rec, rec["pass"]


def cmd_dimension(run):
    return _dimension_record(run)


def cmd_run(run):
    sample_rec, _ = cmd_sample(run)
    lyap_rec, lyap_ok = _lyapunov_record(run)
    dim_rec, dim_ok = _dimension_record(run)
    return {"sample": sample_rec, "lyapunov": lyap_rec, "dimension": dim_rec,
            "pass": lyap_ok and dim_ok}, True


def cmd_verify_lemma1(run):
    F, c = run.F, run.cfg.lemma1
    cfg = Lemma1Config.for_map(F, c.eps, omega_radius=c.omega_radius, c_n=c.c_n,
                               n_test_points=c.n_test_points)
    pts = sample_measure(F, c.n_trials, burn_in=run.cfg.burn_in, seed=run.cfg.seed).points
    trials = [verify_inverse_branch(F, x, cfg, seed=i).to_dict() for i, x in enumerate(pts)]
    ok = all(t["pass"] for t in trials)
    return {"pass": ok, "n_trials": len(trials), "n_passed": sum(t["pass"] for t in trials),
            "trials": trials}, ok


def cmd_verify_lemma2(run):
    c = run.cfg
    window = backward_orbit(run.F, c.lemma2.m, seed=c.seed, burn_in=c.burn_in)
    rep = verify_preimage_scaling(run.F, window, c.lemma2.r, c.eps, run.lyapunov(), seed=c.seed)
    return rep.to_dict(), rep.passed


def cmd_verify_covering(run):
    c = run.cfg
    rep = covering_statistics(run.F, run.sample(), range(c.covering.m_min, c.covering.m_max + 1),
                              c.covering.r0, c.eps, run.lyapunov(), kappa0=c.covering.kappa0,
                              seed=c.seed, workers=run.workers)
    return rep.to_dict(), rep.passed


COMMANDS = {
    "green": (cmd_green, "escape-rate function on a grid (CSV)"),
    "sample": (cmd_sample, "sample the maximal-entropy measure (CSV, optional SVG)"),
    "lyapunov": (cmd_lyapunov, "Lyapunov exponents and lower-bound checks"),
    "dimension": (cmd_dimension, "dimension estimates against the closed forms"),
    "verify-lemma1": (cmd_verify_lemma1, "one-step inverse-branch estimates"),
    "verify-lemma2": (cmd_verify_lemma2, "radius and volume scaling along a backward window"),
    "verify-covering": (cmd_verify_covering, "mesh-cube covering growth"),
    "run": (cmd_run, "full pipeline: sample, lyapunov, dimension, bounds"),
}
VERIFY = {"verify-lemma1", "verify-lemma2", "verify-covering"}


def build_parser():
    p = argparse.ArgumentParser(prog="pluridim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--workers", type=int, default=None,
                       help="thread count (default: available CPUs); never changes results")
        s.add_argument("--out", default=None, metavar="DIR", help="output directory")
        s.add_argument("--svg", action="store_true", help="also write an SVG scatter")
    return p


def _workers(flag):
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(ENV_PREFIX + "WORKERS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _report(command, cfg, F):
    spec = cfg.to_dict()
    return {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": spec,
        "config_hash": cfg.digest(),
        "map_id": F.map_id if F is not None else None,
        "map": to_spec(F) if F is not None else None,
    }


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out, svg=args.svg)
        F = from_spec(cfg.map)
        regularity = check_regularity(F)
        if not regularity.regular:
            raise ConfigError("map is not regular: leading homogeneous part has a common zero")
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"pluridim: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(cfg.out, exist_ok=True)
    run = Run(F, cfg, _workers(args.workers))
    report = _report(args.command, cfg, F)
    report["regularity"] = {"regular": regularity.regular, "sampled": regularity.sampled,
                            "leading_min": regularity.leading_min}
    fn = COMMANDS[args.command][0]
    try:
        results, ok = fn(run)
    except ConfigError as exc:
        print(f"pluridim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, ValueError, NotImplementedError) as exc:
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "module": type(exc).__module__,
                           "message": str(exc)}
        code = EXIT_NUMERIC
    else:
        report["results"] = results
        report["status"] = "pass" if ok else "fail"
        code = EXIT_FAIL if (args.command in VERIFY and not ok) else EXIT_OK
    report["artifacts"] = sorted(set(run.artifacts))
    with open(os.path.join(cfg.out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps(report))
    print(os.path.join(cfg.out, "report.json"))
    return code


if __name__ == "__main__":
    sys.exit(main())
