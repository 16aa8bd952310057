"""Command line entry point: regret experiments, lemma checks, standalone tree aggregation.

Settings come from built-in defaults, then ``--config FILE``, then explicit
flags.  ``--config`` accepts a TOML file with the same keys as the flags
(dashes become underscores), a ``summary.json`` written by an earlier run, or
a trace CSV from an earlier run; the last two carry the full configuration
that produced them.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import shutil
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .adversaries import KINDS, Adversary
from .harness import ALGORITHMS, UndefinedSlope, fit_regret_slope, resolve_params, run_experiment
from .lemmas import verify_lemma_suite
from .tree import NoisyPrefixSumTree

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("dpsubmod")

MODES = ALGORITHMS + ("tbap-standalone", "verify-lemmas")
NON_PRIVATE_BANNER = "NON-PRIVATE RUN: epsilon = inf, no noise was added; results carry no privacy guarantee"


class ConfigError(ValueError):
    pass


def parse_epsilon(value: Any) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return math.inf
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"epsilon must be a positive number or 'inf', got {value!r}") from None
    value = float(value)
    if not value > 0:
        raise ConfigError(f"epsilon must be > 0 (use 'inf' for the non-private baseline), got {value}")
    return value


def _int_list(value: Any) -> list[int]:
    if isinstance(value, str):
        value = [v for v in value.replace(" ", "").split(",") if v]
    return [int(v) for v in value]


def _float_list(value: Any) -> list[float]:
    if isinstance(value, str):
        value = [v for v in value.replace(" ", "").split(",") if v]
    return [float(v) for v in value]


@dataclass
class ExperimentConfig:
    algorithm: str = "full-info"
    n: int = 4
    horizons: list[int] = field(default_factory=lambda: [1024])
    M: float = 1.0
    epsilon: float = 1.0
    trials: int = 20
    seed: int = 0
    H: float | None = None
    L: float | None = None
    gamma: float | None = None
    h_scale: float = 1.0
    gamma_scale: float = 1.0
    x1: list[float] | None = None
    s1: list[int] | None = None
    adversary: str = "stochastic-fixed-optimum"
    adversary_seed: int | None = None
    adversary_params: dict[str, Any] = field(default_factory=dict)
    out: str = "dpsubmod-out"
    # tbap-standalone
    dim: int | None = None
    rounds: int | None = None
    norm_bound: float = 1.0
    no_noise: bool = False
    input: str | None = None
    output: str | None = None
    # verify-lemmas
    instances: int = 1000
    orthogonality_runs: int = 100_000

    def validate(self) -> "ExperimentConfig":
        if self.algorithm not in MODES:
            raise ConfigError(f"algorithm must be one of {', '.join(MODES)}, got {self.algorithm!r}")
        self.epsilon = parse_epsilon(self.epsilon)
        self.horizons = _int_list(self.horizons)
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.horizons or any(T < 1 for T in self.horizons):
            raise ConfigError(f"horizons must be positive integers, got {self.horizons}")
        if sorted(set(self.horizons)) != self.horizons:
            raise ConfigError(f"horizons must be strictly increasing, got {self.horizons}")
        if not self.M > 0:
            raise ConfigError(f"M must be > 0, got {self.M}")
        if self.adversary not in KINDS:
            raise ConfigError(f"adversary must be one of {', '.join(KINDS)}, got {self.adversary!r}")
        if self.x1 is not None:
            self.x1 = _float_list(self.x1)
            if len(self.x1) != self.n or not all(0 <= v <= 1 for v in self.x1):
                raise ConfigError(f"x1 must have n={self.n} coordinates in [0, 1]")
        if self.s1 is not None:
            self.s1 = _int_list(self.s1)
            if not all(0 <= i < self.n for i in self.s1):
                raise ConfigError(f"s1 elements must lie in 0..{self.n - 1}")
        if self.gamma is not None and not 0 < self.gamma <= 1:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.H is not None and not self.H > 0:
            raise ConfigError(f"H must be > 0, got {self.H}")
        if self.norm_bound <= 0:
            raise ConfigError(f"norm bound must be > 0, got {self.norm_bound}")
        return self

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["epsilon"] = "inf" if math.isinf(self.epsilon) else self.epsilon
        return d

    def overrides(self) -> dict[str, Any]:
        o: dict[str, Any] = {"h_scale": self.h_scale, "gamma_scale": self.gamma_scale}
        for key in ("H", "L", "gamma"):
            if getattr(self, key) is not None:
                o[key] = getattr(self, key)
        if self.x1 is not None:
            o["x1"] = np.array(self.x1)
        if self.s1 is not None:
            o["s1"] = sum(1 << i for i in self.s1)
        return o

    def build_adversary(self) -> Adversary:
        seed = self.seed if self.adversary_seed is None else self.adversary_seed
        return Adversary(self.adversary, self.n, self.M, seed, dict(self.adversary_params))


CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        data = data.get("config", data)
    elif path.suffix == ".csv":
        data = None
        for line in path.read_text().splitlines():
            if line.startswith("# metadata: "):
                data = json.loads(line[len("# metadata: "):]).get("config")
                break
        if data is None:
            raise ConfigError(f"{path} carries no configuration header")
    else:
        try:
            data = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return json.dumps(str(v))


def dump_toml(config: dict[str, Any]) -> str:
    """Flat TOML with one level of tables; ``None`` values are omitted."""
    lines, tables = [], []
    for k, v in config.items():
        if v is None:
            continue
        if isinstance(v, dict):
            tables.append((k, v))
        else:
            lines.append(f"{k} = {_toml_value(v)}")
    for name, table in tables:
        lines.append(f"\n[{name}]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in table.items() if v is not None)
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpsubmod", description=__doc__.split("\n")[0],
                                argument_default=argparse.SUPPRESS)
    p.add_argument("--version", action="version", version=f"dpsubmod {__version__}")
    p.add_argument("--config", help="TOML config, earlier summary.json, or earlier trace CSV")
    p.add_argument("--algorithm", choices=MODES)
    p.add_argument("--n", type=int, help="ground set size")
    p.add_argument("--T", dest="horizons", type=lambda s: [int(s)], help="single horizon")
    p.add_argument("--horizons", type=_int_list, help="comma-separated horizons, e.g. 256,1024,4096")
    p.add_argument("--M", type=float, help="range bound of the functions")
    p.add_argument("--epsilon", help="privacy parameter, or 'inf' for the non-private baseline")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--H", type=float, help="override the regularization parameter")
    p.add_argument("--L", type=float, help="override the Lipschitz constant")
    p.add_argument("--gamma", type=float, help="override the bandit exploration rate")
    p.add_argument("--h-scale", dest="h_scale", type=float, help="constant in front of the default H")
    p.add_argument("--gamma-scale", dest="gamma_scale", type=float,
                   help="constant in front of the default gamma")
    p.add_argument("--x1", type=_float_list, help="bandit initial iterate, comma-separated")
    p.add_argument("--s1", type=_int_list, help="full-information initial set, comma-separated elements")
    p.add_argument("--adversary", choices=KINDS)
    p.add_argument("--adversary-seed", dest="adversary_seed", type=int)
    p.add_argument("--adversary-param", dest="adversary_param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", help="output directory for experiments")
    p.add_argument("--force", action="store_true", help="replace an existing output directory")
    p.add_argument("--dim", type=int, help="vector dimension (tbap-standalone)")
    p.add_argument("--rounds", type=int, help="stream length (tbap-standalone)")
    p.add_argument("--norm-bound", dest="norm_bound", type=float, help="L2 bound per item (tbap-standalone)")
    p.add_argument("--no-noise", dest="no_noise", action="store_true",
                   help="disable noise (tbap-standalone, NON-PRIVATE)")
    p.add_argument("--input", help="newline-delimited vectors (tbap-standalone; default stdin)")
    p.add_argument("--output", help="where to write prefix sums (tbap-standalone; default stdout)")
    p.add_argument("--instances", type=int, help="random instances per exact lemma check")
    p.add_argument("--orthogonality-runs", dest="orthogonality_runs", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_param(item: str) -> tuple[str, Any]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"adversary parameter must look like KEY=VALUE, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def resolve_config(argv: list[str] | None = None) -> tuple[ExperimentConfig, argparse.Namespace]:
    ns = build_parser().parse_args(argv)
    merged: dict[str, Any] = {}
    if hasattr(ns, "config"):
        merged.update(load_config_file(ns.config))
    flags = {k: v for k, v in vars(ns).items() if k in CONFIG_KEYS}
    merged.update(flags)
    params = dict(merged.get("adversary_params") or {})
    for item in getattr(ns, "adversary_param", None) or []:
        k, v = _parse_param(item)
        params[k] = v
    merged["adversary_params"] = params
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate(), ns


def run_regret(cfg: ExperimentConfig, out_dir: Path) -> dict[str, Any]:
    adversary = cfg.build_adversary()
    overrides = cfg.overrides()
    (out_dir / "traces").mkdir(parents=True)
    rows = []
    for T in cfg.horizons:
        params = resolve_params(cfg.algorithm, cfg.n, T, cfg.M, cfg.epsilon, overrides)
        traces = run_experiment(adversary, cfg.algorithm, T, epsilon=cfg.epsilon,
                                trials=cfg.trials, seed=cfg.seed, overrides=overrides)
        finals = [tr.final_regret for tr in traces]
        row = {"T": T, "params": params.as_dict(), "mean_regret": float(np.mean(finals)),
               "mean_regret_per_round": float(np.mean(finals)) / T, "final_regrets": finals}
        if cfg.algorithm == "bandit":
            row["oracle_queries"] = [tr.metadata["oracle_queries"] for tr in traces]
        rows.append(row)
        for tr in traces:
            tr.metadata["config"] = cfg.echo()
            tr.to_csv(out_dir / "traces" / f"T{T}_trial{tr.metadata['trial']:03d}.csv")
        log.info("T=%d mean regret %.4g", T, row["mean_regret"])
    summary: dict[str, Any] = {
        "library_version": __version__,
        "config": cfg.echo(),
        "adversary": adversary.describe(),
        "horizons": rows,
    }
    if math.isinf(cfg.epsilon):
        summary["banner"] = NON_PRIVATE_BANNER
    if len(rows) >= 2:
        try:
            summary["slope"] = fit_regret_slope([r["T"] for r in rows], [r["mean_regret"] for r in rows])
        except UndefinedSlope as exc:
            summary["slope"] = None
            summary["slope_note"] = f"undefined: {exc}"
    return summary


def run_tbap(cfg: ExperimentConfig) -> None:
    text = Path(cfg.input).read_text() if cfg.input else sys.stdin.read()
    vectors = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vectors.append([float(v) for v in line.replace(",", " ").split()])
        except ValueError:
            raise ConfigError(f"input line {lineno} is not a numeric vector: {line!r}") from None
    dim = cfg.dim if cfg.dim is not None else (len(vectors[0]) if vectors else 1)
    rounds = cfg.rounds if cfg.rounds is not None else max(len(vectors), 1)
    if len(vectors) > rounds:
        raise ConfigError(f"input has {len(vectors)} vectors but --rounds is {rounds}")
    epsilon = math.inf if cfg.no_noise else cfg.epsilon
    tree = NoisyPrefixSumTree(rounds, dim, cfg.norm_bound, epsilon, np.random.default_rng(cfg.seed))
    out_lines = [f"# dpsubmod {__version__} tbap: {json.dumps(tree.metadata(), sort_keys=True)}"]
    if not tree.private:
        out_lines.insert(0, f"# {NON_PRIVATE_BANNER}")
    for k, vec in enumerate(vectors, 1):
        if len(vec) != dim:
            raise ConfigError(f"vector {k} has {len(vec)} entries, expected {dim}")
        v = tree.append(vec)
        out_lines.append(",".join(repr(float(a)) for a in v))
    payload = "\n".join(out_lines) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(payload)
    else:
        sys.stdout.write(payload)


def _finish_dir(tmp: Path, out: Path, force: bool) -> None:
    if out.exists():
        if not force:
            raise ConfigError(f"output directory {out} exists; pass --force to replace it")
        shutil.rmtree(out)
    tmp.rename(out)


def main(argv: list[str] | None = None) -> int:
    try:
        cfg, ns = resolve_config(argv)
    except ConfigError as exc:
        print(f"dpsubmod: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    force = getattr(ns, "force", False)
    try:
        if cfg.algorithm == "tbap-standalone":
            try:
                run_tbap(cfg)
            except Exception:
                if cfg.output:
                    Path(cfg.output).unlink(missing_ok=True)
                raise
            return 0

        out = Path(cfg.out)
        if out.exists() and not force:
            raise ConfigError(f"output directory {out} exists; pass --force to replace it")
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
        try:
            if cfg.algorithm == "verify-lemmas":
                report = verify_lemma_suite(cfg.seed, cfg.instances, cfg.orthogonality_runs)
                for line in report.lines():
                    print(line)
                summary = {"library_version": __version__, "config": cfg.echo(),
                           "lemmas": report.as_dict()}
                status = 0 if report.passed else 1
            else:
                summary = run_regret(cfg, tmp)
                if "banner" in summary:
                    print(summary["banner"])
                for row in summary["horizons"]:
                    print(f"T={row['T']:>7}  mean regret {row['mean_regret']:.4f}  "
                          f"per round {row['mean_regret_per_round']:.5f}")
                if "slope" in summary:
                    slope = summary["slope"]
                    print("log-log slope: " + (f"{slope:.4f}" if slope is not None else summary["slope_note"]))
                status = 0
            (tmp / "config.toml").write_text(dump_toml(cfg.echo()))
            (tmp / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
            _finish_dir(tmp, out, force)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        print(f"wrote {out}")
        return status
    except ConfigError as exc:
        print(f"dpsubmod: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"dpsubmod: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
