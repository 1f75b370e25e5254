"""Command-line driver: run / synth / exhaustive subcommands.

Configuration is a flat ``key = value`` text file using exactly the field
names of RunConfig; command-line flags override file values, which override
defaults. All randomness flows from the single master_seed field.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime
failure. Each failure prints a one-line diagnostic to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .data import load_csv, split_sequential, synthetic_sensors, write_csv
from .engine import (
    EXHAUSTIVE_CAP_DEFAULT,
    GaConfig,
    exhaustive_search,
    run,
)
from .errors import (
    BadSplitError,
    CapExceededError,
    ConfigError,
    EmptyChromosomeError,
    IndexOutOfRangeError,
    MissingTargetError,
    NonFiniteValueError,
    ParseError,
)
from .genome import Chromosome
from .mlp import TrainConfig

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

_DATA_ERRORS = (
    ParseError,
    MissingTargetError,
    NonFiniteValueError,
    BadSplitError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)


@dataclass(frozen=True)
class RunConfig:
    """Everything a search run needs, flattened for file/flag handling."""

    data_csv: str = ""
    target_column: str = "level"
    n_train: int = 200
    out_dir: str = "out"
    threads: int = 1
    population_size: int = 50
    survival_fraction: float = 0.20
    mutation_rate: float = 0.1
    p_one_parent: float = 0.5
    generations: int = 25
    master_seed: int = 0
    offspring_retry_limit: int = 200
    hidden_units: int = 5
    max_iterations: int = 200
    lambda_init: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    tol_rel: float = 1e-9
    lambda_max: float = 1e10
    exhaustive_cap: int = EXHAUSTIVE_CAP_DEFAULT

    def ga_config(self, n_vars: int) -> GaConfig:
        return GaConfig(
            n_vars=n_vars,
            population_size=self.population_size,
            survival_fraction=self.survival_fraction,
            mutation_rate=self.mutation_rate,
            p_one_parent=self.p_one_parent,
            generations=self.generations,
            master_seed=self.master_seed,
            offspring_retry_limit=self.offspring_retry_limit,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            hidden_units=self.hidden_units,
            max_iterations=self.max_iterations,
            lambda_init=self.lambda_init,
            lambda_up=self.lambda_up,
            lambda_down=self.lambda_down,
            tol_rel=self.tol_rel,
            lambda_max=self.lambda_max,
        )

    def echo(self) -> dict:
        """Result-defining fields only.

        threads and out_dir steer execution and output placement without
        affecting any computed number, so they are left out; this keeps
        equal-seed runs byte-identical on disk regardless of parallelism.
        """
        fields = dataclasses.asdict(self)
        del fields["threads"]
        del fields["out_dir"]
        return fields


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def parse_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; '#' comments and blank lines allowed."""
    values: dict = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = _coerce(key, value, f"{path}:{line_no}")
    return values


def _coerce(key: str, value: str, where: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind}, got {value!r}") from None


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    overrides = {
        "master_seed": args.seed,
        "population_size": args.population,
        "survival_fraction": args.survival,
        "mutation_rate": args.mutation_rate,
        "generations": args.generations,
        "hidden_units": args.hidden_units,
        "threads": args.threads,
        "out_dir": args.out_dir,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _load_split(cfg: RunConfig):
    if not cfg.data_csv:
        raise ConfigError("data_csv is required (set it in the config file)")
    dataset = load_csv(cfg.data_csv, cfg.target_column)
    return split_sequential(dataset, cfg.n_train)


def _write_outputs(out_dir: Path, cfg: RunConfig, result) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "generations.jsonl").open("w", encoding="utf-8") as fh:
        for report in result.reports:
            fh.write(json.dumps(report.to_record()) + "\n")
    result.graveyard.write_audit(out_dir / "graveyard.jsonl")
    summary = {
        "best": {
            "genes": result.best.one_based(),
            "label": result.best.label,
            "cv_sse": result.best_score.cv_sse,
            "train_sse": result.best_score.train_sse,
            "gene_count": result.best_score.gene_count,
        },
        "config": cfg.echo(),
        "generations_completed": len(result.reports),
        "total_evaluations": len(result.graveyard),
        "graveyard_size": len(result.graveyard),
        "exhausted": result.exhausted,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    split = _load_split(cfg)
    started = time.perf_counter()
    result = run(
        cfg.ga_config(split.n_vars),
        split,
        cfg.train_config(),
        threads=cfg.threads,
    )
    wall = time.perf_counter() - started
    _write_outputs(Path(cfg.out_dir), cfg, result)
    print(result.best.label, repr(result.best_score.cv_sse))
    print(f"wall_time_s {wall:.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_exhaustive(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    split = _load_split(cfg)
    started = time.perf_counter()
    (best_c, best_s), table = exhaustive_search(
        split.n_vars,
        split,
        cfg.train_config(),
        cfg.master_seed,
        cap=cfg.exhaustive_cap,
        threads=cfg.threads,
    )
    wall = time.perf_counter() - started
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "scores.csv").open("w", encoding="utf-8") as fh:
        fh.write("genes,cv_sse\n")
        for c, s in table:
            fh.write(f"{c.label},{s.cv_sse!r}\n")
    print(best_c.label, repr(best_s.cv_sse))
    print(f"wall_time_s {wall:.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    informative = Chromosome.from_label(args.informative)
    dataset = synthetic_sensors(
        n_vars=args.n_vars,
        n_samples=args.n_samples,
        informative=informative,
        noise_sd=args.noise_sd,
        seed=args.seed,
    )
    out = Path(args.out)
    try:
        write_csv(dataset, out, target_name="level")
        meta = {
            "n_vars": args.n_vars,
            "n_samples": args.n_samples,
            "informative": informative.one_based(),
            "noise_sd": args.noise_sd,
            "seed": args.seed,
            "target_column": "level",
        }
        out.with_suffix(out.suffix + ".meta.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise ParseError(f"cannot write {out}: {exc}") from exc
    print(out)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaselect",
        description="Genetic search over sensor-variable subsets, scored by a "
        "Levenberg-Marquardt trained perceptron on held-out data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="master seed (all randomness)")
        p.add_argument("--population", type=int, help="population size")
        p.add_argument("--survival", type=float, help="survivor fraction")
        p.add_argument("--mutation-rate", type=float, dest="mutation_rate")
        p.add_argument("--generations", type=int)
        p.add_argument("--hidden-units", type=int, dest="hidden_units")
        p.add_argument("--threads", type=int, help="evaluation parallelism")
        p.add_argument("--out-dir", dest="out_dir")

    p_run = sub.add_parser("run", help="run the genetic search")
    add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_ex = sub.add_parser("exhaustive", help="score every subset (small n only)")
    add_run_flags(p_ex)
    p_ex.set_defaults(func=cmd_exhaustive)

    p_synth = sub.add_parser("synth", help="generate a synthetic sensor CSV")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--n-vars", type=int, default=20, dest="n_vars")
    p_synth.add_argument("--n-samples", type=int, default=400, dest="n_samples")
    p_synth.add_argument(
        "--informative",
        default="1-2-3",
        help="hyphen-joined 1-based informative sensors, e.g. 1-2-3",
    )
    p_synth.add_argument("--noise-sd", type=float, default=0.1, dest="noise_sd")
    p_synth.add_argument("--seed", type=int, default=1)
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CapExceededError, EmptyChromosomeError, IndexOutOfRangeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
