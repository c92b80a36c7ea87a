"""Command-line pipeline: ingest -> train -> refine -> evaluate -> report.

One JSON config drives every stage. All commands are deterministic
given (config file, input artifacts): rerunning a command overwrites
its outputs with byte-identical bytes. The master seed derives stage
seeds as seed+1/+2/+3 for environment, training, and refinement (the
environment slot is reserved; the environment itself has no
randomness).

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 artifact error, 4 numeric failure.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .data_ingest import chrono_split, fit_scaler, load_series
from .environment import BeliefConfig, BudgetEnv, RewardConfig
from .errors import (
    ArtifactError,
    ConfigError,
    DataError,
    DomainError,
    FiscalForgeError,
    NumericError,
)
from .evaluation import evaluate_policy
from .neural_core import (
    SIMPLEX,
    ActorPolicy,
    export_json,
    load_checkpoint,
    save_checkpoint,
)
from .quantum_ga import GaConfig, evaluate_fitness, evolve
from .td3_trainer import ACTION_DIM, STATE_DIM, TD3Config, train

__all__ = ["RunConfig", "main", "entrypoint"]

log = logging.getLogger("fiscalforge")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG, "trace": 5}

ACTOR_CKPT = "actor.ckpt"
REFINED_CKPT = "refined_actor.ckpt"


@dataclass(frozen=True)
class RunConfig:
    data_path: Path
    train_fraction: float
    reward: RewardConfig
    belief: BeliefConfig
    td3: TD3Config
    ga: GaConfig
    output_dir: Path
    seed: int


def _section(doc: dict, name: str) -> dict:
    value = doc.pop(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return dict(value)


def _reject_unknown(section: str, given: dict, allowed: set[str]) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")


def _build(cls, section_name: str, given: dict, **overrides):
    allowed = {f.name for f in fields(cls)} - set(overrides)
    _reject_unknown(section_name, given, allowed)
    try:
        return cls(**given, **overrides)
    except (TypeError, FiscalForgeError) as exc:
        raise ConfigError(f"bad {section_name!r} section: {exc}") from exc


def load_run_config(
    path: str | Path, out_override: str | None = None, seed_override: int | None = None
) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")

    doc = dict(doc)
    data = _section(doc, "data")
    env_params = _section(doc, "environment")
    td3_params = _section(doc, "td3")
    ga_params = _section(doc, "ga")
    output_dir = doc.pop("output_dir", "runs/default")
    seed = doc.pop("seed", 0)
    if doc:
        raise ConfigError(f"unknown top-level config keys: {sorted(doc)}")
    if seed_override is not None:
        seed = seed_override
    if out_override is not None:
        output_dir = out_override
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    _reject_unknown("data", data, {"path", "train_fraction"})
    if "path" not in data:
        raise ConfigError("config is missing data.path")
    data_path = Path(data["path"])
    train_fraction = float(data.get("train_fraction", 0.8))

    _reject_unknown("environment", env_params,
                    {"lambda1", "lambda2", "confidence", "prior"})
    try:
        reward = RewardConfig(
            lambda1=float(env_params.get("lambda1", 0.1)),
            lambda2=float(env_params.get("lambda2", 0.01)),
        )
        belief = BeliefConfig(
            prior=tuple(env_params.get("prior", (5.0, 3.0))),
            confidence=float(env_params.get("confidence", 1.0)),
        )
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"bad 'environment' section: {exc}") from exc

    td3 = _build(TD3Config, "td3", td3_params, seed=seed + 2)
    ga = _build(GaConfig, "ga", ga_params, seed=seed + 3)
    return RunConfig(
        data_path=data_path,
        train_fraction=train_fraction,
        reward=reward,
        belief=belief,
        td3=td3,
        ga=ga,
        output_dir=Path(output_dir),
        seed=seed,
    )


# -- shared stage helpers -----------------------------------------------------


def _prepare(cfg: RunConfig):
    """Load, split, and fit the scaler on the training segment only."""
    if not cfg.data_path.exists():
        raise DataError(f"data file not found: {cfg.data_path}")
    series = load_series(cfg.data_path)
    train_part, test_part = chrono_split(series, cfg.train_fraction)
    scaler = fit_scaler(train_part)
    return series, train_part, test_part, scaler


def _train_env(cfg: RunConfig, train_part, scaler) -> BudgetEnv:
    return BudgetEnv(train_part, scaler, cfg.reward, cfg.belief)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _load_actor(path: Path) -> ActorPolicy:
    if not path.exists():
        raise ArtifactError(f"checkpoint not found: {path}")
    spec, params = load_checkpoint(path)
    if spec.output_head != SIMPLEX or spec.input_dim != STATE_DIM or spec.output_dim != ACTION_DIM:
        raise ArtifactError(
            f"{path}: checkpoint is not an allocation actor "
            f"(head={spec.output_head}, in={spec.input_dim}, out={spec.output_dim})"
        )
    return ActorPolicy(spec, params)


# -- commands ------------------------------------------------------------------


def cmd_train(cfg: RunConfig) -> None:
    _, train_part, _, scaler = _prepare(cfg)
    env = _train_env(cfg, train_part, scaler)
    log.info("training for %d timesteps (seed %d)", cfg.td3.total_timesteps, cfg.td3.seed)
    policy = train(env, cfg.td3)

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / ACTOR_CKPT, policy.spec, policy.params)
    export_json(out / "actor.json", policy.spec, policy.params)
    for name, params in policy.aux_params.items():
        spec = policy.critic_spec if "critic" in name else policy.spec
        save_checkpoint(out / f"{name}.ckpt", spec, params)
    _write_jsonl(
        out / "history.jsonl",
        (
            {"episode": i, "cumulative_reward": r}
            for i, r in enumerate(policy.episode_rewards)
        ),
    )
    tail = policy.episode_rewards[-10:]
    print(f"final-10-episode mean reward: {float(np.mean(tail)):.6f}")


def cmd_refine(cfg: RunConfig) -> None:
    _, train_part, _, scaler = _prepare(cfg)
    env = _train_env(cfg, train_part, scaler)
    base = _load_actor(cfg.output_dir / ACTOR_CKPT)
    log.info("refining for %d generations (seed %d)", cfg.ga.generations, cfg.ga.seed)
    refined, logs = evolve(base, env, cfg.ga)

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / REFINED_CKPT, refined.spec, refined.params)
    _write_jsonl(
        out / "generations.jsonl",
        (
            {
                "generation": g.generation,
                "best": g.best,
                "mean": g.mean,
                "fitnesses": list(g.fitnesses),
                "n_mutations": g.n_mutations,
            }
            for g in logs
        ),
    )
    with (out / "perturbations.csv").open("w", encoding="utf-8") as fh:
        for g in logs:
            for delta in g.perturbations:
                fh.write(f"{delta!r}\n")
    for g in logs:
        print(f"generation {g.generation} best fitness: {g.best:.6f}")


def cmd_evaluate(cfg: RunConfig) -> None:
    _, _, test_part, scaler = _prepare(cfg)
    ckpt = cfg.output_dir / REFINED_CKPT
    if not ckpt.exists():
        ckpt = cfg.output_dir / ACTOR_CKPT
    policy = _load_actor(ckpt)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report, pairs = evaluate_policy(
        policy, test_part, scaler, cfg.reward, cfg.belief,
        trace_path=out / "trace.jsonl",
    )
    _write_json(out / "metrics.json", report.to_dict())
    with (out / "pairs.csv").open("w", encoding="utf-8") as fh:
        fh.write("t,pred_rnd,pred_sga,actual_rnd,actual_sga\n")
        for t, p in enumerate(pairs):
            fh.write(
                f"{t},{p.predicted[0]!r},{p.predicted[1]!r},"
                f"{p.actual[0]!r},{p.actual[1]!r}\n"
            )
    print(f"mae: {report.mae:.6f}")
    print(f"rmse: {report.rmse:.6f}")
    print(f"cosine_similarity: {report.cosine_similarity:.6f}")
    print(f"kl_divergence: {report.kl_divergence:.6f}")


def cmd_pipeline(cfg: RunConfig) -> None:
    cmd_train(cfg)
    cmd_refine(cfg)

    _, train_part, test_part, scaler = _prepare(cfg)
    base = _load_actor(cfg.output_dir / ACTOR_CKPT)
    refined = _load_actor(cfg.output_dir / REFINED_CKPT)
    fit_env = _train_env(cfg, train_part, scaler)
    pre_fitness = evaluate_fitness(base.params, base.spec, fit_env)
    post_fitness = evaluate_fitness(refined.params, refined.spec, fit_env)
    pre_report, _ = evaluate_policy(base, test_part, scaler, cfg.reward, cfg.belief)

    cmd_evaluate(cfg)

    post_report = json.loads((cfg.output_dir / "metrics.json").read_text())
    _write_json(
        cfg.output_dir / "summary.json",
        {
            "pre_refinement": {"fitness": pre_fitness, "metrics": pre_report.to_dict()},
            "post_refinement": {"fitness": post_fitness, "metrics": post_report},
        },
    )
    print(
        f"refinement summary: fitness {pre_fitness:.6f} -> {post_fitness:.6f}, "
        f"mae {pre_report.mae:.6f} -> {post_report['mae']:.6f}, "
        f"cosine {pre_report.cosine_similarity:.6f} -> "
        f"{post_report['cosine_similarity']:.6f}"
    )


# -- entry point ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fiscalforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "train an allocation policy and write checkpoints"),
        ("refine", "evolutionarily refine a trained checkpoint"),
        ("evaluate", "score a checkpoint on the held-out split"),
        ("pipeline", "train, refine, and evaluate in one run"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the JSON run config")
        cmd.add_argument("--out", help="override the config's output directory")
        cmd.add_argument("--seed", type=int, help="override the config's master seed")
    return parser


_COMMANDS = {
    "train": cmd_train,
    "refine": cmd_refine,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def _setup_logging() -> None:
    logging.addLevelName(5, "TRACE")
    level = _LOG_LEVELS.get(os.environ.get("FISCALFORGE_LOG", "error").lower())
    if level is None:
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        cfg = load_run_config(args.config, out_override=args.out, seed_override=args.seed)
        _COMMANDS[args.command](cfg)
        return 0
    except ConfigError as exc:
        print(f"fiscalforge: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"fiscalforge: data error: {exc}", file=sys.stderr)
        return 2
    except ArtifactError as exc:
        print(f"fiscalforge: artifact error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"fiscalforge: numeric failure: {exc}", file=sys.stderr)
        return 4


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
