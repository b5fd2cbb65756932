"""Campaign configuration loading and validation.

A campaign config is a single JSON document naming the decay parameters,
entropy trajectory, routing thresholds, edit costs, attribution settings,
the probe grid (prompts x time values x repetitions), and the corpus
document holding ground truth, aliases, and decoys. ``load_config``
collects every violation it finds instead of stopping at the first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .attribution import DEFAULT_FEATURE_SCHEMA, FitConfig
from .decay import DecayParams, EntropyTrajectory
from .errors import ConfigError
from .graphs import (
    DEFAULT_CONFIDENCE_FLOOR,
    EditCosts,
    Entity,
    KnowledgeGraph,
    Relation,
    graph_from_wire,
)
from .routing import Thresholds

__all__ = ["CampaignConfig", "CorpusDocument", "load_config", "load_corpus"]

BASE_INSTANT = "2026-01-01T00:00:00Z"


@dataclass(frozen=True)
class CorpusDocument:
    ground_truth: KnowledgeGraph
    aliases: dict[str, str]
    decoy_entities: tuple[Entity, ...]
    decoy_relations: tuple[Relation, ...]


@dataclass(frozen=True)
class CampaignConfig:
    decay: DecayParams
    trajectory: EntropyTrajectory
    thresholds: Thresholds
    edit_costs: EditCosts
    feature_schema: tuple[str, ...]
    gamma: float
    eta: float
    fit: FitConfig
    confidence_floor: float
    prompts: tuple[str, ...]
    t_grid: tuple[float, ...]
    reps_per_cell: int
    master_seed: int
    corpus_path: Path
    output_dir: Path
    replay_path: Path | None = None
    workers: int = 1
    render_figures: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def total_probes(self) -> int:
        return len(self.prompts) * len(self.t_grid) * self.reps_per_cell


def _require(data: Mapping, key: str, violations: list[str]):
    if key not in data:
        violations.append(f"missing required key: {key}")
        return None
    return data[key]


def load_corpus(path: Path) -> CorpusDocument:
    data = json.loads(Path(path).read_text())
    ground_truth = graph_from_wire(data)
    aliases = {str(k): str(v) for k, v in data.get("aliases", {}).items()}
    decoys = data.get("decoys", {})
    decoy_entities = tuple(
        Entity(
            entity_id=str(item["entity_id"]),
            entity_type=str(item["entity_type"]),
            attributes={str(k): str(v) for k, v in item.get("attributes", {}).items()},
        )
        for item in decoys.get("entities", [])
    )
    decoy_relations = tuple(
        Relation(
            source=str(item["source_entity"]),
            target=str(item["target_entity"]),
            relation_type=str(item["relation_type"]),
            confidence=float(item.get("confidence_score", 1.0)),
        )
        for item in decoys.get("relations", [])
    )
    return CorpusDocument(ground_truth, aliases, decoy_entities, decoy_relations)


def load_config(path: Path | str, *, overrides: Mapping | None = None) -> CampaignConfig:
    """Load and validate a campaign config file.

    Raises ConfigError carrying the complete list of violations when
    anything is wrong. ``overrides`` replaces top-level keys before
    validation (the CLI uses it for --seed/--out/--replay flags).
    """
    path = Path(path)
    violations: list[str] = []
    try:
        data = dict(json.loads(path.read_text()))
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file is not valid JSON: {exc}"])
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})

    decay = trajectory = thresholds = None
    decay_raw = _require(data, "decay", violations)
    if decay_raw is not None:
        try:
            decay = DecayParams(
                c0=float(decay_raw["c0"]),
                decay_rate=float(decay_raw["decay_rate"]),
                entropy_sensitivity=float(decay_raw["entropy_sensitivity"]),
                vocab_size=int(decay_raw["vocab_size"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            violations.append(f"decay: {exc}")

    traj_raw = _require(data, "entropy", violations)
    if traj_raw is not None:
        try:
            trajectory = EntropyTrajectory(
                h_max=float(traj_raw["h_max"]),
                rise_rate=float(traj_raw["rise_rate"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            violations.append(f"entropy: {exc}")
    if decay is not None and trajectory is not None:
        if trajectory.h_max > decay.max_entropy:
            violations.append(
                "entropy.h_max exceeds log(vocab_size); the trajectory must "
                "stay under the vocabulary maximum"
            )

    th_raw = _require(data, "thresholds", violations)
    if th_raw is not None:
        try:
            thresholds = Thresholds(float(th_raw["delta"]), float(th_raw["epsilon"]))
        except (KeyError, TypeError) as exc:
            violations.append(f"thresholds: {exc}")
        except ValueError:
            violations.append("thresholds.epsilon must exceed delta (0 <= delta < epsilon <= 1)")

    costs = EditCosts()
    if "edit_costs" in data:
        try:
            costs = EditCosts(**{k: float(v) for k, v in data["edit_costs"].items()})
        except (TypeError, ValueError) as exc:
            violations.append(f"edit_costs: {exc}")

    schema = tuple(data.get("feature_schema", DEFAULT_FEATURE_SCHEMA))
    if not schema:
        violations.append("feature_schema must not be empty")

    gamma = data.get("gamma", 3.0)
    if not isinstance(gamma, (int, float)) or isinstance(gamma, bool) or gamma < 0:
        violations.append(f"gamma must be a nonnegative number, got {gamma!r}")
    eta = data.get("eta", 0.1)
    if not isinstance(eta, (int, float)) or isinstance(eta, bool) or not 0 <= eta:
        violations.append(f"eta must be a nonnegative number, got {eta!r}")

    fit_raw = data.get("fit", {})
    try:
        fit_cfg = FitConfig(
            learning_rate=float(fit_raw.get("learning_rate", 0.1)),
            max_iterations=int(fit_raw.get("max_iterations", 5000)),
            tolerance=float(fit_raw.get("tolerance", 1e-8)),
        )
    except (TypeError, ValueError) as exc:
        fit_cfg = FitConfig()
        violations.append(f"fit: {exc}")

    floor = data.get("relation_confidence_floor", DEFAULT_CONFIDENCE_FLOOR)
    if not isinstance(floor, (int, float)) or isinstance(floor, bool) or not 0 <= floor <= 1:
        violations.append(f"relation_confidence_floor must be in [0, 1], got {floor!r}")

    prompts = _require(data, "prompts", violations)
    if prompts is not None and (not isinstance(prompts, list) or not prompts):
        violations.append("prompts must be a nonempty list")
        prompts = None

    t_grid = _require(data, "t_grid", violations)
    if t_grid is not None:
        if not isinstance(t_grid, list) or not t_grid:
            violations.append("t_grid must be a nonempty list")
            t_grid = None
        elif any((not isinstance(t, (int, float))) or isinstance(t, bool) or t < 0 for t in t_grid):
            violations.append("t_grid values must be nonnegative numbers")
            t_grid = None

    reps = data.get("reps_per_cell", 1)
    if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
        violations.append(f"reps_per_cell must be a positive integer, got {reps!r}")
        reps = 1

    master_seed = data.get("master_seed", 0)
    if not isinstance(master_seed, int) or isinstance(master_seed, bool):
        violations.append(f"master_seed must be an integer, got {master_seed!r}")
        master_seed = 0

    workers = data.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        violations.append(f"workers must be a positive integer, got {workers!r}")
        workers = 1

    corpus_raw = _require(data, "corpus_file", violations)
    corpus_path = None
    if corpus_raw is not None:
        corpus_path = Path(corpus_raw)
        if not corpus_path.is_absolute():
            corpus_path = path.parent / corpus_path
        if not corpus_path.exists():
            violations.append(f"corpus_file does not exist: {corpus_path}")

    replay_path = None
    if data.get("replay_file"):
        replay_path = Path(data["replay_file"])
        if not replay_path.is_absolute():
            replay_path = path.parent / replay_path
        if not replay_path.exists():
            violations.append(f"replay_file does not exist: {replay_path}")

    out_raw = data.get("output_dir", "out")
    output_dir = Path(out_raw)
    if not output_dir.is_absolute():
        output_dir = path.parent / output_dir

    if violations:
        raise ConfigError(violations)

    return CampaignConfig(
        decay=decay,
        trajectory=trajectory,
        thresholds=thresholds,
        edit_costs=costs,
        feature_schema=schema,
        gamma=float(gamma),
        eta=float(eta),
        fit=fit_cfg,
        confidence_floor=float(floor),
        prompts=tuple(str(p) for p in prompts),
        t_grid=tuple(float(t) for t in t_grid),
        reps_per_cell=reps,
        master_seed=master_seed,
        corpus_path=corpus_path,
        output_dir=output_dir,
        replay_path=replay_path,
        workers=workers,
        render_figures=bool(data.get("render_figures", True)),
        extra={
            k: v
            for k, v in data.items()
            if k
            not in {
                "decay", "entropy", "thresholds", "edit_costs", "feature_schema",
                "gamma", "eta", "fit", "relation_confidence_floor", "prompts",
                "t_grid", "reps_per_cell", "master_seed", "workers",
                "corpus_file", "replay_file", "output_dir", "render_figures",
            }
        },
    )
