"""
Experiment Config Module

One experiment = top-level run settings plus the simulator, task and learner configs. The file
form is the shared `key = value` format; section keys carry a prefix (`sim.`, `task.`, `mpo.`,
`crr.`), run settings do not. The resolved config of every run is written back into its output
directory in the same format, so it can be fed to the parser again.

Classes:
    RunSettings: Top-level run settings.
    ExperimentConfig: Validated, fully resolved experiment.

Functions:
    build_experiment_config(): Resolve raw key/value pairs into an `ExperimentConfig`.
    load_experiment_config(): Resolve a config file plus command-line overrides.
    experiment_to_strings(): Render an `ExperimentConfig` back into raw key/value pairs.
    write_resolved_config(): Echo the resolved config into a run directory.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

from aeolus.athena_learners.crr import CrrConfig
from aeolus.athena_learners.mpo import MpoConfig
from aeolus.boreas_sim.sim_config import SimConfig
from aeolus.config_file import apply_overrides, dataclass_to_strings, read_key_value_file, write_key_value_file
from aeolus.errors import ConfigError
from aeolus.themis_tasks.task_spec import TASK_IDS, TaskSpec, get_task

ALGORITHMS = ("mpo", "crr")
SECTIONS = ("sim", "task", "mpo", "crr")
RESOLVED_CONFIG = "resolved_config.txt"


@dataclass(frozen=True)
class RunSettings:
    """Top-level run settings.

    Attributes:
        task (str): Task id.
        algorithm (str): "mpo" (online) or "crr" (offline).
        steps (int): Environment steps (online) or learner steps (offline).
        seed (int): Root seed of every random stream.
        out (str): Output directory.
        threaded (bool): Run actor and learner on separate threads (not deterministic).
        eval_period (int): Training episodes between evaluations.
        eval_episodes (int): Mean-mode episodes per evaluation.
    """

    task: str = "hover"
    algorithm: str = "mpo"
    steps: int = 300_000
    seed: int = 0
    out: str = "runs/default"
    threaded: bool = False
    eval_period: int = 10
    eval_episodes: int = 3


RUN_KEYS = tuple(f.name for f in dataclasses.fields(RunSettings))


@dataclass(frozen=True)
class ExperimentConfig(RunSettings):
    """Validated, fully resolved experiment: `RunSettings` plus every section config.

    Attributes:
        sim (SimConfig): Simulator constants; `n_balls` always matches the task.
        task_spec (TaskSpec): Task parameters.
        mpo (MpoConfig): Online learner hyperparameters.
        crr (CrrConfig): Offline learner hyperparameters.
    """

    sim: SimConfig = field(default_factory=SimConfig)
    task_spec: TaskSpec = field(default_factory=lambda: get_task("hover"))
    mpo: MpoConfig = field(default_factory=MpoConfig)
    crr: CrrConfig = field(default_factory=CrrConfig)

    def __post_init__(self):
        if self.task not in TASK_IDS:
            raise ConfigError(f'Task="{self.task}" not found in task registry.')
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f'Algorithm="{self.algorithm}" is not one of {ALGORITHMS}.')
        if self.steps < 0:
            raise ConfigError(f"ExperimentConfig.steps (={self.steps}) must be >= 0.")
        if self.seed < 0:
            raise ConfigError(f"ExperimentConfig.seed (={self.seed}) must be >= 0.")
        if self.eval_period < 1 or self.eval_episodes < 1:
            raise ConfigError("ExperimentConfig.eval_period and eval_episodes must be >= 1.")
        if self.task_spec.task_id != self.task:
            raise ConfigError(f'Task parameters are for "{self.task_spec.task_id}", run task is "{self.task}".')
        if self.sim.n_balls != self.task_spec.n_balls:
            raise ConfigError(
                f"Simulator has {self.sim.n_balls} balls, task {self.task} needs {self.task_spec.n_balls}."
            )

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


def _split_sections(values: Mapping[str, str]):
    run: Dict[str, str] = {}
    sections: Dict[str, Dict[str, str]] = {name: {} for name in SECTIONS}
    for key, value in values.items():
        if "." not in key:
            if key not in RUN_KEYS:
                raise ConfigError(f'Unknown experiment key="{key}"')
            run[key] = value
            continue
        section, name = key.split(".", 1)
        if section not in sections:
            raise ConfigError(f'Unknown config section="{section}" in key="{key}"')
        sections[section][name] = value
    return run, sections


def build_experiment_config(values: Mapping[str, str]) -> ExperimentConfig:
    """Resolve raw `key = value` pairs into an `ExperimentConfig`.

    `sim.n_balls` defaults to the task's ball count. `task.task_id`, if present, must name the run
    task.

    Raises:
        ConfigError: On unknown keys or sections, unparseable values, or inconsistent settings.
    """
    run, sections = _split_sections(values)
    settings = apply_overrides(RunSettings, run)

    task_overrides = dict(sections["task"])
    task_id = task_overrides.pop("task_id", settings.task)
    if task_id != settings.task:
        raise ConfigError(f'task.task_id="{task_id}" does not match task="{settings.task}"')
    task_spec = get_task(settings.task, task_overrides)

    sim_overrides = dict(sections["sim"])
    sim_overrides.setdefault("n_balls", str(task_spec.n_balls))
    sim = apply_overrides(SimConfig, sim_overrides)
    mpo = apply_overrides(MpoConfig, sections["mpo"])
    crr = apply_overrides(CrrConfig, sections["crr"])
    return ExperimentConfig(
        **{name: getattr(settings, name) for name in RUN_KEYS}, sim=sim, task_spec=task_spec, mpo=mpo, crr=crr
    )


def load_experiment_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """Resolve the config file at `path` (if any) with `overrides` taking precedence."""
    values: Dict[str, str] = dict(read_key_value_file(path)) if path is not None else {}
    values.update(overrides or {})
    return build_experiment_config(values)


def experiment_to_strings(config: ExperimentConfig) -> Dict[str, str]:
    settings = RunSettings(**{name: getattr(config, name) for name in RUN_KEYS})
    values = dataclass_to_strings(settings)
    values.update(dataclass_to_strings(config.sim, "sim."))
    values.update(dataclass_to_strings(config.task_spec, "task."))
    values.update(dataclass_to_strings(config.mpo, "mpo."))
    values.update(dataclass_to_strings(config.crr, "crr."))
    return values


def write_resolved_config(config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None) -> Path:
    """Write every resolved key except `out` into `<out_dir>/resolved_config.txt`, so two runs of
    one config in different directories leave identical files.
    """
    path = Path(out_dir if out_dir is not None else config.out) / RESOLVED_CONFIG
    values = experiment_to_strings(config)
    del values["out"]
    write_key_value_file(path, values)
    return path
