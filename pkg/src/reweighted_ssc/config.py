"""JSON experiment configuration.

Schema (every key optional; omitted keys take the defaults shown)::

    {
      "generation": {"n": 100, "L": 3, "d": 4, "rho": 0.5, "density": 5,
                     "sigma": 0.25, "seed": 0},
      "pipeline":   {"sigma": 0.25, "epsilon": 0.01, "weighted": true,
                     "tau_factor": 2.0, "lambda_factor": 0.707,
                     "solver": {"tol": 1e-8, "max_iter": 100000,
                                "support_threshold": null}},
      "spectral":   {"kmeans_restarts": 10, "kmeans_max_iter": 300,
                     "seed": 0, "eig_tol": 1e-10},
      "sweep":      {"sigma": [0.1, ..., 0.7], "rho": [0.02, 0.5, 0.86],
                     "epsilon": [0.001, 0.01, 0.1, 1, 10],
                     "seeds": [0, ..., 19]},
      "events":     {"k_t": 1, "k_f": 0, "trials": 20},
      "out": null
    }

Unknown keys are rejected so typos do not pass silently.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError, SSCError
from .metrics import EventSpec
from .pipeline import PipelineConfig
from .solvers import SolveConfig
from .spectral import SpectralConfig
from .synthetic import GenerationConfig

__all__ = ["ExperimentConfig", "load_config", "DEFAULT_SIGMAS", "DEFAULT_RHOS", "DEFAULT_EPSILONS"]

DEFAULT_SIGMAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
DEFAULT_RHOS = (0.02, 0.5, 0.86)
DEFAULT_EPSILONS = (0.001, 0.01, 0.1, 1.0, 10.0)


def _build(cls, values, where):
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(f"'{where}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown keys in '{where}': {', '.join(unknown)}")
    try:
        return cls(**values)
    except SSCError as exc:
        raise ConfigError(f"invalid '{where}': {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"invalid '{where}': {exc}") from exc


@dataclass
class ExperimentConfig:
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    sigmas: list = field(default_factory=lambda: list(DEFAULT_SIGMAS))
    rhos: list = field(default_factory=lambda: list(DEFAULT_RHOS))
    epsilons: list = field(default_factory=lambda: list(DEFAULT_EPSILONS))
    seeds: list = field(default_factory=lambda: list(range(20)))
    events: EventSpec | None = None
    trials: int = 20
    out: str | None = None

    def validate(self) -> "ExperimentConfig":
        for name in ("sigmas", "rhos", "epsilons", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"sweep axis '{name}' is empty")
        if any(not s > 0 for s in self.sigmas):
            raise ConfigError("every sigma must be positive")
        if any(not 0 <= r <= 1 for r in self.rhos):
            raise ConfigError("every rho must lie in [0, 1]")
        if any(not e > 0 for e in self.epsilons):
            raise ConfigError("every epsilon must be positive")
        if any(int(s) != s or s < 0 for s in self.seeds):
            raise ConfigError("seeds must be nonnegative integers")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir():
                raise ConfigError(f"output directory {parent} does not exist")
        try:
            self.generation.validate()
        except SSCError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        allowed = {"generation", "pipeline", "spectral", "sweep", "events", "out"}
        unknown = sorted(set(raw) - allowed)
        if unknown:
            raise ConfigError(f"unknown top-level keys: {', '.join(unknown)}")
        pipe_raw = dict(raw.get("pipeline") or {})
        solver = _build(SolveConfig, pipe_raw.pop("solver", None), "pipeline.solver")
        pipeline = _build(PipelineConfig, {**pipe_raw, "solver": solver}, "pipeline")
        sweep = dict(raw.get("sweep") or {})
        unknown = sorted(set(sweep) - {"sigma", "rho", "epsilon", "seeds"})
        if unknown:
            raise ConfigError(f"unknown keys in 'sweep': {', '.join(unknown)}")
        ev = raw.get("events")
        trials = 20
        events = None
        if ev is not None:
            ev = dict(ev)
            trials = ev.pop("trials", 20)
            events = _build(EventSpec, ev, "events")
        cfg = cls(
            generation=_build(GenerationConfig, raw.get("generation"), "generation"),
            pipeline=pipeline,
            spectral=_build(SpectralConfig, raw.get("spectral"), "spectral"),
            sigmas=[float(v) for v in sweep.get("sigma", DEFAULT_SIGMAS)],
            rhos=[float(v) for v in sweep.get("rho", DEFAULT_RHOS)],
            epsilons=[float(v) for v in sweep.get("epsilon", DEFAULT_EPSILONS)],
            seeds=[int(v) for v in sweep.get("seeds", range(20))],
            events=events,
            trials=int(trials),
            out=raw.get("out"),
        )
        return cfg

    def to_dict(self) -> dict:
        pipe = asdict(self.pipeline)
        out = {
            "generation": self.generation.to_dict(),
            "pipeline": pipe,
            "spectral": asdict(self.spectral),
            "sweep": {"sigma": list(self.sigmas), "rho": list(self.rhos),
                      "epsilon": list(self.epsilons), "seeds": list(self.seeds)},
            "out": self.out,
        }
        if self.events is not None:
            out["events"] = {**asdict(self.events), "trials": self.trials}
        return out

    def override(self, **changes) -> "ExperimentConfig":
        """Copy with top-level fields replaced; ``None`` values are ignored."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)
