"""Scenario description for Monte Carlo experiments.

Scenario files are JSON objects::

    {
      "array":      {"n_sensors": 15, "radius": 1.0, "wavelength": 1.0},
      "sources":    [[243.4, 18.3], [60.0, 83.6], [357.8, 73.9]],
      "powers":     [1.0, 1.0, 1.0],                # optional
      "coupling":   [[1, 0], [0.79, 0.432], ...],   # [re, im] pairs, c_1 first
      "snapshots":  200,
      "snr_db":     [0, 5, 10, 15, 20],
      "trials":     50,
      "seed":       0,
      "pipeline":   {"alpha": 0.3, ...},            # PipelineConfig fields
      "estimators": ["proposed", "grid-music", "narrowband-grid-lasso"],
      "baseline_step": {"grid-music": 1.0, "narrowband-grid-lasso": 2.0}
    }

Angles are (azimuth, elevation) in degrees. ``coupling`` may be omitted
(no coupling). Unknown keys at any level raise ``ValueError``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..array import (REFERENCE_ANGLES, ArrayConfig, CouplingVector, SourceSet, reference_array,
                     reference_coupling)
from ..pipeline import PipelineConfig

PROPOSED = "proposed"
GRID_MUSIC = "grid-music"
GRID_LASSO = "narrowband-grid-lasso"
ESTIMATORS = (PROPOSED, GRID_LASSO, GRID_MUSIC)

DEFAULT_STEPS = {GRID_MUSIC: 1.0, GRID_LASSO: 2.0}

_KEYS = {"array", "sources", "powers", "coupling", "snapshots", "snr_db", "trials", "seed",
         "pipeline", "estimators", "baseline_step"}
_ARRAY_KEYS = {"n_sensors", "radius", "wavelength"}


@dataclass
class Scenario:
    array: ArrayConfig
    sources: SourceSet
    coupling: CouplingVector
    snapshots: int = 200
    snr_db: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    trials: int = 50
    seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    estimators: list[str] = field(default_factory=lambda: [PROPOSED])
    baseline_step: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_STEPS))

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("SNR grid must not be empty")
        if self.snapshots < 2:
            raise ValueError("need at least two snapshots")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown estimators {bad}; choose from {list(ESTIMATORS)}")
        bad = set(self.baseline_step) - set(DEFAULT_STEPS)
        if bad:
            raise ValueError(f"baseline_step keys must be among {sorted(DEFAULT_STEPS)}")
        self.baseline_step = {**DEFAULT_STEPS, **self.baseline_step}
        if self.coupling.n_sensors != self.array.n_sensors:
            raise ValueError("coupling vector does not match the array size")

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        pc = self.pipeline
        return {
            "array": {"n_sensors": self.array.n_sensors, "radius": self.array.radius,
                      "wavelength": self.array.wavelength},
            "sources": [list(a) for a in self.sources.angles],
            "powers": [float(p) for p in self.sources.powers],
            "coupling": self.coupling.to_json(),
            "snapshots": self.snapshots,
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "seed": self.seed,
            "pipeline": {k: getattr(pc, k) for k in pc.__dataclass_fields__},
            "estimators": list(self.estimators),
            "baseline_step": dict(self.baseline_step),
        }

    def to_json(self, **kwargs) -> str:
        d = self.to_dict()
        d["pipeline"]["stage_schedule"] = [list(s) for s in d["pipeline"]["stage_schedule"]]
        return json.dumps(d, **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        unknown = set(d) - _KEYS
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        if "array" not in d or "sources" not in d:
            raise ValueError("scenario needs 'array' and 'sources'")
        arr = d["array"]
        unknown = set(arr) - _ARRAY_KEYS
        if unknown:
            raise ValueError(f"unknown array keys: {sorted(unknown)}")
        cfg = ArrayConfig(**arr)
        sources = SourceSet.from_angles([tuple(a) for a in d["sources"]], d.get("powers"))
        if d.get("coupling") is None:
            c = CouplingVector.identity(cfg.n_sensors)
        else:
            c = CouplingVector([complex(re, im) for re, im in d["coupling"]], cfg.n_sensors,
                               check_decay=False)
        kw = {k: d[k] for k in ("snapshots", "trials", "seed", "estimators", "baseline_step")
              if k in d}
        if "snr_db" in d:
            kw["snr_db"] = [float(s) for s in d["snr_db"]]
        pipeline = PipelineConfig.from_dict(d.get("pipeline", {}))
        return cls(cfg, sources, c, pipeline=pipeline, **kw)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_json(Path(path).read_text())


def reference_scenario(**overrides) -> Scenario:
    """Fifteen-sensor UCA, three sources, reference coupling, T = 200."""
    base = Scenario(reference_array(), SourceSet.from_angles(REFERENCE_ANGLES), reference_coupling(),
                    estimators=list(ESTIMATORS))
    if not overrides:
        return base
    d = base.to_dict()
    d.update(overrides)
    return Scenario.from_dict(d)
