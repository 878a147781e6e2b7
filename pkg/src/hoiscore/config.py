"""Run configuration: defaults, config-file loading, CLI overrides.

Precedence: CLI flag > config file > default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

HEAD_ORDER = ("tf", "tc", "vi", "vc")


@dataclass
class RunConfig:
    tau: float = 0.1
    gamma: float = 1.0
    lambda_neg: float = 1.0
    j_capacity: int = 8
    m_rows: int = 50
    detection_threshold: float = 0.2
    min_keep: int = 3
    max_keep: int = 15
    pseudo_threshold: float = 0.9
    heads: tuple = HEAD_ORDER
    bias_enable: bool = True
    mhom_enable: bool = True
    held_out: tuple = ()
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not (0.0 <= self.detection_threshold <= 1.0):
            raise ValueError("detection threshold must lie in [0, 1]")
        if not (0.0 <= self.pseudo_threshold <= 1.0):
            raise ValueError("pseudolabel threshold must lie in [0, 1]")
        if not (1 <= self.min_keep <= self.max_keep):
            raise ValueError("need 1 <= min_keep <= max_keep")
        if self.j_capacity < 1 or self.m_rows < 1:
            raise ValueError("J and M must be positive")
        heads = tuple(h for h in HEAD_ORDER if h in set(self.heads))
        if not heads:
            raise ValueError("at least one head must be enabled")
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "held_out", tuple(sorted(set(self.held_out))))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["heads"] = list(self.heads)
        d["held_out"] = list(self.held_out)
        return d


def load_config(path=None, overrides=None) -> RunConfig:
    """Build the effective config from an optional JSON file plus overrides."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(json.load(fh))
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    known = RunConfig.__dataclass_fields__
    unknown = set(values) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)
