"""Run configuration and JSON verification reports."""

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA = 1


@dataclass(frozen=True)
class RunConfig:
    """Everything besides the input files that determines a report."""

    seed: int = 0
    tau_act: float | None = None
    tau_mem: float = 1e-9
    tau_fd: float = 1e-4
    tau_rank: float = 1e-8
    samples: int = 1000
    probes: int | None = None
    step: float = 1e-5
    delta: float | None = None
    threads: int = 1
    timings: bool = False
    out: str | None = None

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("tau_act", "tau_mem", "tau_fd", "tau_rank", "step", "delta"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("samples", "probes", "threads"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be at least 1")

    def public(self):
        """Settings recorded in the report (output path and timing switch excluded)."""
        d = asdict(self)
        d.pop("out")
        d.pop("timings")
        return d


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


@dataclass
class Report:
    command: str
    config: RunConfig
    inputs: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    result: dict = field(default_factory=dict)
    error: dict | None = None
    _clock: float = field(default_factory=time.perf_counter, repr=False)

    def add_input(self, path):
        self.inputs.append({"path": str(path), "sha256": file_digest(path)})

    def check(self, name, passed, residual=None, **extra):
        """Record a check; its runtime is the time since the previous check (kept only with timings on)."""
        if any(c["name"] == name for c in self.checks):
            raise ValueError(f"check {name!r} recorded twice")
        entry = {"name": name, "status": "pass" if passed else "fail", "residual": residual, **extra}
        now = time.perf_counter()
        if self.config.timings:
            entry["runtime"] = now - self._clock
        self._clock = now
        self.checks.append(entry)

    @property
    def status(self):
        if self.error is not None:
            return "error"
        return "pass" if all(c["status"] == "pass" for c in self.checks) else "fail"

    @property
    def exit_code(self):
        return {"pass": 0, "fail": 1, "error": 2}[self.status]

    def to_dict(self):
        d = {
            "schema": SCHEMA,
            "tool": "momentangle",
            "version": __version__,
            "command": self.command,
            "config": self.config.public(),
            "inputs": self.inputs,
            "checks": self.checks,
            "result": self.result,
            "status": self.status,
        }
        if self.error is not None:
            d["error"] = self.error
        return jsonable(d)

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
