"""Experiment configuration: TOML files, potential presets, validation.

A config file looks like

    [problem]
    m = 2
    k = 1
    shift = 0.0

    [potential.sigma1]
    preset = "bump"        # or an explicit `values = [...]` node array
    amplitude = 0.2

    [potential.sigma2]
    preset = "sine"
    amplitude = 0.3
    frequency = 1
    offset = 0.1

    [truncation]
    n = 30
    n0 = 30
    n_loop = 30

    [numerics]
    rtol = 1e-10
    allow_degenerate_signs = true
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field

import numpy as np

from .gridfn import GridFunction

__all__ = ["PotentialSpec", "ExperimentConfig", "load_config", "PRESETS"]

NODES_PER_UNIT = 200


def _preset_zero(x, l, p):
    return np.zeros_like(x)


def _preset_linear(x, l, p):
    return p.get("slope", 1.0) * x + p.get("offset", 0.0)


def _preset_sine(x, l, p):
    amp = p.get("amplitude", 1.0)
    freq = p.get("frequency", 1)
    phase = p.get("phase", 0.0)
    return amp * np.sin(2.0 * np.pi * freq * x / l + phase) + p.get("offset", 0.0)


def _preset_bump(x, l, p):
    return p.get("amplitude", 1.0) * x * (l - x) + p.get("offset", 0.0)


PRESETS = {
    "zero": _preset_zero,
    "linear": _preset_linear,
    "sine": _preset_sine,
    "bump": _preset_bump,
}


@dataclass(frozen=True)
class PotentialSpec:
    """Either a named preset with parameters or an explicit node array."""

    preset: str | None = None
    params: dict = field(default_factory=dict)
    values: list | None = None

    def validate(self):
        if (self.preset is None) == (self.values is None):
            raise ValueError("potential needs exactly one of 'preset' or 'values'")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset '{self.preset}' (have {sorted(PRESETS)})")
        return self

    def build(self, length: float) -> GridFunction:
        self.validate()
        if self.values is not None:
            return GridFunction(length, self.values)
        n = int(NODES_PER_UNIT * length) + 1
        x = np.linspace(0.0, length, n)
        return GridFunction(length, PRESETS[self.preset](x, length, self.params))

    def to_dict(self) -> dict:
        if self.values is not None:
            return {"values": list(self.values)}
        return {"preset": self.preset, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        d = dict(d)
        if "values" in d:
            return cls(values=[float(v) for v in d.pop("values")], params=d)
        preset = d.pop("preset", None)
        return cls(preset=preset, params=d)


@dataclass
class ExperimentConfig:
    m: int = 2
    k: int = 1
    shift: float = 0.0
    sigma1: PotentialSpec = field(default_factory=lambda: PotentialSpec(preset="zero"))
    sigma2: PotentialSpec = field(default_factory=lambda: PotentialSpec(preset="zero"))
    n: int = 30
    n0: int = 30
    n_loop: int = 30
    rtol: float = 1e-10
    atol: float = 1e-10
    a1_scale: float = 1e-8
    a3_tol: float = 1e-8
    radicand_tol: float = 5e-2
    cond_max: float = 1e8
    kn_grid: int = 512
    gl_grid: int = 200
    gl_nystrom: int = 201
    allow_degenerate_signs: bool = False
    out_dir: str = "out"

    def validate(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if not (1 <= self.k <= self.m):
            raise ValueError(f"branch k must lie in 1..{self.m}")
        if min(self.n, self.n0, self.n_loop) < 1:
            raise ValueError("truncations must be >= 1")
        self.sigma1.validate()
        self.sigma2.validate()
        return self

    def build_potentials(self):
        return self.sigma1.build(float(self.m)), self.sigma2.build(1.0)

    def to_dict(self) -> dict:
        return {
            "problem": {"m": self.m, "k": self.k, "shift": self.shift},
            "potential": {"sigma1": self.sigma1.to_dict(), "sigma2": self.sigma2.to_dict()},
            "truncation": {"n": self.n, "n0": self.n0, "n_loop": self.n_loop},
            "numerics": {
                "rtol": self.rtol, "atol": self.atol, "a1_scale": self.a1_scale,
                "a3_tol": self.a3_tol, "radicand_tol": self.radicand_tol,
                "cond_max": self.cond_max, "kn_grid": self.kn_grid,
                "gl_grid": self.gl_grid, "gl_nystrom": self.gl_nystrom,
                "allow_degenerate_signs": self.allow_degenerate_signs,
            },
            "output": {"dir": self.out_dir},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        problem = d.get("problem", {})
        pot = d.get("potential", {})
        if "sigma2" not in pot:
            raise ValueError("config is missing [potential.sigma2]")
        if "sigma1" not in pot:
            raise ValueError("config is missing [potential.sigma1]")
        trunc = d.get("truncation", {})
        num = d.get("numerics", {})
        out = d.get("output", {})
        cfg = cls(
            m=int(problem.get("m", 2)),
            k=int(problem.get("k", 1)),
            shift=float(problem.get("shift", 0.0)),
            sigma1=PotentialSpec.from_dict(pot["sigma1"]),
            sigma2=PotentialSpec.from_dict(pot["sigma2"]),
            n=int(trunc.get("n", 30)),
            n0=int(trunc.get("n0", 30)),
            n_loop=int(trunc.get("n_loop", trunc.get("n0", 30))),
            rtol=float(num.get("rtol", 1e-10)),
            atol=float(num.get("atol", 1e-10)),
            a1_scale=float(num.get("a1_scale", 1e-8)),
            a3_tol=float(num.get("a3_tol", 1e-8)),
            radicand_tol=float(num.get("radicand_tol", 5e-2)),
            cond_max=float(num.get("cond_max", 1e8)),
            kn_grid=int(num.get("kn_grid", 512)),
            gl_grid=int(num.get("gl_grid", 200)),
            gl_nystrom=int(num.get("gl_nystrom", 201)),
            allow_degenerate_signs=bool(num.get("allow_degenerate_signs", False)),
            out_dir=str(out.get("dir", "out")),
        )
        return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return ExperimentConfig.from_dict(data)
