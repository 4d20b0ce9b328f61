"""Declarative experiment configuration, loaded from JSON."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SCHEMES = (
    "strong-repeat",
    "weak-repeat",
    "protective-branch",
    "two-qubit-protective",
    "info-clone",
    "optimal-clone",
    "linearity-probe",
    "nocloning",
)
EXECUTION_FIELDS = ("out", "workers")
CLONE_KINDS = ("qubit", "d-dimensional", "coherent")

REQUIRED = {
    "strong-repeat": ("amplitudes", "eigenvalues", "repeats"),
    "weak-repeat": ("amplitudes", "eigenvalues", "delta_p", "repeats"),
    "protective-branch": ("amplitudes", "eigenvalues", "t_total"),
    "two-qubit-protective": ("amplitudes", "t_total"),
    "info-clone": ("alpha", "n_clones"),
    "optimal-clone": ("clone_kind", "n_in", "m_out"),
    "linearity-probe": ("amplitudes", "second_amplitudes", "coeffs"),
    "nocloning": ("n_clones",),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def parse_complex(value: Any, name: str = "value") -> complex:
    """Accept a JSON number, an [re, im] pair or a string such as "1+2j"."""
    if isinstance(value, bool):
        raise ConfigError(name, "expected a number")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(name, f"cannot interpret {value!r} as a complex number")


def encode_complex(z: complex) -> Any:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


@dataclass
class ExperimentConfig:
    scheme: str
    amplitudes: list | None = None
    eigenvalues: list[float] | None = None
    observable_matrix: list | None = None
    second_amplitudes: list | None = None
    coeffs: list | None = None
    alpha: Any = None
    beta: Any = None
    delta_p: float | None = None
    repeats: int | None = None
    t_total: float | None = None
    gap: float | None = None
    schedule: str = "ramp"
    steps: int | None = None
    c_coeffs: list[float] = field(default_factory=lambda: [1.0, 1.0, 1.0])
    r0: float = 0.0
    n_clones: int | None = None
    couplings: list[float] | None = None
    n_in: int | None = None
    m_out: int | None = None
    dim: int | None = None
    clone_kind: str | None = None
    overlaps: list | None = None
    snapshot_steps: list[int] | None = None
    record_stride: int | None = None
    trajectories: int = 1
    seed: int = 0
    out: str | None = None
    workers: int = 1
    record_runtime: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"unknown scheme {self.scheme!r}; expected one of {', '.join(SCHEMES)}")
        for name in REQUIRED[self.scheme]:
            if getattr(self, name) is None:
                raise ConfigError(name, f"required for scheme {self.scheme!r}")
        if not isinstance(self.trajectories, int) or self.trajectories < 1:
            raise ConfigError("trajectories", "must be a positive integer")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "must be a positive integer")
        for name in ("repeats", "n_clones", "n_in", "m_out", "dim", "steps", "record_stride"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 1):
                raise ConfigError(name, "must be a positive integer")
        for name in ("delta_p", "t_total", "gap"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(name, "must be a positive number")
        if self.amplitudes is not None:
            self.amplitudes = [parse_complex(a, "amplitudes") for a in self.amplitudes]
        if self.second_amplitudes is not None:
            self.second_amplitudes = [parse_complex(a, "second_amplitudes") for a in self.second_amplitudes]
        if self.coeffs is not None:
            if len(self.coeffs) != 2:
                raise ConfigError("coeffs", "expected two superposition coefficients")
            self.coeffs = [parse_complex(a, "coeffs") for a in self.coeffs]
        for name in ("alpha", "beta"):
            if getattr(self, name) is not None:
                setattr(self, name, parse_complex(getattr(self, name), name))
        if self.overlaps is not None:
            self.overlaps = [parse_complex(c, "overlaps") for c in self.overlaps]
        if self.observable_matrix is not None:
            self.observable_matrix = [[parse_complex(x, "observable_matrix") for x in row] for row in self.observable_matrix]
        if self.eigenvalues is not None and self.amplitudes is not None and self.scheme != "linearity-probe":
            if len(self.eigenvalues) != len(self.amplitudes):
                raise ConfigError("eigenvalues", "need one eigenvalue per amplitude")
        if self.scheme in ("protective-branch", "two-qubit-protective") and len(self.amplitudes) != 2:
            raise ConfigError("amplitudes", "protective schemes act on a qubit (two amplitudes)")
        if self.scheme == "protective-branch" and len(self.c_coeffs) != 3:
            raise ConfigError("c_coeffs", "expected three branch constants")
        if self.scheme == "two-qubit-protective" and self.schedule not in ("ramp", "constant"):
            raise ConfigError("schedule", "must be 'ramp' or 'constant'")
        if self.scheme == "optimal-clone":
            if self.clone_kind not in CLONE_KINDS:
                raise ConfigError("clone_kind", f"expected one of {', '.join(CLONE_KINDS)}")
            if not self.n_in <= self.m_out:
                raise ConfigError("m_out", "must be at least n_in")
            if self.clone_kind == "coherent" and self.alpha is None:
                raise ConfigError("alpha", "required for coherent-state cloning")
            if self.clone_kind != "coherent":
                for name in ("amplitudes", "eigenvalues"):
                    if getattr(self, name) is None:
                        raise ConfigError(name, f"required for {self.clone_kind} cloning")
                if self.dim is not None and self.dim != len(self.amplitudes):
                    raise ConfigError("dim", f"does not match the {len(self.amplitudes)} amplitudes")
                if self.clone_kind == "qubit" and len(self.amplitudes) != 2:
                    raise ConfigError("amplitudes", "qubit cloning needs two amplitudes")
        if self.scheme == "linearity-probe" and self.eigenvalues is None and self.observable_matrix is None:
            raise ConfigError("observable_matrix", "linearity-probe needs eigenvalues or observable_matrix")
        if self.scheme == "info-clone" and self.n_clones < 2:
            raise ConfigError("n_clones", "estimation needs at least two clones")
        if self.snapshot_steps is not None and self.repeats is not None:
            if any((not isinstance(s, int)) or s < 0 or s > self.repeats for s in self.snapshot_steps):
                raise ConfigError("snapshot_steps", f"steps must be integers in [0, {self.repeats}]")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration field")
        if "scheme" not in data:
            raise ConfigError("scheme", "missing")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError("<root>", str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self, *, execution: bool = True) -> dict:
        """JSON-ready echo; ``execution=False`` drops ``out`` and ``workers``,
        which must not influence any recorded result."""
        out = {}
        for f in dataclasses.fields(self):
            if not execution and f.name in EXECUTION_FIELDS:
                continue
            v = getattr(self, f.name)
            if isinstance(v, complex):
                v = encode_complex(v)
            elif isinstance(v, list):
                v = [
                    [encode_complex(x) for x in row] if isinstance(row, list) else (encode_complex(row) if isinstance(row, complex) else row)
                    for row in v
                ]
            out[f.name] = v
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)
