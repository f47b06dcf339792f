"""Experiment configuration schema and result envelopes.

Configs are single JSON documents. Gate layers are ``{kind, qubits,
params}`` objects, noise is ``{flip: {gate1: p, gate2: p, gate3: p}, ...}``,
and every key is validated: unknown keys are rejected so a typo cannot
silently change an experiment. Sampling commands must carry a seed; given
(config, seed, workers) the emitted payload is reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .channels import GATE_ARITY, GateSpec, NoiseModel, ProcessSpec


class ConfigError(ValueError):
    """A configuration document failed schema validation."""


_GATE_PARAM_KEYS = {"theta", "lam", "phi"}
_NOISE_KEYS = {"flip", "flip_qubits", "overrotation"}
_SWEEP_KEYS = {"kinds", "qubit", "theta_start", "theta_stop", "steps", "sampled"}

_COMMON_KEYS = {"n", "process", "seed", "workers"}
_ALLOWED_KEYS = {
    "exact": _COMMON_KEYS | {"subsets"},
    "sample": _COMMON_KEYS | {"noise", "shots", "gates", "marginals_only", "subsets", "cross_check"},
    "hiqi": _COMMON_KEYS | {"noise", "shots", "gates", "marginals_only", "delta"},
    "junta-test": _COMMON_KEYS | {"noise", "shots", "gates", "marginals_only", "delta", "k"},
    "junta-learn": _COMMON_KEYS
    | {"noise", "shots", "gates", "marginals_only", "delta", "shots_per_setting", "tomography_flip", "target_cap"},
    "sweep": _COMMON_KEYS | {"noise", "shots", "gates", "sweep"},
}
_SAMPLED_COMMANDS = {"sample", "hiqi", "junta-test", "junta-learn"}

GATE_MODE_NAMES = {"2": "two", "3": "three", "rand1": "rand1", "rand2": "rand2"}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _as_int(value: Any, name: str, minimum: int | None = None) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an integer")
    if minimum is not None:
        _require(value >= minimum, f"{name} must be >= {minimum}, got {value}")
    return value


def _as_number(value: Any, name: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"{name} must be a number")
    return float(value)


def parse_gate(entry: Any, index: int) -> GateSpec:
    _require(isinstance(entry, dict), f"process[{index}] must be an object")
    unknown = set(entry) - {"kind", "qubits", "params"}
    _require(not unknown, f"process[{index}] has unknown keys {sorted(unknown)}")
    _require("kind" in entry and "qubits" in entry, f"process[{index}] needs 'kind' and 'qubits'")
    kind = entry["kind"]
    _require(isinstance(kind, str) and kind.lower() in GATE_ARITY, f"process[{index}] has unknown kind {kind!r}")
    qubits = entry["qubits"]
    _require(
        isinstance(qubits, list) and all(isinstance(q, int) for q in qubits),
        f"process[{index}].qubits must be a list of integers",
    )
    params = entry.get("params", {})
    _require(isinstance(params, dict), f"process[{index}].params must be an object")
    unknown = set(params) - _GATE_PARAM_KEYS
    _require(not unknown, f"process[{index}].params has unknown keys {sorted(unknown)}")
    try:
        return GateSpec(
            kind=kind,
            qubits=tuple(qubits),
            theta=params.get("theta"),
            lam=params.get("lam"),
            phi=params.get("phi", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"process[{index}]: {exc}") from exc


def parse_noise(entry: Any) -> NoiseModel:
    _require(isinstance(entry, dict), "noise must be an object")
    unknown = set(entry) - _NOISE_KEYS
    _require(not unknown, f"noise has unknown keys {sorted(unknown)}")
    flip = entry.get("flip", {})
    _require(isinstance(flip, dict), "noise.flip must be an object")
    unknown = set(flip) - {"gate1", "gate2", "gate3"}
    _require(not unknown, f"noise.flip has unknown keys {sorted(unknown)}")
    probs = tuple(_as_number(flip.get(f"gate{l}", 0.0), f"noise.flip.gate{l}") for l in (1, 2, 3))
    flip_qubits = entry.get("flip_qubits")
    if flip_qubits is not None:
        _require(
            isinstance(flip_qubits, list) and all(isinstance(q, int) for q in flip_qubits),
            "noise.flip_qubits must be a list of qubit positions",
        )
        flip_qubits = tuple(flip_qubits)
    over = entry.get("overrotation")
    if over is not None:
        over = _as_number(over, "noise.overrotation")
    try:
        return NoiseModel(flip_probs=probs, flip_qubits=flip_qubits, overrotation=over)
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc


@dataclass(frozen=True)
class SweepGrid:
    kinds: tuple[str, ...]
    qubit: int
    theta_start: float
    theta_stop: float
    steps: int
    sampled: bool

    def thetas(self) -> list[float]:
        if self.steps == 1:
            return [self.theta_start]
        step = (self.theta_stop - self.theta_start) / (self.steps - 1)
        return [self.theta_start + i * step for i in range(self.steps)]


def parse_sweep(entry: Any) -> SweepGrid:
    _require(isinstance(entry, dict), "sweep must be an object")
    unknown = set(entry) - _SWEEP_KEYS
    _require(not unknown, f"sweep has unknown keys {sorted(unknown)}")
    kinds = entry.get("kinds")
    _require(
        isinstance(kinds, list) and kinds and all(k in ("rx", "ry", "rz") for k in kinds),
        "sweep.kinds must be a non-empty list drawn from ['rx', 'ry', 'rz']",
    )
    steps = _as_int(entry.get("steps"), "sweep.steps", 1)
    return SweepGrid(
        kinds=tuple(kinds),
        qubit=_as_int(entry.get("qubit", 1), "sweep.qubit", 1),
        theta_start=_as_number(entry.get("theta_start", 0.0), "sweep.theta_start"),
        theta_stop=_as_number(entry.get("theta_stop", 0.0), "sweep.theta_stop"),
        steps=steps,
        sampled=bool(entry.get("sampled", False)),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment description for one command."""

    command: str
    n: int
    process: ProcessSpec
    noise: NoiseModel | None = None
    shots: int | None = None
    gates: str = "two"
    marginals_only: bool = False
    subsets: tuple[tuple[int, ...], ...] | None = None
    delta: float | None = None
    k: int | None = None
    shots_per_setting: int | None = None
    tomography_flip: float = 0.0
    target_cap: int = 2
    sweep: SweepGrid | None = None
    cross_check: bool = False
    seed: int | None = None
    workers: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, doc: dict, command: str) -> "ExperimentConfig":
        _require(command in _ALLOWED_KEYS, f"unknown command {command!r}")
        _require(isinstance(doc, dict), "config document must be a JSON object")
        unknown = set(doc) - _ALLOWED_KEYS[command]
        _require(not unknown, f"config has keys not accepted by '{command}': {sorted(unknown)}")

        n = _as_int(doc.get("n"), "n", 1) if "n" in doc else _fail_missing("n")
        layers = doc.get("process", [])
        _require(isinstance(layers, list), "process must be a list of gate objects")
        try:
            process = ProcessSpec(n, tuple(parse_gate(g, i) for i, g in enumerate(layers)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        noise = parse_noise(doc["noise"]) if doc.get("noise") is not None else None

        gates = doc.get("gates", "2")
        _require(gates in GATE_MODE_NAMES, f"gates must be one of {sorted(GATE_MODE_NAMES)}, got {gates!r}")

        seed = doc.get("seed")
        if seed is not None:
            seed = _as_int(seed, "seed", 0)
        needs_seed = command in _SAMPLED_COMMANDS or (
            command == "sweep" and doc.get("sweep", {}).get("sampled", False)
        )
        _require(seed is not None or not needs_seed, f"command '{command}' samples and requires a seed")

        subsets = None
        if doc.get("subsets") is not None:
            raw_subsets = doc["subsets"]
            _require(
                isinstance(raw_subsets, list)
                and all(isinstance(s, list) and all(isinstance(q, int) for q in s) for s in raw_subsets),
                "subsets must be a list of lists of qubit positions",
            )
            subsets = tuple(tuple(s) for s in raw_subsets)

        cfg = cls(
            command=command,
            n=n,
            process=process,
            noise=noise,
            shots=_as_int(doc["shots"], "shots", 1) if "shots" in doc else None,
            gates=GATE_MODE_NAMES[gates],
            marginals_only=bool(doc.get("marginals_only", False)),
            subsets=subsets,
            delta=_as_number(doc["delta"], "delta") if "delta" in doc else None,
            k=_as_int(doc["k"], "k", 1) if "k" in doc else None,
            shots_per_setting=_as_int(doc["shots_per_setting"], "shots_per_setting", 1)
            if "shots_per_setting" in doc
            else None,
            tomography_flip=_as_number(doc.get("tomography_flip", 0.0), "tomography_flip"),
            target_cap=_as_int(doc.get("target_cap", 2), "target_cap", 1),
            sweep=parse_sweep(doc["sweep"]) if "sweep" in doc else None,
            cross_check=bool(doc.get("cross_check", False)),
            seed=seed,
            workers=_as_int(doc.get("workers", 1), "workers", 1),
            raw=doc,
        )
        cfg._check_command_requirements()
        return cfg

    def _check_command_requirements(self) -> None:
        c = self.command
        if c in _SAMPLED_COMMANDS:
            _require(self.shots is not None, f"command '{c}' requires 'shots'")
        if c in ("hiqi", "junta-test", "junta-learn"):
            _require(self.delta is not None and self.delta > 0, f"command '{c}' requires a positive 'delta'")
            _require(self.gates in ("two", "three"), f"command '{c}' requires gates '2' or '3'")
        if c == "junta-test":
            _require(self.k is not None, "command 'junta-test' requires 'k'")
            _require(1 <= self.k < self.n, f"k must satisfy 1 <= k < n, got k={self.k}, n={self.n}")
        if c == "junta-learn":
            _require(self.shots_per_setting is not None, "command 'junta-learn' requires 'shots_per_setting'")
        if c == "sweep":
            _require(self.sweep is not None, "command 'sweep' requires a 'sweep' grid")
            if self.sweep.sampled:
                _require(self.shots is not None, "a sampled sweep requires 'shots'")
            _require(self.sweep.qubit <= self.n, "sweep.qubit exceeds n")

    def resolved(self) -> dict:
        """Config echo with defaults filled in, for the result envelope."""
        out: dict[str, Any] = {
            "command": self.command,
            "n": self.n,
            "process": [
                {
                    "kind": g.kind,
                    "qubits": list(g.qubits),
                    "params": {
                        k: v
                        for k, v in (("theta", g.theta), ("lam", g.lam), ("phi", g.phi))
                        if v is not None and not (k == "phi" and v == 0.0)
                    },
                }
                for g in self.process.layers
            ],
            "gates": self.gates,
            "marginals_only": self.marginals_only,
            "seed": self.seed,
            "workers": self.workers,
        }
        if self.noise is not None:
            out["noise"] = {
                "flip": {f"gate{l}": self.noise.flip_probs[l - 1] for l in (1, 2, 3)},
                "flip_qubits": None if self.noise.flip_qubits is None else list(self.noise.flip_qubits),
                "overrotation": self.noise.overrotation,
            }
        for key in ("shots", "delta", "k", "shots_per_setting", "subsets", "cross_check"):
            value = getattr(self, key.replace("-", "_"))
            if value is not None and value is not False:
                out[key] = list(map(list, value)) if key == "subsets" else value
        if self.sweep is not None:
            out["sweep"] = {
                "kinds": list(self.sweep.kinds),
                "qubit": self.sweep.qubit,
                "theta_start": self.sweep.theta_start,
                "theta_stop": self.sweep.theta_stop,
                "steps": self.sweep.steps,
                "sampled": self.sweep.sampled,
            }
        return out


def _fail_missing(key: str):
    raise ConfigError(f"config is missing required key '{key}'")


def load_config(path: str | Path, command: str) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(doc, command)
