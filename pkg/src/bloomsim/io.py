"""Run configuration, plain-text file formats and run manifests.

Config documents are JSON key/value objects with a closed key set; parsing
collects every violation before failing so a bad file is fixed in one pass.
Snapshots and timeseries are plain text written with 17 significant digits,
which round-trips float64 exactly and stays diff-able.  A RunManifest echoes
the fully resolved config (including the concrete stepper backend) plus a
checksum per output file; feeding a manifest back as the config replays the
run bitwise, and refuses to run if the recorded backend is unavailable
rather than silently switching.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from ._version import __version__
from .errors import ConfigError
from .model import KernelSpec, SpatialGrid
from .noise import ApproxCoefficient, NoiseSpec
from .solver import SolverConfig
from .spectral import EigenBasis

__all__ = [
    "RunConfig",
    "RunManifest",
    "OutputRecord",
    "parse_config",
    "write_snapshot",
    "read_snapshot",
    "write_timeseries",
    "read_timeseries",
    "sha256_file",
]

_DEFAULTS = {
    "D": 1.0,
    "lambda": 1.0,
    "L": 1.0,
    "N": 256,
    "J": None,  # N // 2 when absent
    "r0": 0.05,
    "r1": 0.25,
    "dt": 1e-4,
    "t_end": 1.0,
    "n_approx": 4,
    "seed": 0,
    "stream_id": 0,
    "mode": "exponential_euler",
    "snapshot_every": 100,
    "u0": "constant:1.0",
    "kernel": "on",
    "continuity_fix": True,
    "backend": "auto",
}
_REAL_KEYS = ("D", "lambda", "L", "r0", "r1", "dt", "t_end")
_INT_KEYS = ("N", "J", "n_approx", "seed", "stream_id", "snapshot_every")
_STR_KEYS = ("mode", "u0", "kernel", "backend")
_MODES = ("exponential_euler", "deterministic", "picard")
_BACKENDS = ("auto", "cython", "python")


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description; builders derive the model objects."""

    D: float
    lam: float
    L: float
    N: int
    J: int
    r0: float
    r1: float
    dt: float
    t_end: float
    n_approx: int
    seed: int
    stream_id: int
    mode: str
    snapshot_every: int
    u0: str
    kernel: str
    continuity_fix: bool
    backend: str

    def to_doc(self) -> dict:
        d = {
            "D": self.D,
            "lambda": self.lam,
            "L": self.L,
            "N": self.N,
            "J": self.J,
            "r0": self.r0,
            "r1": self.r1,
            "dt": self.dt,
            "t_end": self.t_end,
            "n_approx": self.n_approx,
            "seed": self.seed,
            "stream_id": self.stream_id,
            "mode": self.mode,
            "snapshot_every": self.snapshot_every,
            "u0": self.u0,
            "kernel": self.kernel,
            "continuity_fix": self.continuity_fix,
            "backend": self.backend,
        }
        return d

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    def make_grid(self) -> SpatialGrid:
        return SpatialGrid(L=self.L, N=self.N)

    def make_basis(self, grid: SpatialGrid | None = None) -> EigenBasis:
        return EigenBasis(grid=grid or self.make_grid(), D=self.D, J=self.J)

    def make_kernel(self, grid: SpatialGrid | None = None) -> KernelSpec | None:
        if self.kernel == "off":
            return None
        return KernelSpec(grid=grid or self.make_grid(), r0=self.r0, r1=self.r1)

    def make_coeff(self) -> ApproxCoefficient:
        return ApproxCoefficient(lam=self.lam, n=self.n_approx, continuity_fix=self.continuity_fix)

    def make_noise(self) -> NoiseSpec:
        return NoiseSpec(seed=self.seed, stream_id=self.stream_id)

    def make_solver(self) -> SolverConfig:
        return SolverConfig(
            dt=self.dt,
            t_end=self.t_end,
            snapshot_every=self.snapshot_every,
            mode=self.mode,
        )

    def make_initial_field(self, grid: SpatialGrid | None = None) -> np.ndarray:
        grid = grid or self.make_grid()
        kind, payload = _parse_u0(self.u0)
        if kind == "constant":
            return np.full(grid.N, payload)
        if kind == "bump":
            center, width, height = payload
            return height * np.exp(-((grid.x - center) ** 2) / (2.0 * width * width))
        data, L, N, _t = read_snapshot(payload)
        if N != grid.N or L != grid.L:
            raise ConfigError(
                [f"u0 file grid (L={L}, N={N}) does not match run grid (L={grid.L}, N={grid.N})"]
            )
        return data


def _parse_u0(spec: str):
    """Split a u0 preset; raises with every problem found."""
    problems = []
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise ConfigError(
            [f"u0 {spec!r} must look like 'constant:c', 'bump:center,width,height' or 'file:path'"]
        )
    if kind == "constant":
        try:
            return "constant", float(rest)
        except ValueError:
            raise ConfigError([f"u0 constant value {rest!r} is not a number"]) from None
    if kind == "bump":
        parts = rest.split(",")
        if len(parts) != 3:
            raise ConfigError(
                [f"u0 bump needs center,width,height, got {rest!r}"]
            )
        try:
            center, width, height = (float(p) for p in parts)
        except ValueError:
            raise ConfigError([f"u0 bump parameters {rest!r} are not numbers"]) from None
        if width <= 0:
            problems.append(f"u0 bump width > 0 required, got {width}")
        if problems:
            raise ConfigError(problems)
        return "bump", (center, width, height)
    if kind == "file":
        if not rest:
            raise ConfigError(["u0 file path is empty"])
        return "file", rest
    raise ConfigError(
        [f"u0 preset {kind!r} not recognized; expected constant, bump or file"]
    )


def parse_config(source) -> RunConfig:
    """Build a RunConfig from a path, inline JSON text, or a dict.

    A manifest document (recognized by its nested "config" object) is
    unwrapped so a finished run's manifest replays directly.  All violations
    are reported together in one ConfigError.
    """
    doc = _load_doc(source)
    if isinstance(doc.get("config"), dict) and "outputs" in doc:
        doc = doc["config"]
    problems = []
    unknown = sorted(set(doc) - set(_DEFAULTS))
    problems += [f"unknown key {k!r}" for k in unknown]
    vals = dict(_DEFAULTS)
    vals.update({k: v for k, v in doc.items() if k in _DEFAULTS})

    def real(key):
        v = vals[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            problems.append(f"{key} must be a finite number, got {v!r}")
            return None
        return float(v)

    def integer(key):
        v = vals[key]
        if isinstance(v, bool) or not isinstance(v, int):
            problems.append(f"{key} must be an integer, got {v!r}")
            return None
        return v

    nums = {k: real(k) for k in _REAL_KEYS}
    ints = {k: integer(k) for k in _INT_KEYS if not (k == "J" and vals[k] is None)}
    if "J" not in ints and ints.get("N") is not None:
        ints["J"] = max(1, ints["N"] // 2)
    for k in _STR_KEYS:
        if not isinstance(vals[k], str):
            problems.append(f"{k} must be a string, got {vals[k]!r}")
    if not isinstance(vals["continuity_fix"], bool):
        problems.append(f"continuity_fix must be true or false, got {vals['continuity_fix']!r}")

    D, lam, L = nums.get("D"), nums.get("lambda"), nums.get("L")
    r0, r1 = nums.get("r0"), nums.get("r1")
    dt, t_end = nums.get("dt"), nums.get("t_end")
    if D is not None and not D > 0:
        problems.append(f"D > 0 required, got {D}")
    if lam is not None and lam < 0:
        problems.append(f"lambda >= 0 required, got {lam}")
    if L is not None and not L > 0:
        problems.append(f"L > 0 required, got {L}")
    if ints.get("N") is not None and ints["N"] < 2:
        problems.append(f"N >= 2 required, got {ints['N']}")
    if ints.get("J") is not None and ints.get("N") is not None and not (1 <= ints["J"] <= ints["N"]):
        problems.append(f"1 <= J <= N required, got J={ints['J']}, N={ints['N']}")
    if r0 is not None and not r0 > 0:
        problems.append(f"r0 > 0 required, got {r0}")
    if r0 is not None and r1 is not None and not r0 < r1:
        problems.append(f"r0 < r1 required, got r0={r0}, r1={r1}")
    if r1 is not None and L is not None and r1 > L:
        problems.append(f"r1 <= L required, got r1={r1}, L={L}")
    if dt is not None and not dt > 0:
        problems.append(f"dt > 0 required, got {dt}")
    if t_end is not None and not t_end > 0:
        problems.append(f"t_end > 0 required, got {t_end}")
    if dt is not None and t_end is not None and dt > 0 and t_end > 0:
        if dt > t_end:
            problems.append(f"dt <= t_end required, got dt={dt}, t_end={t_end}")
        else:
            n = round(t_end / dt)
            if n < 1 or abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
                problems.append(f"t_end must be an integer multiple of dt, got dt={dt}, t_end={t_end}")
    if ints.get("n_approx") is not None and ints["n_approx"] < 1:
        problems.append(f"n_approx >= 1 required, got {ints['n_approx']}")
    for k in ("seed", "stream_id"):
        if ints.get(k) is not None and not (0 <= ints[k] < 2**64):
            problems.append(f"{k} must fit in uint64, got {ints[k]}")
    if isinstance(vals["mode"], str) and vals["mode"] not in _MODES:
        problems.append(f"mode must be one of {', '.join(_MODES)}, got {vals['mode']!r}")
    if ints.get("snapshot_every") is not None and ints["snapshot_every"] < 1:
        problems.append(f"snapshot_every >= 1 required, got {ints['snapshot_every']}")
    if isinstance(vals["kernel"], str) and vals["kernel"] not in ("on", "off"):
        problems.append(f"kernel must be 'on' or 'off', got {vals['kernel']!r}")
    if isinstance(vals["backend"], str) and vals["backend"] not in _BACKENDS:
        problems.append(f"backend must be one of {', '.join(_BACKENDS)}, got {vals['backend']!r}")
    if isinstance(vals["u0"], str):
        try:
            _parse_u0(vals["u0"])
        except ConfigError as e:
            problems += e.problems
    if problems:
        raise ConfigError(problems)
    return RunConfig(
        D=nums["D"],
        lam=nums["lambda"],
        L=nums["L"],
        N=ints["N"],
        J=ints["J"],
        r0=nums["r0"],
        r1=nums["r1"],
        dt=nums["dt"],
        t_end=nums["t_end"],
        n_approx=ints["n_approx"],
        seed=ints["seed"],
        stream_id=ints["stream_id"],
        mode=vals["mode"],
        snapshot_every=ints["snapshot_every"],
        u0=vals["u0"],
        kernel=vals["kernel"],
        continuity_fix=vals["continuity_fix"],
        backend=vals["backend"],
    )


def _load_doc(source) -> dict:
    if isinstance(source, dict):
        return dict(source)
    text = str(source)
    if not text.lstrip().startswith("{"):
        path = text
        if not os.path.exists(path):
            raise ConfigError([f"config file {path!r} does not exist"])
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"config is not valid JSON: {e}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["config document must be a JSON object"])
    return doc


def write_snapshot(path, grid: SpatialGrid, t: float, values: np.ndarray) -> None:
    """One field to plain text: '# L=.. N=.. t=..' header, one value per line."""
    grid.matches(values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# L={grid.L:.17g} N={grid.N} t={t:.17g}\n")
        for v in values:
            fh.write(f"{v:.17g}\n")


def read_snapshot(path, grid: SpatialGrid | None = None):
    """Read a snapshot back; returns (values, L, N, t).

    With ``grid`` given, a header that does not match the grid is rejected.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline()
            body = fh.read().split()
    except OSError as e:
        raise ConfigError([f"cannot read snapshot {path!r}: {e}"]) from None
    parts = header.strip().split()
    if len(parts) != 4 or parts[0] != "#":
        raise ConfigError([f"snapshot {path!r} has a malformed header: {header.strip()!r}"])
    try:
        L = float(parts[1].removeprefix("L="))
        N = int(parts[2].removeprefix("N="))
        t = float(parts[3].removeprefix("t="))
        values = np.array([float(v) for v in body])
    except ValueError:
        raise ConfigError([f"snapshot {path!r} contains non-numeric data"]) from None
    if values.size != N:
        raise ConfigError(
            [f"snapshot {path!r} holds {values.size} values but header says N={N}"]
        )
    if grid is not None and (N != grid.N or L != grid.L):
        raise ConfigError(
            [f"snapshot header (L={L}, N={N}) does not match grid (L={grid.L}, N={grid.N})"]
        )
    return values, L, N, t


_TS_COLUMNS = ("t", "mass", "positivity_fraction", "db_norm")


def write_timeseries(path, traj) -> None:
    """Per-step scalar series as CSV with a header row."""
    cols = (traj.times, traj.mass, traj.positivity_fraction, traj.db_norm)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(_TS_COLUMNS) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_timeseries(path) -> dict:
    """CSV back to {column: array}; header must match the writer's."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            rows = [line.split(",") for line in fh.read().splitlines() if line]
    except OSError as e:
        raise ConfigError([f"cannot read timeseries {path!r}: {e}"]) from None
    names = tuple(header.split(","))
    if names != _TS_COLUMNS:
        raise ConfigError(
            [f"timeseries {path!r} has columns {names}, expected {_TS_COLUMNS}"]
        )
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError:
        raise ConfigError([f"timeseries {path!r} contains non-numeric data"]) from None
    if data.ndim != 2 or data.shape[1] != len(_TS_COLUMNS):
        raise ConfigError([f"timeseries {path!r} rows are ragged"])
    return {name: data[:, i] for i, name in enumerate(_TS_COLUMNS)}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class OutputRecord:
    """One emitted file: kind, path relative to the run dir, checksum."""

    kind: str
    path: str
    sha256: str


@dataclass
class RunManifest:
    """Everything needed to replay a run plus what it produced.

    Written with exit_status "running" before stepping starts, rewritten
    with the outcome and checksummed outputs afterwards.  Wall-time fields
    are informational; bitwise reproducibility is about the outputs.
    """

    command: str
    config: dict
    version: str = __version__
    started_at: str = ""
    finished_at: str | None = None
    exit_status: str = "running"
    outputs: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @classmethod
    def start(cls, command: str, config_doc: dict, extras: dict | None = None) -> "RunManifest":
        return cls(command=command, config=dict(config_doc), started_at=_now(), extras=dict(extras or {}))

    def finalize(self, status: str, outputs: list[OutputRecord]) -> None:
        self.exit_status = status
        self.finished_at = _now()
        self.outputs = outputs

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "config": self.config,
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "exit_status": self.exit_status,
            "outputs": [vars(r) for r in self.outputs],
            "extras": self.extras,
        }
        return json.dumps(doc, indent=2)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(
            command=doc["command"],
            config=doc["config"],
            version=doc.get("version", ""),
            started_at=doc.get("started_at", ""),
            finished_at=doc.get("finished_at"),
            exit_status=doc.get("exit_status", ""),
            outputs=[OutputRecord(**r) for r in doc.get("outputs", [])],
            extras=doc.get("extras", {}),
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()
