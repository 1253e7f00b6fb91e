"""Labeled Fourier-spectrum datasets built from probe trajectories.

Each example is the one-sided DFT modulus (51 bins) of a 101-point probe
trajectory, labeled with the generating (omega_p, s, gamma0).  Generation
is deterministic: every example owns an RNG stream derived from
(master_seed, example index), so results do not depend on worker count or
scheduling.  Datasets persist as a CSV plus a JSON manifest sidecar.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ValidationError
from .quantum import (
    GRID_FEATURES,
    ProbeSetup,
    TimeGrid,
    Trajectory,
    build_liouvillian,
    plus_plus_state,
    propagate,
)

#: one-sided bin count of the canonical 101-point series
M_BINS = GRID_FEATURES.n // 2 + 1

NOISE_AMPLITUDE_MODES = ("max_abs", "peak_to_peak")


def bin_frequencies() -> np.ndarray:
    """Angular frequency label of each bin: w_k = 2*pi*k / t_final."""
    return 2.0 * math.pi * np.arange(M_BINS) / GRID_FEATURES.t_final


@dataclass(frozen=True)
class SpectrumLabel:
    omega_p: float
    s: float
    gamma0: float


@dataclass(frozen=True)
class Spectrum:
    """One-sided DFT modulus of a probe trajectory plus provenance."""

    moduli: np.ndarray
    label: SpectrumLabel | None = None
    noise_pct: float = 0.0
    seed_path: str = ""

    def __post_init__(self):
        if self.moduli.shape != (M_BINS,):
            raise ValidationError(f"spectrum must have {M_BINS} bins")

    def __eq__(self, other):
        return (
            isinstance(other, Spectrum)
            and np.array_equal(self.moduli, other.moduli)
            and self.label == other.label
            and self.noise_pct == other.noise_pct
            and self.seed_path == other.seed_path
        )


def fourier_modulus(traj: Trajectory, label: SpectrumLabel | None = None,
                    noise_pct: float = 0.0, seed_path: str = "") -> Spectrum:
    """DFT modulus of the canonical 101-point trajectory, normalized by N."""
    if len(traj.values) != GRID_FEATURES.n:
        raise ValidationError(
            f"expected the canonical {GRID_FEATURES.n}-point grid, got {len(traj.values)}"
        )
    moduli = np.abs(np.fft.rfft(traj.values)) / GRID_FEATURES.n
    return Spectrum(moduli=moduli, label=label, noise_pct=noise_pct, seed_path=seed_path)


def add_noise(
    traj: Trajectory,
    pct: float,
    rng: np.random.Generator,
    amplitude: str = "max_abs",
) -> Trajectory:
    """Add i.i.d. Gaussian noise with std = (pct/100) * amplitude(clean).

    amplitude "max_abs" uses max|f| of the clean trajectory, "peak_to_peak"
    uses max - min.
    """
    if pct < 0:
        raise ValidationError("noise percentage must be >= 0")
    if amplitude not in NOISE_AMPLITUDE_MODES:
        raise ValidationError(f"unknown amplitude mode {amplitude!r}")
    if pct == 0:
        return Trajectory(traj.observable, traj.times, traj.values.copy())
    if amplitude == "max_abs":
        amp = float(np.max(np.abs(traj.values)))
    else:
        amp = float(np.max(traj.values) - np.min(traj.values))
    noisy = traj.values + (pct / 100.0) * amp * rng.standard_normal(len(traj.values))
    return Trajectory(traj.observable, traj.times, noisy)


@dataclass(frozen=True)
class DatasetConfig:
    """Grid specification for one dataset.

    The grid is the product gamma0_values x s_values x omega_p points x
    replicates, flattened in that order; `subsample` keeps a seeded random
    subset of the full grid.  Replicates re-noise the same clean trajectory
    with independent streams.
    """

    omega_p_interval: tuple[float, float] = (0.9, 1.15)
    omega_p_count: int = 100
    s_values: tuple[float, ...] = (0.5, 1.0, 2.0)
    gamma0_values: tuple[float, ...] = (0.01,)
    lam: float = 0.2
    noise_pct: float = 0.0
    noise_amplitude: str = "max_abs"
    replicates: int = 1
    subsample: int | None = None
    master_seed: int = 0
    train_fraction: float = 0.8
    grid: TimeGrid = GRID_FEATURES

    def __post_init__(self):
        if self.omega_p_count < 1 or not self.s_values or not self.gamma0_values:
            raise ValidationError("grid counts must be >= 1")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie in (0, 1)")
        if self.noise_pct < 0:
            raise ValidationError("noise_pct must be >= 0")
        if self.noise_amplitude not in NOISE_AMPLITUDE_MODES:
            raise ValidationError(f"unknown amplitude mode {self.noise_amplitude!r}")

    @property
    def omega_p_points(self) -> np.ndarray:
        lo, hi = self.omega_p_interval
        if self.omega_p_count == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, self.omega_p_count)

    def grid_size(self) -> int:
        return (
            len(self.gamma0_values)
            * len(self.s_values)
            * self.omega_p_count
            * self.replicates
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"t_final": self.grid.t_final, "n": self.grid.n}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        d = dict(d)
        g = d.pop("grid")
        return cls(
            omega_p_interval=tuple(d.pop("omega_p_interval")),
            s_values=tuple(d.pop("s_values")),
            gamma0_values=tuple(d.pop("gamma0_values")),
            grid=TimeGrid(g["t_final"], g["n"]),
            **d,
        )


@dataclass
class LabeledDataset:
    examples: list[Spectrum]
    config: DatasetConfig
    manifest: dict = field(default_factory=dict)
    train_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.examples)

    def features(self) -> np.ndarray:
        return np.stack([ex.moduli for ex in self.examples])

    def label_array(self, name: str) -> np.ndarray:
        return np.array([getattr(ex.label, name) for ex in self.examples])

    def take(self, indices) -> "LabeledDataset":
        return LabeledDataset(
            examples=[self.examples[i] for i in indices],
            config=self.config,
            manifest=dict(self.manifest),
        )

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        same_split = (
            (self.train_idx is None) == (other.train_idx is None)
            and (self.train_idx is None or np.array_equal(self.train_idx, other.train_idx))
            and (self.test_idx is None) == (other.test_idx is None)
            and (self.test_idx is None or np.array_equal(self.test_idx, other.test_idx))
        )
        return (
            self.examples == other.examples
            and self.config == other.config
            and same_split
        )


def _example_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)))
    )


# process-local memo of clean probe trajectories; noise sweeps re-noise the
# same grid at every level, so propagation cost is paid once per point
_TRAJ_CACHE: dict = {}
_TRAJ_CACHE_LIMIT = 100_000


def _clean_trajectory(args) -> tuple[tuple, np.ndarray]:
    key, lam, grid = args
    cache_key = (key, lam, grid.t_final, grid.n)
    hit = _TRAJ_CACHE.get(cache_key)
    if hit is not None:
        return key, hit
    omega_p, s, gamma0 = key
    setup = ProbeSetup(omega_p=omega_p, lam=lam, gamma0=gamma0, s=s)
    _, traj_p = propagate(build_liouvillian(setup), plus_plus_state(), grid)
    if len(_TRAJ_CACHE) >= _TRAJ_CACHE_LIMIT:
        _TRAJ_CACHE.clear()
    _TRAJ_CACHE[cache_key] = traj_p.values
    return key, traj_p.values


def generate(config: DatasetConfig, jobs: int = 1) -> LabeledDataset:
    """Propagate every grid point, apply noise, and collect spectra.

    Examples are ordered by flat grid index; the per-example seed path is
    "{master_seed}/{index}".
    """
    entries = []  # (index, key, replicate)
    index = 0
    for gamma0 in config.gamma0_values:
        for s in config.s_values:
            for omega_p in config.omega_p_points:
                for _ in range(config.replicates):
                    entries.append((index, (float(omega_p), float(s), float(gamma0))))
                    index += 1

    if config.subsample is not None:
        if config.subsample > len(entries):
            raise ValidationError("subsample exceeds grid size")
        rng = _example_rng(config.master_seed, len(entries))
        keep = set(rng.choice(len(entries), size=config.subsample, replace=False).tolist())
        entries = [e for e in entries if e[0] in keep]

    keys = sorted({key for _, key in entries})
    tasks = [(key, config.lam, config.grid) for key in keys]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            clean = dict(pool.map(_clean_trajectory, tasks, chunksize=8))
    else:
        clean = dict(map(_clean_trajectory, tasks))

    times = config.grid.times
    examples = []
    for idx, key in entries:
        omega_p, s, gamma0 = key
        traj = Trajectory("probe_x", times, clean[key])
        noisy = add_noise(
            traj,
            config.noise_pct,
            _example_rng(config.master_seed, idx),
            amplitude=config.noise_amplitude,
        )
        examples.append(
            fourier_modulus(
                noisy,
                label=SpectrumLabel(omega_p=omega_p, s=s, gamma0=gamma0),
                noise_pct=config.noise_pct,
                seed_path=f"{config.master_seed}/{idx}",
            )
        )

    from . import __version__

    manifest = {
        "config": config.to_dict(),
        "code_version": __version__,
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "n_examples": len(examples),
    }
    return LabeledDataset(examples=examples, config=config, manifest=manifest)


def _strata(ds: LabeledDataset, by: str) -> dict:
    groups: dict = {}
    for i, ex in enumerate(ds.examples):
        groups.setdefault(getattr(ex.label, by), []).append(i)
    return groups


def split(
    ds: LabeledDataset,
    train_fraction: float | None = None,
    seed: int = 0,
    stratify_by: str | None = "s",
) -> tuple[LabeledDataset, LabeledDataset]:
    """Random disjoint train/test split, stratified by a label field.

    The default fraction comes from the dataset config (0.8, i.e. a test
    set of size 0.25x the train set).
    """
    if not ds.examples:
        raise ValidationError("cannot split an empty dataset")
    frac = ds.config.train_fraction if train_fraction is None else train_fraction
    if not 0.0 < frac < 1.0:
        raise ValidationError("train fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    if stratify_by is None:
        perm = rng.permutation(len(ds))
        n_train = round(frac * len(ds))
        train_idx = sorted(perm[:n_train].tolist())
    else:
        for _, idxs in sorted(_strata(ds, stratify_by).items()):
            perm = rng.permutation(len(idxs))
            n_train = round(frac * len(idxs))
            train_idx.extend(idxs[i] for i in perm[:n_train])
        train_idx.sort()
    test_idx = sorted(set(range(len(ds))) - set(train_idx))
    train = ds.take(train_idx)
    test = ds.take(test_idx)
    ds.train_idx = np.array(train_idx, dtype=int)
    ds.test_idx = np.array(test_idx, dtype=int)
    return train, test


def kfold(ds: LabeledDataset, k: int, seed: int = 0) -> list[tuple[LabeledDataset, LabeledDataset]]:
    """k disjoint exhaustive folds as (train, test) dataset pairs."""
    if k < 2 or k > len(ds):
        raise ValidationError(f"k must satisfy 2 <= k <= {len(ds)}, got {k}")
    perm = np.random.default_rng(seed).permutation(len(ds))
    chunks = np.array_split(perm, k)
    pairs = []
    for i in range(k):
        test = sorted(chunks[i].tolist())
        train = sorted(np.concatenate([chunks[j] for j in range(k) if j != i]).tolist())
        pairs.append((ds.take(train), ds.take(test)))
    return pairs


@dataclass(frozen=True)
class Scaler:
    """Per-bin standardization fitted on a training set."""

    mean: np.ndarray
    std: np.ndarray  # zero-variance bins carry std = 1 (pass-through)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(mean=np.array(d["mean"]), std=np.array(d["std"]))


def standardize(train: np.ndarray, *others: np.ndarray) -> tuple:
    """Fit per-bin mean/std on train, transform all sets; returns (+ scaler)."""
    if train.size == 0:
        raise ValidationError("cannot standardize an empty training set")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    zero = std == 0.0
    std = np.where(zero, 1.0, std)
    mean = np.where(zero, 0.0, mean)
    scaler = Scaler(mean=mean, std=std)
    out = [scaler.transform(x) for x in (train, *others)]
    return (*out, scaler)


CSV_HEADER = (
    ["omega_p", "s", "gamma0", "noise_pct", "seed_index"]
    + [f"bin_{k}" for k in range(M_BINS)]
)


def save(ds: LabeledDataset, path: str | Path) -> None:
    """Write the dataset CSV and its JSON manifest sidecar."""
    path = Path(path)
    lines = [",".join(CSV_HEADER)]
    for ex in ds.examples:
        seed_index = ex.seed_path.split("/")[-1] if ex.seed_path else ""
        row = [
            repr(float(ex.label.omega_p)),
            repr(float(ex.label.s)),
            repr(float(ex.label.gamma0)),
            repr(float(ex.noise_pct)),
            seed_index,
        ] + [repr(float(v)) for v in ex.moduli]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    manifest = dict(ds.manifest)
    manifest["config"] = ds.config.to_dict()
    if ds.train_idx is not None:
        manifest["train_idx"] = ds.train_idx.tolist()
        manifest["test_idx"] = ds.test_idx.tolist()
    manifest_path = path.with_suffix(path.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")


def load(path: str | Path) -> LabeledDataset:
    """Inverse of save(); bit-exact round trip."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if header != CSV_HEADER:
        raise DataFormatError(f"{path}:1: header mismatch (expected {len(CSV_HEADER)} columns)")

    manifest_path = path.with_suffix(path.suffix + ".manifest.json")
    if not manifest_path.exists():
        raise DataFormatError(f"{manifest_path}: manifest sidecar missing")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    config = DatasetConfig.from_dict(manifest["config"])

    examples = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CSV_HEADER):
            raise DataFormatError(f"{path}:{ln}: expected {len(CSV_HEADER)} fields")
        try:
            omega_p, s, gamma0, noise_pct = (float(v) for v in parts[:4])
            moduli = np.array([float(v) for v in parts[5:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{ln}: {exc}") from exc
        seed_path = f"{config.master_seed}/{parts[4]}" if parts[4] else ""
        examples.append(
            Spectrum(
                moduli=moduli,
                label=SpectrumLabel(omega_p=omega_p, s=s, gamma0=gamma0),
                noise_pct=noise_pct,
                seed_path=seed_path,
            )
        )
    ds = LabeledDataset(examples=examples, config=config, manifest=manifest)
    if "train_idx" in manifest:
        ds.train_idx = np.array(manifest["train_idx"], dtype=int)
        ds.test_idx = np.array(manifest["test_idx"], dtype=int)
    return ds
