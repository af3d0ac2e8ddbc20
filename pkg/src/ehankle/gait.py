"""Gait-cycle profiles: CSV ingest, resampling, phase lookup and the
ankle-to-cylinder load mapping used to drive the hydraulic simulator."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

MIN_SAMPLES = 8
CSV_HEADER = ("t_frac", "angle_rad", "moment_Nm")


class GaitParseError(ValueError):
    """Base class for problems found while reading a gait CSV."""


class MalformedRowError(GaitParseError):
    pass


class NonMonotoneError(GaitParseError):
    pass


class TooFewSamplesError(GaitParseError):
    pass


class GaitPhase(str, enum.Enum):
    CP = "CP"  # controlled plantarflexion, starts at heel strike
    CD = "CD"  # controlled dorsiflexion
    PP = "PP"  # powered plantarflexion
    SW = "SW"  # swing

    def next(self) -> "GaitPhase":
        order = list(GaitPhase)
        return order[(order.index(self) + 1) % len(order)]


@dataclass(frozen=True)
class PhaseBounds:
    cp_end: float = 0.10
    cd_end: float = 0.50
    pp_end: float = 0.62

    def __post_init__(self):
        if not 0.0 < self.cp_end < self.cd_end < self.pp_end < 1.0:
            raise ValueError(
                f"phase bounds must satisfy 0 < cp_end < cd_end < pp_end < 1, got "
                f"({self.cp_end}, {self.cd_end}, {self.pp_end})"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.cp_end, self.cd_end, self.pp_end)


@dataclass(frozen=True)
class LinkageMap:
    """Constant moment-arm reduction of the cylinder/ankle linkage."""

    moment_arm: float = 0.06
    neutral_angle: float = -0.35

    def __post_init__(self):
        if not self.moment_arm > 0.0:
            raise ValueError(f"moment_arm must be positive, got {self.moment_arm}")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaitProfile:
    """Ankle angle (rad, dorsiflexion positive) and joint moment (N m, same
    axis) sampled over one normalized gait cycle.

    ``cadence`` is the cycle duration in seconds.
    """

    t_frac: np.ndarray
    angle: np.ndarray
    moment: np.ndarray
    cadence: float

    def __post_init__(self):
        object.__setattr__(self, "t_frac", _frozen(self.t_frac))
        object.__setattr__(self, "angle", _frozen(self.angle))
        object.__setattr__(self, "moment", _frozen(self.moment))
        t = self.t_frac
        if not (t.ndim == 1 and t.shape == self.angle.shape == self.moment.shape):
            raise ValueError("t_frac, angle and moment must be 1-D arrays of equal length")
        if len(t) < MIN_SAMPLES:
            raise TooFewSamplesError(f"too few samples: {len(t)} < {MIN_SAMPLES}")
        if np.any(np.diff(t) <= 0.0):
            raise NonMonotoneError("t_frac must be strictly increasing")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError("t_frac must start at 0 and end at 1")
        if not np.all(np.isfinite(self.angle)) or not np.all(np.isfinite(self.moment)):
            raise ValueError("angle and moment must be finite")
        if not self.cadence > 0.0:
            raise ValueError(f"cadence must be positive, got {self.cadence}")

    def __len__(self):
        return len(self.t_frac)

    @property
    def time(self) -> np.ndarray:
        return self.t_frac * self.cadence

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t_frac.tolist(), self.angle.tolist(), self.moment.tolist()))


@dataclass(frozen=True)
class CylinderLoad:
    """Cylinder-level load series: force (N) and commanded piston position (m)."""

    t_frac: np.ndarray
    force: np.ndarray
    position: np.ndarray
    cadence: float = field(default=1.0)

    def __post_init__(self):
        object.__setattr__(self, "t_frac", _frozen(self.t_frac))
        object.__setattr__(self, "force", _frozen(self.force))
        object.__setattr__(self, "position", _frozen(self.position))
        if self.t_frac[0] > 0.0 or self.t_frac[-1] < 1.0:
            raise ValueError("load series must cover t_frac in [0, 1]")

    def at(self, t_frac: float) -> tuple[float, float]:
        return (
            float(np.interp(t_frac, self.t_frac, self.force)),
            float(np.interp(t_frac, self.t_frac, self.position)),
        )


def load_gait_csv(path, cadence: float) -> GaitProfile:
    """Read a ``t_frac,angle_rad,moment_Nm`` CSV.  Lines starting with ``#``
    are comments."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise MalformedRowError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 3:
            raise MalformedRowError(f"{path}: row {lineno} has {len(row)} fields, expected 3")
        try:
            vals = tuple(float(x) for x in row)
        except ValueError as exc:
            raise MalformedRowError(f"{path}: row {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise MalformedRowError(f"{path}: row {lineno} contains non-finite values")
        rows.append(vals)
    if len(rows) < MIN_SAMPLES:
        raise TooFewSamplesError(f"{path}: too few samples ({len(rows)} < {MIN_SAMPLES})")
    t = np.array([r[0] for r in rows])
    if np.any(np.diff(t) <= 0.0):
        bad = int(np.argmax(np.diff(t) <= 0.0)) + 3
        raise NonMonotoneError(f"{path}: t_frac not strictly increasing at row {bad}")
    return GaitProfile(t, [r[1] for r in rows], [r[2] for r in rows], cadence)


def write_gait_csv(profile: GaitProfile, path, comment: str | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, a, m in profile.samples:
            writer.writerow((repr(t), repr(a), repr(m)))


def phase_at(t_frac: float, bounds: PhaseBounds = PhaseBounds()) -> GaitPhase:
    if not 0.0 <= t_frac <= 1.0:
        raise ValueError(f"t_frac must lie in [0, 1], got {t_frac}")
    if t_frac < bounds.cp_end:
        return GaitPhase.CP
    if t_frac < bounds.cd_end:
        return GaitPhase.CD
    if t_frac < bounds.pp_end:
        return GaitPhase.PP
    return GaitPhase.SW


def resample(profile: GaitProfile, n: int) -> GaitProfile:
    if n < MIN_SAMPLES:
        raise ValueError(f"n must be at least {MIN_SAMPLES}, got {n}")
    t = np.linspace(0.0, 1.0, n)
    angle = np.interp(t, profile.t_frac, profile.angle)
    moment = np.interp(t, profile.t_frac, profile.moment)
    # linspace already hits 0 and 1 exactly; pin the values too
    angle[0], angle[-1] = profile.angle[0], profile.angle[-1]
    moment[0], moment[-1] = profile.moment[0], profile.moment[-1]
    return GaitProfile(t, angle, moment, profile.cadence)


def time_derivative(values, t) -> np.ndarray:
    """Central difference quotients inside, one-sided at the ends.

    Plain quotients keep a constant series at exactly zero rate.
    """
    a, t = np.asarray(values, dtype=float), np.asarray(t, dtype=float)
    w = np.empty_like(a)
    w[1:-1] = (a[2:] - a[:-2]) / (t[2:] - t[:-2])
    w[0] = (a[1] - a[0]) / (t[1] - t[0])
    w[-1] = (a[-1] - a[-2]) / (t[-1] - t[-2])
    return w


def angular_velocity(profile: GaitProfile) -> np.ndarray:
    """d(angle)/dt in rad/s."""
    return time_derivative(profile.angle, profile.time)


def ankle_power(profile: GaitProfile) -> tuple[np.ndarray, np.ndarray]:
    """Joint power M * dtheta/dt (W).  Negative where the body does work on
    the ankle."""
    return profile.t_frac.copy(), profile.moment * angular_velocity(profile)


def cycle_work(profile: GaitProfile) -> float:
    """Net mechanical work over the cycle (J), trapezoidal in time."""
    _, p = ankle_power(profile)
    return float(np.trapezoid(p, profile.time))


def cylinder_load_from_ankle(profile: GaitProfile, linkage: LinkageMap = LinkageMap()) -> CylinderLoad:
    force = profile.moment / linkage.moment_arm
    position = linkage.moment_arm * (profile.angle - linkage.neutral_angle)
    return CylinderLoad(profile.t_frac, force, position, profile.cadence)


# -- bundled synthetic profile ---------------------------------------------

# keyframes (t_frac, value) joined by cosine easing
_ANGLE_KEYS = ((0.0, 0.0), (0.10, -0.09), (0.50, 0.17), (0.62, -0.30), (0.85, 0.02), (1.0, 0.0))
_MOMENT_KEYS_PER_KG = ((0.0, 0.0), (0.05, 0.15), (0.10, -0.10), (0.48, -1.50), (0.62, 0.0), (1.0, 0.0))

DEFAULT_CADENCE = 1.2
DEFAULT_BODY_MASS = 75.0
DEFAULT_GAIT_RESOURCE = "default_gait.csv"
DEFAULT_GAIT_COMMENT = (
    "SYNTHETIC gait profile (not measured data): smooth stand-in for typical\n"
    "level-walking ankle kinematics/kinetics; 75 kg subject, cadence 1.2 s.\n"
    "angle: dorsiflexion positive; moment: joint moment on the same axis."
)


def _ease(keys, t):
    kt = np.array([k[0] for k in keys])
    kv = np.array([k[1] for k in keys])
    idx = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, len(kt) - 2)
    s = (t - kt[idx]) / (kt[idx + 1] - kt[idx])
    w = 0.5 - 0.5 * np.cos(np.pi * s)
    return kv[idx] + w * (kv[idx + 1] - kv[idx])


def synthetic_profile(n: int = 101, body_mass: float = DEFAULT_BODY_MASS,
                      cadence: float = DEFAULT_CADENCE) -> GaitProfile:
    t = np.linspace(0.0, 1.0, n)
    angle = np.round(_ease(_ANGLE_KEYS, t), 12)
    moment = np.round(body_mass * _ease(_MOMENT_KEYS_PER_KG, t), 9)
    return GaitProfile(t, angle + 0.0, moment + 0.0, cadence)


def default_profile(cadence: float = DEFAULT_CADENCE) -> GaitProfile:
    ref = resources.files("ehankle.data").joinpath(DEFAULT_GAIT_RESOURCE)
    with resources.as_file(ref) as p:
        return load_gait_csv(p, cadence)
