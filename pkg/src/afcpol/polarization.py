"""Single-photon polarization algebra: Jones vectors, waveplates, analyzers.

Conventions
-----------
A waveplate with fast axis at angle ``theta`` (radians from horizontal) and
retardance ``G`` acts as ``R(theta) @ diag(1, exp(iG)) @ R(-theta)`` with
``R`` the usual 2-D rotation.  ``G = pi`` for a half-wave plate and
``G = pi/2`` for a quarter-wave plate.  With this convention a half-wave plate
at ``theta`` rotates linear polarization by ``2*theta``, so a half-wave
analyzer sweep produces fringes with period ``pi/2`` in the plate angle.

The analyzer is QWP -> HWP -> PBS.  The transmitted PBS port passes ``|H>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

STATE_TOL = 1e-12
RHO_TOL = 1e-10
PHASE_TOL = 1e-10

_S2 = 1.0 / math.sqrt(2.0)
_CANONICAL = {
    "H": (1.0, 0.0),
    "V": (0.0, 1.0),
    "D": (_S2, _S2),
    "A": (_S2, -_S2),
    "R": (_S2, 1j * _S2),
    "L": (_S2, -1j * _S2),
}
LABELS = tuple(_CANONICAL)


class InvalidStateError(ValueError):
    """A state or density matrix violates its invariants."""


@dataclass(frozen=True)
class PureQubit:
    a_h: complex
    a_v: complex

    def __post_init__(self):
        norm = abs(self.a_h) ** 2 + abs(self.a_v) ** 2
        if abs(norm - 1.0) > STATE_TOL:
            raise InvalidStateError(f"|a_h|^2 + |a_v|^2 = {norm!r}, expected 1")

    @classmethod
    def from_vector(cls, vec) -> "PureQubit":
        """Build a qubit from any nonzero 2-vector, normalizing it."""
        vec = np.asarray(vec, dtype=complex).reshape(2)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidStateError("zero vector has no polarization")
        vec = vec / norm
        return cls(complex(vec[0]), complex(vec[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a_h, self.a_v], dtype=complex)

    def overlap(self, other: "PureQubit") -> float:
        """|<self|other>|^2."""
        return float(abs(np.vdot(self.vector, other.vector)) ** 2)

    def equivalent(self, other: "PureQubit", tol: float = PHASE_TOL) -> bool:
        """Equality up to a global phase."""
        return abs(abs(np.vdot(self.vector, other.vector)) - 1.0) <= tol

    def density_matrix(self) -> "DensityMatrix2":
        v = self.vector
        return DensityMatrix2(np.outer(v, v.conj()))


def canonical_state(label: str) -> PureQubit:
    try:
        a_h, a_v = _CANONICAL[label]
    except KeyError:
        raise ValueError(f"unknown state label {label!r}; expected one of {LABELS}") from None
    return PureQubit(complex(a_h), complex(a_v))


@dataclass(frozen=True, eq=False)
class DensityMatrix2:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.shape != (2, 2):
            raise InvalidStateError(f"density matrix must be 2x2, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidStateError("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > RHO_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > RHO_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if evals[0] < -RHO_TOL:
            raise InvalidStateError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix2":
        return cls(np.eye(2) / 2)

    @classmethod
    def from_bloch(cls, r) -> "DensityMatrix2":
        """rho = (I + r . sigma) / 2 with sigma = (X, Y, Z) in the H/V basis."""
        x, y, z = r
        return cls(0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]]))

    @property
    def bloch(self) -> np.ndarray:
        rho = self.entries
        return np.array([2 * rho[1, 0].real, 2 * rho[1, 0].imag, (rho[0, 0] - rho[1, 1]).real])

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def to_dict(self) -> dict:
        return {
            "real": self.entries.real.tolist(),
            "imag": self.entries.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DensityMatrix2":
        return cls(np.array(data["real"], dtype=float) + 1j * np.array(data["imag"], dtype=float))


def trace_distance(rho: DensityMatrix2, sigma: DensityMatrix2) -> float:
    evals = np.linalg.eigvalsh(rho.entries - sigma.entries)
    return float(0.5 * np.sum(np.abs(evals)))


class PlateKind(str, Enum):
    HALF_WAVE = "half_wave"
    QUARTER_WAVE = "quarter_wave"


class Port(str, Enum):
    TRANSMITTED = "transmitted"
    REFLECTED = "reflected"


_RETARDANCE = {PlateKind.HALF_WAVE: math.pi, PlateKind.QUARTER_WAVE: math.pi / 2}


@dataclass(frozen=True)
class WaveplateSetting:
    kind: PlateKind
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PlateKind(self.kind))
        object.__setattr__(self, "angle", float(self.angle) % math.pi)

    @classmethod
    def hwp(cls, angle: float) -> "WaveplateSetting":
        return cls(PlateKind.HALF_WAVE, angle)

    @classmethod
    def qwp(cls, angle: float) -> "WaveplateSetting":
        return cls(PlateKind.QUARTER_WAVE, angle)


@dataclass(frozen=True)
class MeasurementSetting:
    plates: tuple = ()
    port: Port = Port.TRANSMITTED

    def __post_init__(self):
        plates = tuple(self.plates)
        if len(plates) > 2:
            raise ValueError("the analyzer holds at most two plates (QWP then HWP)")
        if len(plates) == 2 and (
            plates[0].kind is not PlateKind.QUARTER_WAVE or plates[1].kind is not PlateKind.HALF_WAVE
        ):
            raise ValueError("two-plate analyzer must be ordered QWP then HWP")
        object.__setattr__(self, "plates", plates)
        object.__setattr__(self, "port", Port(self.port))

    @property
    def qwp_angle(self):
        for p in self.plates:
            if p.kind is PlateKind.QUARTER_WAVE:
                return p.angle
        return None

    @property
    def hwp_angle(self):
        for p in self.plates:
            if p.kind is PlateKind.HALF_WAVE:
                return p.angle
        return None

    def flipped(self) -> "MeasurementSetting":
        other = Port.REFLECTED if self.port is Port.TRANSMITTED else Port.TRANSMITTED
        return MeasurementSetting(self.plates, other)

    def analyzed_state(self) -> PureQubit:
        """The input polarization this setting sends fully into its port."""
        U = analyzer_unitary(self)
        out = np.array([1, 0] if self.port is Port.TRANSMITTED else [0, 1], dtype=complex)
        return PureQubit.from_vector(U.conj().T @ out)


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def jones_matrix(plate: WaveplateSetting) -> np.ndarray:
    G = _RETARDANCE[plate.kind]
    R = _rot(plate.angle)
    return R @ np.diag([1.0, np.exp(1j * G)]) @ R.T


def analyzer_unitary(setting: MeasurementSetting) -> np.ndarray:
    U = np.eye(2, dtype=complex)
    for plate in setting.plates:
        U = jones_matrix(plate) @ U
    return U


def _as_rho(state) -> DensityMatrix2:
    if isinstance(state, DensityMatrix2):
        return state
    if isinstance(state, PureQubit):
        return state.density_matrix()
    return DensityMatrix2(np.asarray(state))


def projection_probability(state, setting: MeasurementSetting) -> float:
    """Probability that ``state`` exits the analyzer through ``setting.port``."""
    rho = _as_rho(state).entries
    U = analyzer_unitary(setting)
    idx = 0 if setting.port is Port.TRANSMITTED else 1
    out = U @ rho @ U.conj().T
    return float(min(max(out[idx, idx].real, 0.0), 1.0))


def fidelity(target: PureQubit, rho) -> float:
    """<psi|rho|psi> for a pure target."""
    rho = _as_rho(rho).entries
    v = target.vector
    return float(np.vdot(v, rho @ v).real)


_DEG = math.pi / 180
# QWP/HWP angles (deg) that send each canonical state to the transmitted port.
_ANALYZER_ANGLES = {
    "H": (0.0, 0.0),
    "V": (0.0, 45.0),
    "D": (45.0, 22.5),
    "A": (45.0, 67.5),
    "R": (0.0, 67.5),
    "L": (0.0, 22.5),
}


def analyzer_setting(label: str) -> MeasurementSetting:
    """Tomography setting projecting onto the canonical state ``label``."""
    q, h = _ANALYZER_ANGLES[label]
    return MeasurementSetting(
        (WaveplateSetting.qwp(q * _DEG), WaveplateSetting.hwp(h * _DEG)), Port.TRANSMITTED
    )


def hwp_scan_setting(theta: float, qwp: float | None = None) -> MeasurementSetting:
    """Fringe-scan analyzer: HWP at ``theta``, optionally preceded by a QWP."""
    plates = [WaveplateSetting.hwp(theta)]
    if qwp is not None:
        plates.insert(0, WaveplateSetting.qwp(qwp))
    return MeasurementSetting(tuple(plates), Port.TRANSMITTED)


# Preparation chain: |H> -> HWP(h) -> QWP(q).
_PREP_ANGLES = {
    "H": (0.0, 0.0),
    "V": (45.0, 90.0),
    "D": (22.5, 45.0),
    "A": (67.5, 135.0),
    "R": (0.0, 135.0),
    "L": (0.0, 45.0),
}


def prepared_state(label: str, qwp_error: float = 0.0) -> PureQubit:
    """Source state after the preparation plates, with an optional QWP angle error.

    With ``qwp_error == 0`` this is the canonical state up to a global phase.
    A nonzero error leaves an elliptical residue; on a circular state it makes
    a HWP-only analyzer sweep show a small fringe.
    """
    h, q = _PREP_ANGLES[label]
    vec = jones_matrix(WaveplateSetting.qwp(q * _DEG + qwp_error)) @ (
        jones_matrix(WaveplateSetting.hwp(h * _DEG)) @ np.array([1, 0], dtype=complex)
    )
    return PureQubit.from_vector(vec)
