"""Zero-field basis states, quantum defects, and field configuration."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import constants as cst


@dataclass(frozen=True, order=True, slots=True)
class BasisState:
    """Zero-field fine-structure state |n, l, j, mj>."""

    n: int
    l: int
    j: float
    mj: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.l < self.n:
            raise ValueError(f"l must satisfy 0 <= l < n, got l={self.l}, n={self.n}")
        if abs(self.j - self.l - 0.5) > 1e-9 and abs(self.j - self.l + 0.5) > 1e-9:
            raise ValueError(f"j must be l +/- 1/2, got l={self.l}, j={self.j}")
        if self.j < 0:
            raise ValueError(f"j must be positive, got {self.j}")
        if abs(self.mj) > self.j + 1e-9 or round(2 * (self.j - self.mj)) % 2 != 0:
            raise ValueError(f"invalid mj={self.mj} for j={self.j}")

    def label(self) -> str:
        spect = "spdfghiklmnoqrtuv"
        lname = spect[self.l] if self.l < len(spect) else f"l{self.l}"
        return f"{self.n}{lname}{int(2 * self.j)}/2,mj={self.mj:+g}"


def build_basis(n_min: int, n_max: int, l_max: int | None = None) -> list[BasisState]:
    """All |n,l,j,mj> states with n_min <= n <= n_max and l <= l_max.

    Deterministic ordering by (n, l, j, mj).
    """
    if not 1 <= n_min <= n_max:
        raise ValueError(f"empty or invalid n window [{n_min}, {n_max}]")
    if l_max is not None and l_max >= n_max:
        raise ValueError(f"l_max={l_max} must be < n_max={n_max}")
    states = []
    for n in range(n_min, n_max + 1):
        l_top = n - 1 if l_max is None else min(l_max, n - 1)
        for l in range(0, l_top + 1):
            js = [0.5] if l == 0 else [l - 0.5, l + 0.5]
            for j in js:
                two_j = round(2 * j)
                for two_mj in range(-two_j, two_j + 1, 2):
                    states.append(BasisState(n, l, j, two_mj / 2.0))
    return states


class QuantumDefectTable:
    """Rydberg-Ritz defect coefficients keyed by (l, j).

    Entries with l above the cutoff (largest l present in the file) are
    exactly zero.  The default table ships with the package.
    """

    def __init__(self, entries: dict[tuple[int, float], tuple[float, float]]):
        for (l, j), (d0, _) in entries.items():
            if d0 < 0:
                raise ValueError(f"negative delta0 for (l={l}, j={j})")
        self._entries = dict(entries)
        self.l_max = max((l for l, _ in entries), default=-1)

    @classmethod
    def from_file(cls, path: str | Path) -> "QuantumDefectTable":
        entries = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'l j delta0 delta2'")
            l = int(parts[0])
            j = float(parts[1])
            key = (l, j)
            if key in entries:
                raise ValueError(f"{path}:{lineno}: duplicate entry for (l={l}, j={j})")
            entries[key] = (float(parts[2]), float(parts[3]))
        if not entries:
            raise ValueError(f"{path}: no defect entries found")
        return cls(entries)

    @classmethod
    def rb87(cls) -> "QuantumDefectTable":
        ref = importlib.resources.files("rydchip.atomic") / "data" / "rb87_defects.txt"
        with importlib.resources.as_file(ref) as path:
            return cls.from_file(path)

    @classmethod
    def hydrogenic(cls) -> "QuantumDefectTable":
        """All-zero defects (pure hydrogen energies); handy for oracles."""
        return cls({(0, 0.5): (0.0, 0.0)})

    def defect(self, n: int, l: int, j: float) -> float:
        d0, d2 = self._entries.get((l, j), (0.0, 0.0))
        if d0 == 0.0 and d2 == 0.0:
            return 0.0
        return d0 + d2 / (n - d0) ** 2

    def effective_n(self, state: BasisState) -> float:
        return state.n - self.defect(state.n, state.l, state.j)


def zero_field_energy(state: BasisState, defects: QuantumDefectTable) -> float:
    """Level energy relative to the ionization limit, in rad/s.

    E = -2*pi*c*R_Rb / (n - delta)^2 with the Rydberg-Ritz defect delta.
    """
    n_eff = defects.effective_n(state)
    return -cst.TWO_PI * cst.RYDBERG_RB_HZ / n_eff**2


def zero_field_energy_au(state: BasisState, defects: QuantumDefectTable) -> float:
    """Same as zero_field_energy but in Hartree (internal use)."""
    return cst.rads_to_au(zero_field_energy(state, defects))


def _unit(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"direction vector must have unit norm, got |v|={norm}")
    return v


@dataclass(frozen=True)
class FieldConfig:
    """Static fields and microwave polarization.

    Defaults reproduce the chip geometry: E along x, B = 3.4 G along y,
    MW polarization along z.  Direction vectors are lab-frame unit vectors.
    """

    e_field_vcm: float = 3.625
    e_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    b_field_gauss: float = 3.4
    b_direction: tuple[float, float, float] = (0.0, 1.0, 0.0)
    mw_polarization: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        for v in (self.e_direction, self.b_direction, self.mw_polarization):
            _unit(v)
        if self.e_field_vcm < 0 or self.b_field_gauss < 0:
            raise ValueError("field magnitudes must be >= 0")

    def quantization_frame(self) -> np.ndarray:
        """Rows are the quantization-frame axes (x_q, y_q, z_q) in lab coords.

        z_q is chosen along E (or along B when E = 0) and x_q such that B
        lies in the x_q-z_q plane.  With that choice the static Hamiltonian
        is real symmetric.
        """
        e_dir = _unit(self.e_direction)
        b_dir = _unit(self.b_direction)
        if self.e_field_vcm > 0:
            z_q = e_dir
        elif self.b_field_gauss > 0:
            z_q = b_dir
        else:
            z_q = np.array([0.0, 0.0, 1.0])
        b_perp = b_dir - np.dot(b_dir, z_q) * z_q
        if np.linalg.norm(b_perp) > 1e-12:
            x_q = b_perp / np.linalg.norm(b_perp)
        else:
            trial = np.array([0.0, 0.0, 1.0])
            if abs(np.dot(trial, z_q)) > 0.9:
                trial = np.array([0.0, 1.0, 0.0])
            x_q = trial - np.dot(trial, z_q) * z_q
            x_q /= np.linalg.norm(x_q)
        y_q = np.cross(z_q, x_q)
        return np.vstack([x_q, y_q, z_q])

    def to_frame(self, vec_lab) -> np.ndarray:
        return self.quantization_frame() @ np.asarray(vec_lab, dtype=float)

    def b_frame_components(self) -> tuple[float, float]:
        """(transverse, longitudinal) B components in the quantization frame."""
        bx, by, bz = self.to_frame(np.asarray(self.b_direction) * self.b_field_gauss)
        # by vanishes by construction of the frame
        return bx, bz


def operator_coefficients(vec_frame) -> np.ndarray:
    """Coefficients c_q with A . r = sum_q c_q r_q, ordered (q=-1, 0, +1).

    Spherical position components follow r_+1 = -(x + iy)/sqrt(2), r_0 = z,
    r_-1 = (x - iy)/sqrt(2); then c_-1 = (A_x + iA_y)/sqrt(2), c_0 = A_z,
    c_+1 = -(A_x - iA_y)/sqrt(2).
    """
    x, y, z = np.asarray(vec_frame, dtype=complex)
    return np.array(
        [(x + 1j * y) / np.sqrt(2.0), z, -(x - 1j * y) / np.sqrt(2.0)]
    )
