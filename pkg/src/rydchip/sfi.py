"""Selective field ionization: ramp evolution, ion arrival, state inference.

The magnetic field is neglected during the ramp (the electric interaction
dominates), so each mj block of the Hamiltonian evolves independently: at
every time step the block is re-diagonalized at the instantaneous ramp
field, the populated level is followed adiabatically by eigenvector
overlap, and an ionization rate for the tracked state depletes the
survival probability.

Two ionization-rate models are provided:

* ``cap``: rate 2 eta <psi| W |psi> / hbar with W = (r - r_cut)^6 above a
  field-dependent cutoff radius r_cut = c / sqrt(F) (atomic units).  The
  cutoff tracks the saddle of the potential barrier; the scale c defaults
  to 0.5 so the onset matches the classical threshold for hydrogenic
  states.
* ``classical``: instantaneous ionization once the state energy exceeds
  the barrier saddle energy -2 sqrt(F) + (|mj|/2) F^(3/4), whose
  |mj|-dependent term delays ionization of high-|mj| states.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.interpolate import PchipInterpolator

from . import constants as cst
from .atomic.basis import BasisState
from .atomic.hamiltonian import AtomicSystem


@dataclass(frozen=True)
class RampProfile:
    """Field ramp samples (t in us, field in V/cm), PCHIP-interpolated."""

    times_us: tuple
    fields_vcm: tuple

    def __post_init__(self):
        t = np.asarray(self.times_us)
        f = np.asarray(self.fields_vcm)
        if len(t) < 2 or len(t) != len(f):
            raise ValueError("ramp needs at least two (t, field) samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("ramp times must be strictly increasing")
        if np.any(np.diff(f) < 0):
            warnings.warn("non-monotone field ramp", stacklevel=2)

    @property
    def duration_us(self) -> float:
        return float(self.times_us[-1] - self.times_us[0])

    def interpolator(self) -> PchipInterpolator:
        return PchipInterpolator(self.times_us, self.fields_vcm)

    @classmethod
    def linear(cls, f_start_vcm=7.2, f_stop_vcm=210.0, duration_us=1.0) -> "RampProfile":
        return cls((0.0, duration_us), (f_start_vcm, f_stop_vcm))

    @classmethod
    def from_csv(cls, path) -> "RampProfile":
        times, fields = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].startswith("#") or row[0] == "t_us":
                    continue
                times.append(float(row[0]))
                fields.append(float(row[1]))
        return cls(tuple(times), tuple(fields))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_us", "field_Vcm"])
            for t, f in zip(self.times_us, self.fields_vcm):
                writer.writerow([t, f])


@dataclass(frozen=True)
class IonizationModel:
    """Rate model selector: 'cap' or 'classical'."""

    variant: str = "cap"
    eta_au: float = 1.52e-10
    r_cut_scale: float = 0.5
    classical_rate_per_s: float = 1.0e10

    def __post_init__(self):
        if self.variant not in ("cap", "classical"):
            raise ValueError("variant must be 'cap' or 'classical'")
        if self.eta_au <= 0 or self.r_cut_scale <= 0:
            raise ValueError("eta and r_cut_scale must be positive")


def saddle_energy_au(field_au: float, mj: float) -> float:
    """Barrier saddle energy -2 sqrt(F) + (|mj|/2) F^(3/4) in a.u."""
    return -2.0 * math.sqrt(field_au) + 0.5 * abs(mj) * field_au**0.75


def classical_threshold_field_vcm(n_eff: float, mj: float = 0.5) -> float:
    """Field where a level of energy -1/(2 n_eff^2) crosses the saddle."""
    energy = -0.5 / n_eff**2
    lo, hi = 1e-12, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if saddle_energy_au(mid, mj) < energy:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi) * cst.AU_EFIELD_VCM


@dataclass
class EvolutionResult:
    times_us: np.ndarray
    fields_vcm: np.ndarray
    survival: np.ndarray
    flux_per_us: np.ndarray  # ionized probability per us, at step midpoints
    diagnostics: list

    @property
    def ionized_fraction(self) -> float:
        return 1.0 - float(self.survival[-1])


class SfiBlockEvolver:
    """Ramp evolution of one mj block with the magnetic field neglected."""

    def __init__(self, system: AtomicSystem, mj: float):
        self.system = system
        self.mj = mj
        self.idx = np.asarray(
            [i for i, s in enumerate(system.basis) if s.mj == mj], dtype=np.intp
        )
        if len(self.idx) == 0:
            raise ValueError(f"no basis states with mj={mj}")
        local = {g: li for li, g in enumerate(self.idx)}
        self.diag_au = system.energies0_au[self.idx]
        tab = system.stark_table()
        rows, cols, vals = [], [], []
        for r, c, v in zip(tab.rows, tab.cols, tab.vals):
            if r in local and c in local:
                rows.append(local[r])
                cols.append(local[c])
                vals.append(v)
        n = len(self.idx)
        self.stark = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        # per-(l, j) channel bookkeeping for radial densities
        self.channels: dict[tuple[int, float], list[tuple[int, int]]] = {}
        for li, g in enumerate(self.idx):
            s = system.basis[int(g)]
            self.channels.setdefault((s.l, s.j), []).append((li, s.n))

    def hamiltonian(self, field_vcm: float) -> np.ndarray:
        f_au = cst.vcm_to_au(field_vcm)
        h = (f_au * self.stark).toarray()
        h = h + h.T
        h[np.diag_indices_from(h)] = self.diag_au
        return h

    def initial_vector(self, label: BasisState, field_vcm: float) -> np.ndarray:
        """Eigenvector at the ramp start whose dominant component is label."""
        if label.mj != self.mj:
            raise ValueError("label mj does not match this block")
        _, vecs = np.linalg.eigh(self.hamiltonian(field_vcm))
        target = int(np.nonzero(self.idx == self.system.index[label])[0][0])
        k = int(np.argmax(vecs[target, :] ** 2))
        return vecs[:, k].copy()

    def radial_density(self, vec: np.ndarray):
        """(r grid, |u(r)|^2 dr weights) of a block vector, all channels."""
        solver = self.system.solver
        x0, h = solver.x0, solver.h
        i_hi_max = 0
        parts = []
        for (l, j), members in self.channels.items():
            coeffs = [(li, n) for li, n in members if abs(vec[li]) > 1e-9]
            if not coeffs:
                continue
            wfs = [(vec[li], solver.wavefunction(n, l, j)) for li, n in coeffs]
            i_lo = min(w.i_lo for _, w in wfs)
            i_hi = max(w.i_hi for _, w in wfs)
            acc = np.zeros(i_hi - i_lo)
            for c, w in wfs:
                acc[w.i_lo - i_lo : w.i_hi - i_lo] += c * w.values
            parts.append((i_lo, acc**2))
            i_hi_max = max(i_hi_max, i_hi)
        dens = np.zeros(i_hi_max)
        for i_lo, p in parts:
            dens[i_lo : i_lo + len(p)] += p
        r = np.exp(x0 + h * np.arange(i_hi_max))
        return r, dens * r**2 * h  # integral u^2 dr = sum(weights)

    def cap_rate_per_s(self, vec: np.ndarray, field_vcm: float, model: IonizationModel) -> float:
        """2 eta <(r - r_cut)^6>_psi / hbar, in 1/s."""
        f_au = cst.vcm_to_au(field_vcm)
        if f_au <= 0:
            return 0.0
        r_cut = model.r_cut_scale / math.sqrt(f_au)
        r, w = self.radial_density(vec)
        sel = r > r_cut
        if not np.any(sel):
            return 0.0
        expect = float(np.sum(w[sel] * (r[sel] - r_cut) ** 6))
        return 2.0 * model.eta_au * expect * cst.AU_ENERGY_RADS

    def rate_per_s(
        self, vec: np.ndarray, energy_au: float, field_vcm: float, model: IonizationModel
    ) -> float:
        if model.variant == "cap":
            return self.cap_rate_per_s(vec, field_vcm, model)
        f_au = cst.vcm_to_au(field_vcm)
        if f_au <= 0:
            return 0.0
        return model.classical_rate_per_s if energy_au >= saddle_energy_au(f_au, self.mj) else 0.0

    def evolve(
        self,
        label: BasisState,
        ramp: RampProfile,
        model: IonizationModel,
        step_us: float = 0.002,
    ) -> EvolutionResult:
        """Adiabatic ramp evolution of the level starting as `label`."""
        return self.evolve_many([label], ramp, model, step_us)[0]

    def evolve_many(
        self,
        labels: list[BasisState],
        ramp: RampProfile,
        model: IonizationModel,
        step_us: float = 0.002,
    ) -> list[EvolutionResult]:
        """Evolve several levels of this block in one diagonalization sweep."""
        if step_us <= 0:
            raise ValueError("step must be positive")
        interp = ramp.interpolator()
        times = np.arange(ramp.times_us[0], ramp.times_us[-1] + 0.5 * step_us, step_us)
        fields = np.asarray(interp(times), dtype=float)
        energies, vecs = np.linalg.eigh(self.hamiltonian(float(fields[0])))
        tracked = []
        for label in labels:
            vec = self.initial_vector(label, float(fields[0]))
            tracked.append(int(np.argmax(np.abs(vecs.T @ vec))))
        n_states = len(labels)
        survival = np.ones((n_states, len(times)))
        flux = np.zeros((n_states, len(times) - 1))
        diagnostics: list[list] = [[] for _ in range(n_states)]
        for step in range(1, len(times)):
            e_new, v_new = np.linalg.eigh(self.hamiltonian(float(fields[step])))
            cross = np.abs(v_new.T @ vecs[:, tracked])  # (dim, n_states)
            for s in range(n_states):
                k_new = int(np.argmax(cross[:, s]))
                if cross[k_new, s] < 0.5:
                    diagnostics[s].append(
                        {
                            "t_us": float(times[step]),
                            "overlap": float(cross[k_new, s]),
                            "note": "tracking continuity lost; continuing on max overlap",
                        }
                    )
                tracked[s] = k_new
                rate = self.rate_per_s(
                    v_new[:, k_new], e_new[k_new], float(fields[step]), model
                )
                decay = math.exp(-rate * step_us * 1e-6)
                survival[s, step] = survival[s, step - 1] * decay
                flux[s, step - 1] = (survival[s, step - 1] - survival[s, step]) / step_us
            vecs, energies = v_new, e_new
        return [
            EvolutionResult(
                times_us=times,
                fields_vcm=fields,
                survival=survival[s],
                flux_per_us=flux[s],
                diagnostics=diagnostics[s],
            )
            for s in range(n_states)
        ]


@dataclass(frozen=True)
class BinWindows:
    """Detection windows (us) and detection model constants."""

    t1: tuple = (1.8, 2.0)
    t2: tuple = (2.0, 2.1)
    p_detect: float = 0.34
    a_ratio: float = 1.0

    def __post_init__(self):
        lo1, hi1 = self.t1
        lo2, hi2 = self.t2
        if max(lo1, lo2) < min(hi1, hi2):
            raise ValueError("T1 and T2 windows must not overlap")
        if not 0 < self.p_detect <= 1:
            raise ValueError("p must be in (0, 1]")
        if self.a_ratio < 0:
            raise ValueError("a must be >= 0")


@dataclass
class ArrivalHistogram:
    bin_edges_us: np.ndarray
    counts: np.ndarray
    tof_delay_us: float = 1.53

    def __post_init__(self):
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("histogram counts must be >= 0")

    def window_counts(self, window: tuple) -> float:
        lo, hi = window
        centers = 0.5 * (self.bin_edges_us[:-1] + self.bin_edges_us[1:])
        sel = (centers >= lo) & (centers < hi)
        return float(np.sum(self.counts[sel]))

    def export_csv(self, path, metadata: dict | None = None):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_start_us", "bin_end_us", "counts"])
            for lo, hi, c in zip(self.bin_edges_us[:-1], self.bin_edges_us[1:], self.counts):
                writer.writerow([f"{lo:.6f}", f"{hi:.6f}", f"{c:.9g}"])
        if metadata is not None:
            sidecar = dict(metadata)
            sidecar["tof_delay_us"] = self.tof_delay_us
            with open(str(path) + ".json", "w") as fh:
                json.dump(sidecar, fh, indent=2)


def arrival_histogram(
    evolutions: list[EvolutionResult],
    weights: list[float],
    bin_edges_us,
    tof_delay_us: float = 1.53,
) -> ArrivalHistogram:
    """Weighted ion arrival histogram, shifted by the ion time of flight."""
    if any(w < 0 for w in weights):
        raise ValueError("weights must be >= 0")
    bin_edges_us = np.asarray(bin_edges_us, dtype=float)
    counts = np.zeros(len(bin_edges_us) - 1)
    for evo, weight in zip(evolutions, weights):
        mids = 0.5 * (evo.times_us[:-1] + evo.times_us[1:]) + tof_delay_us
        mass = -weight * np.diff(evo.survival)  # ionized mass per step
        ix = np.searchsorted(bin_edges_us, mids) - 1
        ok = (ix >= 0) & (ix < len(counts))
        np.add.at(counts, ix[ok], mass[ok])
    return ArrivalHistogram(bin_edges_us, counts, tof_delay_us)


def infer_population(n_t1: float, n_t2: float, windows: BinWindows) -> float:
    """Upper-state population from two-window counts.

    rho_22 = ((1 + a)/p) N_T2 / (N_T1 + N_T2), clamped to [0, 1].
    """
    total = n_t1 + n_t2
    if total <= 0:
        raise ValueError("cannot infer population from zero total counts")
    rho = (1.0 + windows.a_ratio) / windows.p_detect * n_t2 / total
    if not 0.0 <= rho <= 1.0:
        warnings.warn(f"inferred population {rho:.3f} outside [0, 1]; clamping", stacklevel=2)
    return min(max(rho, 0.0), 1.0)


def simulate_detection(
    rho22: float,
    windows: BinWindows,
    n_pulses: int,
    mean_atoms_per_pulse: float = 1.0,
    seed: int | None = None,
) -> tuple[int, int]:
    """Forward Monte Carlo of the two-window counting model.

    Per pulse the driven group contributes Poisson atoms split between the
    lower and upper state by rho22; spectator-state atoms arrive at rate
    a times the driven group.  Upper-state ions land in T2 with
    probability p, everything else in T1.  Returns (N_T1, N_T2).
    """
    rng = np.random.default_rng(seed)
    n_driven = rng.poisson(mean_atoms_per_pulse, size=n_pulses)
    n_spectator = rng.poisson(windows.a_ratio * mean_atoms_per_pulse, size=n_pulses)
    n_upper = rng.binomial(n_driven, rho22)
    n_t2 = rng.binomial(n_upper, windows.p_detect)
    n_t1 = n_driven - n_upper + (n_upper - n_t2) + n_spectator
    return int(np.sum(n_t1)), int(np.sum(n_t2))
