"""Atomic Hamiltonian in combined static electric and magnetic fields.

The quantization axis follows the electric field; the magnetic field lies
in the x-z plane of that frame, so H = H0 + H_Stark + H_Zeeman is real
symmetric.  Couplings are tabulated once per basis (sparse index/value
triplets) and scaled by the field strengths on each build.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import constants as cst
from ..angular import dipole_angular_factor, magnetic_moment_matrices
from .basis import BasisState, FieldConfig, QuantumDefectTable, operator_coefficients
from .radial import RB87_POTENTIAL, CorePotential, RadialSolver


@dataclass(frozen=True)
class StarkEigenstate:
    """Dressed state: energy offset (rad/s) and basis amplitudes.

    ``reference`` names the energy zero; eigenstates from one diagonalization
    share the ``basis`` tuple and quantization ``frame`` (rows = frame axes
    in lab coordinates).
    """

    energy: float
    amplitudes: np.ndarray
    basis: tuple[BasisState, ...]
    frame: np.ndarray
    reference: str = "ionization limit"

    @property
    def dominant_index(self) -> int:
        return int(np.argmax(np.abs(self.amplitudes) ** 2))

    @property
    def dominant_label(self) -> BasisState:
        return self.basis[self.dominant_index]

    def overlap(self, other: "StarkEigenstate") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass
class _CouplingTable:
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray  # atomic units, per unit field (a.u.)


class AtomicSystem:
    """Basis plus cached radial/angular machinery for one atom."""

    def __init__(
        self,
        basis: list[BasisState],
        defects: QuantumDefectTable,
        potential: CorePotential = RB87_POTENTIAL,
        solver: RadialSolver | None = None,
    ):
        if not basis:
            raise ValueError("basis must be non-empty")
        self.basis = tuple(basis)
        self.defects = defects
        n_cap = max(s.n for s in basis) + 2
        self.solver = solver or RadialSolver(defects, potential=potential, n_cap=max(n_cap, 60))
        self.index = {s: i for i, s in enumerate(self.basis)}
        if len(self.index) != len(self.basis):
            raise ValueError("basis contains duplicate states")
        self.energies0_au = np.array(
            [
                cst.rads_to_au(-cst.TWO_PI * cst.RYDBERG_RB_HZ / defects.effective_n(s) ** 2)
                for s in self.basis
            ]
        )
        self._stark: _CouplingTable | None = None
        self._zeeman_z: _CouplingTable | None = None
        self._zeeman_x: _CouplingTable | None = None
        self._position_q: dict[int, _CouplingTable] = {}

    # -- coupling tables ---------------------------------------------------

    def stark_table(self) -> _CouplingTable:
        """Couplings of r_0 (field along quantization axis), upper triangle."""
        if self._stark is not None:
            return self._stark
        rows, cols, vals = [], [], []
        by_ljm: dict[tuple[int, float, float], list[int]] = {}
        for i, s in enumerate(self.basis):
            by_ljm.setdefault((s.l, s.j, s.mj), []).append(i)
        for (l, j, mj), idxs in by_ljm.items():
            for l2 in (l - 1, l + 1):
                for j2 in ((0.5,) if l2 == 0 else (l2 - 0.5, l2 + 0.5)):
                    if l2 < 0 or abs(j2 - j) > 1.0 or (l2, j2, mj) not in by_ljm:
                        continue
                    if (l2, j2) < (l, j):
                        continue  # each unordered (l,j)/(l2,j2) pair once
                    ang = dipole_angular_factor(l2, j2, mj, l, j, mj, 0)
                    if ang == 0.0:
                        continue
                    for i in idxs:
                        si = self.basis[i]
                        for k in by_ljm[(l2, j2, mj)]:
                            sk = self.basis[k]
                            rad = self.solver.radial_integral(
                                (si.n, si.l, si.j), (sk.n, sk.l, sk.j)
                            )
                            rows.append(i)
                            cols.append(k)
                            vals.append(rad * ang)
        self._stark = _CouplingTable(
            np.asarray(rows, dtype=np.intp),
            np.asarray(cols, dtype=np.intp),
            np.asarray(vals),
        )
        return self._stark

    def zeeman_tables(self) -> tuple[_CouplingTable, _CouplingTable]:
        """Couplings of (L + g_s S)_z and _x, upper triangle incl. diagonal."""
        if self._zeeman_z is not None:
            return self._zeeman_z, self._zeeman_x
        rows_z, cols_z, vals_z = [], [], []
        rows_x, cols_x, vals_x = [], [], []
        by_nl: dict[tuple[int, int], dict[tuple[float, float], int]] = {}
        for i, s in enumerate(self.basis):
            by_nl.setdefault((s.n, s.l), {})[(s.j, s.mj)] = i
        for (n, l), members in by_nl.items():
            states, mx, _, mz = magnetic_moment_matrices(l, cst.G_S)
            for a, sa in enumerate(states):
                ia = members.get(sa)
                if ia is None:
                    continue
                for b in range(a, len(states)):
                    ib = members.get(states[b])
                    if ib is None:
                        continue
                    if mz[a, b] != 0.0:
                        rows_z.append(min(ia, ib))
                        cols_z.append(max(ia, ib))
                        vals_z.append(mz[a, b])
                    if mx[a, b] != 0.0:
                        rows_x.append(min(ia, ib))
                        cols_x.append(max(ia, ib))
                        vals_x.append(mx[a, b])
        self._zeeman_z = _CouplingTable(
            np.asarray(rows_z, dtype=np.intp),
            np.asarray(cols_z, dtype=np.intp),
            np.asarray(vals_z),
        )
        self._zeeman_x = _CouplingTable(
            np.asarray(rows_x, dtype=np.intp),
            np.asarray(cols_x, dtype=np.intp),
            np.asarray(vals_x),
        )
        return self._zeeman_z, self._zeeman_x

    # -- Hamiltonian -------------------------------------------------------

    def hamiltonian_au(self, fields: FieldConfig) -> np.ndarray:
        """Dense real-symmetric H in Hartree, in this system's frame."""
        dim = len(self.basis)
        h = np.zeros((dim, dim))
        h[np.diag_indices(dim)] = self.energies0_au
        f_au = cst.vcm_to_au(fields.e_field_vcm)
        if f_au != 0.0:
            tab = self.stark_table()
            h[tab.rows, tab.cols] += f_au * tab.vals
        if fields.b_field_gauss != 0.0:
            b_x, b_z = fields.b_frame_components()
            tab_z, tab_x = self.zeeman_tables()
            # mu_B = 1/2 in atomic units
            if b_z != 0.0:
                h[tab_z.rows, tab_z.cols] += 0.5 * cst.gauss_to_au(b_z) * tab_z.vals
            if b_x != 0.0:
                h[tab_x.rows, tab_x.cols] += 0.5 * cst.gauss_to_au(b_x) * tab_x.vals
        diag = np.diag(h).copy()
        h = h + h.T
        h[np.diag_indices(dim)] = diag
        return h

    def hamiltonian(self, fields: FieldConfig) -> np.ndarray:
        """Dense Hermitian H in rad/s (relative to the ionization limit)."""
        n_values = {s.n for s in self.basis}
        if len(n_values) < 3 and fields.e_field_vcm > 0:
            warnings.warn(
                "fewer than 3 principal quantum numbers in the basis; "
                "Stark eigenvalues are unlikely to be converged",
                stacklevel=2,
            )
        return self.hamiltonian_au(fields) * cst.AU_ENERGY_RADS

    def eigenstates(
        self,
        fields: FieldConfig,
        reference_rads: float = 0.0,
        reference: str = "ionization limit",
    ) -> list[StarkEigenstate]:
        """Full dense diagonalization; energies relative to reference_rads."""
        h = self.hamiltonian(fields)
        h[np.diag_indices(len(self.basis))] -= reference_rads
        return diagonalize(
            h, basis=self.basis, frame=fields.quantization_frame(), reference=reference
        )

    def _position_table(self, q: int) -> _CouplingTable:
        """Full (non-symmetrized) COO of the spherical component r_q."""
        cached = self._position_q.get(q)
        if cached is not None:
            return cached
        rows, cols, vals = [], [], []
        by_ljm: dict[tuple[int, float, float], list[int]] = {}
        for i, s in enumerate(self.basis):
            by_ljm.setdefault((s.l, s.j, s.mj), []).append(i)
        for (l, j, mj), idxs in by_ljm.items():
            mj2 = mj + q
            for l2 in (l - 1, l + 1):
                for j2 in ((0.5,) if l2 == 0 else (l2 - 0.5, l2 + 0.5)):
                    if l2 < 0 or abs(j2 - j) > 1.0 or (l2, j2, mj2) not in by_ljm:
                        continue
                    ang = dipole_angular_factor(l2, j2, mj2, l, j, mj, q)
                    if ang == 0.0:
                        continue
                    for i in idxs:
                        si = self.basis[i]
                        for k in by_ljm[(l2, j2, mj2)]:
                            sk = self.basis[k]
                            rad = self.solver.radial_integral(
                                (si.n, si.l, si.j), (sk.n, sk.l, sk.j)
                            )
                            rows.append(k)
                            cols.append(i)
                            vals.append(ang * rad)
        table = _CouplingTable(
            np.asarray(rows, dtype=np.intp),
            np.asarray(cols, dtype=np.intp),
            np.asarray(vals),
        )
        self._position_q[q] = table
        return table

    def dipole_operator(self, polarization_lab, fields: FieldConfig):
        """Sparse COO data of e r . eps in the fields' quantization frame."""
        coeffs = operator_coefficients(fields.to_frame(polarization_lab))
        rows, cols, vals = [], [], []
        for q in (-1, 0, 1):
            if coeffs[q + 1] == 0.0:
                continue
            tab = self._position_table(q)
            rows.append(tab.rows)
            cols.append(tab.cols)
            vals.append(coeffs[q + 1] * tab.vals)
        if not rows:
            return (
                np.zeros(0, dtype=np.intp),
                np.zeros(0, dtype=np.intp),
                np.zeros(0, dtype=complex),
            )
        return (
            np.concatenate(rows),
            np.concatenate(cols),
            np.concatenate(vals).astype(complex),
        )


def build_hamiltonian(
    basis: list[BasisState],
    fields: FieldConfig,
    defects: QuantumDefectTable,
    system: AtomicSystem | None = None,
) -> np.ndarray:
    """H = H0 + H_Stark + H_Zeeman as a dense Hermitian matrix in rad/s."""
    system = system or AtomicSystem(basis, defects)
    return system.hamiltonian(fields)


def diagonalize(
    h: np.ndarray,
    basis: tuple[BasisState, ...] | None = None,
    frame: np.ndarray | None = None,
    reference: str = "ionization limit",
) -> list[StarkEigenstate]:
    """Eigenpairs of a Hermitian matrix (rad/s), ascending in energy."""
    h = np.asarray(h)
    scale = np.max(np.abs(h)) or 1.0
    if np.max(np.abs(h - h.conj().T)) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian")
    energies, vectors = np.linalg.eigh(h)
    if basis is None:
        basis = tuple(
            BasisState(i + 1, 0, 0.5, 0.5) for i in range(h.shape[0])
        )  # placeholder labels for label-free use
    if frame is None:
        frame = np.eye(3)
    return [
        StarkEigenstate(
            energy=float(energies[k]),
            amplitudes=vectors[:, k].copy(),
            basis=basis,
            frame=frame,
            reference=reference,
        )
        for k in range(h.shape[0])
    ]


def transition_dipole(
    system: AtomicSystem,
    initial: StarkEigenstate,
    final: StarkEigenstate,
    polarization_lab,
    fields: FieldConfig,
) -> complex:
    """<final| e r . eps |initial> in units of e*a0.

    Both states must be expressed in the system's basis and share the frame
    implied by ``fields``.
    """
    if initial.basis is not final.basis and initial.basis != final.basis:
        raise ValueError("eigenstates are expressed in different bases")
    if len(initial.amplitudes) != len(system.basis):
        raise ValueError("eigenstate basis does not match this system")
    rows, cols, vals = system.dipole_operator(polarization_lab, fields)
    op_psi = np.zeros(len(system.basis), dtype=complex)
    np.add.at(op_psi, rows, vals * initial.amplitudes[cols])
    return complex(np.vdot(final.amplitudes, op_psi))
