"""Stark maps: per-point diagonalization, level tracking, resonances.

With the quantization axis along E the static Hamiltonian splits into
mj blocks coupled only by the transverse Zeeman term (a few MHz here,
versus GHz-scale Stark structure).  Each map point is therefore computed
in two exact-arithmetic stages:

1. every mj block of H0 + H_Stark (+ longitudinal Zeeman) is diagonalized
   independently, keeping eigenpairs inside an energy window around the
   reference level;
2. the transverse Zeeman coupling is projected onto those window states
   and the small projected matrix is diagonalized.

Stage 2 with an all-encompassing window reproduces the dense
diagonalization exactly; a finite window neglects only Zeeman coupling to
states outside it, i.e. (few MHz)^2 / (window margin) -- negligible for
margins of a few GHz.  When the longitudinal Zeeman component vanishes
(E perpendicular to B, the chip geometry) the -mj blocks are obtained
from the +mj blocks by the sign map (-1)^(l + j + 1/2).
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.optimize import linear_sum_assignment

from .. import constants as cst
from .basis import BasisState, FieldConfig
from .hamiltonian import AtomicSystem, StarkEigenstate


@dataclass
class _Block:
    mj: float
    idx: np.ndarray  # global basis indices
    diag_au: np.ndarray
    stark: scipy.sparse.csr_matrix | None  # local, upper triangle, per a.u. field
    zeeman_z: scipy.sparse.csr_matrix | None  # local, field-included, off-diagonal
    mirror_of: int | None = None  # index of the +mj partner block
    mirror_sign: np.ndarray | None = None


class StarkPoint:
    """Window eigenstates of one field value, in compact two-stage form."""

    def __init__(self, engine, field_vcm, energies_rads, block_ids, w_blocks, coeffs):
        self._engine = engine
        self.field_vcm = field_vcm
        self.energies = energies_rads  # rad/s relative to engine reference
        self._block_ids = block_ids  # block index per retained block
        self._w_blocks = w_blocks  # stage-1 eigenvector matrix per retained block
        self._coeffs = coeffs  # stage-2 coefficients, (w_total x n_states)

    def __len__(self):
        return len(self.energies)

    def _iter_blocks(self):
        offset = 0
        for b, w in zip(self._block_ids, self._w_blocks):
            yield b, w, offset
            offset += w.shape[1]

    def amplitude_matrix(self, columns=None) -> np.ndarray:
        """Primitive-basis amplitudes, one column per requested state."""
        cols = np.arange(len(self)) if columns is None else np.atleast_1d(columns)
        dim = len(self._engine.system.basis)
        out = np.zeros((dim, len(cols)))
        for b, w, offset in self._iter_blocks():
            seg = self._coeffs[offset : offset + w.shape[1], cols]
            out[self._engine.blocks[b].idx, :] += w @ seg
        return out

    def eigenstate(self, k: int) -> StarkEigenstate:
        amps = self.amplitude_matrix(k)[:, 0]
        return StarkEigenstate(
            energy=float(self.energies[k]),
            amplitudes=amps,
            basis=self._engine.system.basis,
            frame=self._engine.fields_template.quantization_frame(),
            reference=self._engine.reference_name,
        )

    def dominant_labels(self) -> list[BasisState]:
        amps = self.amplitude_matrix()
        basis = self._engine.system.basis
        return [basis[i] for i in np.argmax(amps**2, axis=0)]

    def project(self, vector: np.ndarray) -> np.ndarray:
        """Overlaps <state_k | vector> for a primitive-basis vector."""
        segs = [
            w.T @ vector[self._engine.blocks[b].idx]
            for b, w, _ in self._iter_blocks()
        ]
        if not segs:
            return np.zeros(0, dtype=vector.dtype)
        return self._coeffs.T @ np.concatenate(segs)

    def dipoles_from(self, k: int, polarization_lab) -> np.ndarray:
        """<state_m| e r.eps |state_k> for all m, in e*a0."""
        rows, cols, vals = self._engine.system.dipole_operator(
            polarization_lab, self._engine.fields_template
        )
        psi = self.amplitude_matrix(k)[:, 0].astype(complex)
        op_psi = np.zeros(len(psi), dtype=complex)
        np.add.at(op_psi, rows, vals * psi[cols])
        return self.project(op_psi.real) + 1j * self.project(op_psi.imag)

    def overlap_matrix(self, other: "StarkPoint") -> np.ndarray:
        """|<self_k | other_j>| between adjacent map points."""
        blocks_other = {b: (w, off) for b, w, off in other._iter_blocks()}
        total = np.zeros((len(self), len(other)))
        for b, w_self, off_self in self._iter_blocks():
            if b not in blocks_other:
                continue
            w_other, off_other = blocks_other[b]
            gram = w_self.T @ w_other
            c_self = self._coeffs[off_self : off_self + w_self.shape[1], :]
            c_other = other._coeffs[off_other : off_other + w_other.shape[1], :]
            total += (c_self.T @ gram) @ c_other
        return np.abs(total)


class StarkMapEngine:
    """Two-stage diagonalization machinery shared by map points."""

    def __init__(
        self,
        system: AtomicSystem,
        fields_template: FieldConfig,
        window_rads: tuple[float, float] = (-cst.TWO_PI * 2.0e9, cst.TWO_PI * 30.0e9),
        reference_state: BasisState = BasisState(48, 2, 2.5, 0.5),
    ):
        self.system = system
        self.fields_template = fields_template
        self.reference_state = reference_state
        self.reference_name = (
            f"zero-field n={reference_state.n} l={reference_state.l} j={reference_state.j}"
        )
        self.reference_au = cst.rads_to_au(
            -cst.TWO_PI
            * cst.RYDBERG_RB_HZ
            / system.defects.effective_n(reference_state) ** 2
        )
        self.window_au = (
            self.reference_au + cst.rads_to_au(window_rads[0]),
            self.reference_au + cst.rads_to_au(window_rads[1]),
        )
        b_x, b_z = fields_template.b_frame_components()
        self.bx_au = cst.gauss_to_au(b_x)
        self.bz_au = cst.gauss_to_au(b_z)
        self.blocks = self._build_blocks()
        self._zeeman_x_pairs = self._build_zeeman_x_pairs()

    # -- setup ---------------------------------------------------------------

    def _build_blocks(self) -> list[_Block]:
        basis = self.system.basis
        by_mj: dict[float, list[int]] = {}
        for i, s in enumerate(basis):
            by_mj.setdefault(s.mj, []).append(i)
        mirror_ok = self.bz_au == 0.0

        blocks: list[_Block] = []
        self._global_to_block: dict[int, tuple[int, int]] = {}
        pos_index: dict[float, int] = {}
        for mj in sorted(by_mj, key=lambda m: (abs(m), -m)):  # +|mj| first
            idx = np.asarray(by_mj[mj], dtype=np.intp)
            for li, g in enumerate(idx):
                self._global_to_block[g] = (len(blocks), li)
            blk = _Block(
                mj=mj,
                idx=idx,
                diag_au=self.system.energies0_au[idx].copy(),
                stark=None,
                zeeman_z=None,
            )
            if mirror_ok and mj < 0 and -mj in pos_index:
                blk.mirror_of = pos_index[-mj]
                blk.mirror_sign = np.array(
                    [(-1.0) ** round(basis[g].l + basis[g].j + 0.5) for g in idx]
                )
            blocks.append(blk)
            if mj > 0:
                pos_index[mj] = len(blocks) - 1

        stark_buckets: dict[int, tuple[list, list, list]] = {}
        tab = self.system.stark_table()
        for r, c, v in zip(tab.rows, tab.cols, tab.vals):
            bi, lr = self._global_to_block[r]
            _, lc = self._global_to_block[c]
            rows, cols, vals = stark_buckets.setdefault(bi, ([], [], []))
            rows.append(lr)
            cols.append(lc)
            vals.append(v)

        zz_buckets: dict[int, tuple[list, list, list]] = {}
        if self.bz_au != 0.0:
            tab_z, _ = self.system.zeeman_tables()
            for r, c, v in zip(tab_z.rows, tab_z.cols, tab_z.vals):
                bi, lr = self._global_to_block[r]
                _, lc = self._global_to_block[c]
                if lr == lc:
                    blocks[bi].diag_au[lr] += 0.5 * self.bz_au * v
                else:
                    rows, cols, vals = zz_buckets.setdefault(bi, ([], [], []))
                    rows.append(lr)
                    cols.append(lc)
                    vals.append(0.5 * self.bz_au * v)

        for bi, blk in enumerate(blocks):
            if blk.mirror_of is not None:
                continue
            n = len(blk.idx)
            if bi in stark_buckets:
                rows, cols, vals = stark_buckets[bi]
                blk.stark = scipy.sparse.coo_matrix(
                    (vals, (rows, cols)), shape=(n, n)
                ).tocsr()
            if bi in zz_buckets:
                rows, cols, vals = zz_buckets[bi]
                blk.zeeman_z = scipy.sparse.coo_matrix(
                    (vals, (rows, cols)), shape=(n, n)
                ).tocsr()
        return blocks

    def _build_zeeman_x_pairs(self):
        _, tab_x = self.system.zeeman_tables()
        pairs: dict[tuple[int, int], tuple[list, list, list]] = {}
        for r, c, v in zip(tab_x.rows, tab_x.cols, tab_x.vals):
            bi, lr = self._global_to_block[r]
            bj, lc = self._global_to_block[c]
            if bi == bj:
                continue  # transverse Zeeman never conserves mj
            if bi > bj:
                bi, bj, lr, lc = bj, bi, lc, lr
            rows, cols, vals = pairs.setdefault((bi, bj), ([], [], []))
            rows.append(lr)
            cols.append(lc)
            vals.append(v)
        return {
            (bi, bj): scipy.sparse.coo_matrix(
                (vals, (rows, cols)),
                shape=(len(self.blocks[bi].idx), len(self.blocks[bj].idx)),
            ).tocsr()
            for (bi, bj), (rows, cols, vals) in pairs.items()
        }

    # -- per-point work --------------------------------------------------------

    def block_hamiltonian(self, bi: int, f_vcm: float) -> np.ndarray:
        """Dense mj-block Hamiltonian in a.u. (mirrors resolved to source)."""
        blk = self.blocks[bi]
        if blk.mirror_of is not None:
            src = self.block_hamiltonian(blk.mirror_of, f_vcm)
            return (blk.mirror_sign[:, None] * src) * blk.mirror_sign[None, :]
        f_au = cst.vcm_to_au(f_vcm)
        h = np.zeros((len(blk.idx),) * 2)
        if blk.stark is not None and f_au != 0.0:
            h += (f_au * blk.stark).toarray()
        if blk.zeeman_z is not None:
            h += blk.zeeman_z.toarray()
        h = h + h.T
        h[np.diag_indices_from(h)] = blk.diag_au
        return h

    def _stage1(self, f_vcm: float):
        lo, hi = self.window_au
        results: list[tuple[np.ndarray, np.ndarray]] = []
        for bi, blk in enumerate(self.blocks):
            if blk.mirror_of is not None:
                src_e, src_v = results[blk.mirror_of]
                results.append((src_e, blk.mirror_sign[:, None] * src_v))
                continue
            h = self.block_hamiltonian(bi, f_vcm)
            if len(blk.idx) == 1:
                keep = (blk.diag_au >= lo) & (blk.diag_au <= hi)
                results.append((blk.diag_au[keep], np.ones((1, 1))[:, keep]))
                continue
            e, v = scipy.linalg.eigh(
                h, subset_by_value=(lo, hi), driver="evr", check_finite=False
            )
            results.append((e, v))
        return results

    def point(self, f_vcm: float) -> StarkPoint:
        stage1 = self._stage1(f_vcm)
        block_ids, w_blocks, energies = [], [], []
        offsets: dict[int, int] = {}
        offset = 0
        for bi, (e, v) in enumerate(stage1):
            if len(e) == 0:
                continue
            block_ids.append(bi)
            w_blocks.append(v)
            energies.append(e)
            offsets[bi] = offset
            offset += len(e)
        if offset == 0:
            return StarkPoint(self, f_vcm, np.zeros(0), [], [], np.zeros((0, 0)))
        h2 = np.diag(np.concatenate(energies))
        if self.bx_au != 0.0:
            for (bi, bj), mat in self._zeeman_x_pairs.items():
                if bi not in offsets or bj not in offsets:
                    continue
                vi = stage1[bi][1]
                vj = stage1[bj][1]
                coupling = 0.5 * self.bx_au * (vi.T @ (mat @ vj))
                oi, oj = offsets[bi], offsets[bj]
                h2[oi : oi + vi.shape[1], oj : oj + vj.shape[1]] += coupling
                h2[oj : oj + vj.shape[1], oi : oi + vi.shape[1]] += coupling.T
        e2, c2 = np.linalg.eigh(h2)
        energies_rads = (e2 - self.reference_au) * cst.AU_ENERGY_RADS
        return StarkPoint(self, f_vcm, energies_rads, block_ids, w_blocks, c2)


@dataclass
class TrackingDiagnostic:
    chain: int
    grid_index: int
    overlap: float
    note: str


@dataclass
class LevelChain:
    indices: list  # state index per grid point, None where untracked


@dataclass
class StarkMap:
    field_grid: np.ndarray
    energies: list  # per point: np.ndarray (rad/s, relative to reference)
    labels: list  # per point: list[BasisState]
    chains: list
    diagnostics: list
    reference_state: BasisState
    reference_name: str
    points: list | None = None  # retained StarkPoint objects, optional

    def chain_curve(self, chain_id: int):
        """(fields, energies) arrays for one tracked level, NaN where absent."""
        idxs = self.chains[chain_id].indices
        e = np.full(len(self.field_grid), np.nan)
        for p, k in enumerate(idxs):
            if k is not None:
                e[p] = self.energies[p][k]
        return self.field_grid, e

    def crossing_fields(self, target_rads: float) -> list[tuple[float, int]]:
        """Fields where tracked levels cross target (rad/s), interpolated.

        Returns (field, chain_id) pairs sorted by field.
        """
        out = []
        for ci in range(len(self.chains)):
            f, e = self.chain_curve(ci)
            for p in range(len(f) - 1):
                a, b = e[p] - target_rads, e[p + 1] - target_rads
                if np.isnan(a) or np.isnan(b) or a * b > 0:
                    continue
                frac = a / (a - b) if a != b else 0.5
                out.append((float(f[p] + frac * (f[p + 1] - f[p])), ci))
        return sorted(out)

    def export_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "field_Vcm",
                    "level_index",
                    "energy_GHz_rel_48D",
                    "dominant_n",
                    "dominant_l",
                    "dominant_mj",
                ]
            )
            for p, f_vcm in enumerate(self.field_grid):
                for k in range(len(self.energies[p])):
                    lab = self.labels[p][k]
                    writer.writerow(
                        [
                            f"{f_vcm:.6f}",
                            k,
                            f"{cst.rads_to_ghz(self.energies[p][k]):.9f}",
                            lab.n,
                            lab.l,
                            f"{lab.mj:g}",
                        ]
                    )


def compute_stark_map(
    system: AtomicSystem,
    field_grid,
    fields_template: FieldConfig | None = None,
    window_rads: tuple[float, float] = (-cst.TWO_PI * 2.0e9, cst.TWO_PI * 30.0e9),
    reference_state: BasisState = BasisState(48, 2, 2.5, 0.5),
    threads: int = 1,
    keep_points: bool = False,
) -> StarkMap:
    """Diagonalize on a field grid and track levels by eigenvector overlap."""
    field_grid = np.asarray(field_grid, dtype=float)
    if len(field_grid) == 0 or np.any(np.diff(field_grid) <= 0):
        raise ValueError("field grid must be non-empty and strictly increasing")
    fields_template = fields_template or FieldConfig()
    engine = StarkMapEngine(
        system, fields_template, window_rads=window_rads, reference_state=reference_state
    )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(engine.point, field_grid))
    else:
        points = [engine.point(f) for f in field_grid]

    energies = [p.energies.copy() for p in points]
    labels = [p.dominant_labels() for p in points]
    chains: list[LevelChain] = []
    owner: dict[tuple[int, int], int] = {}
    diagnostics: list[TrackingDiagnostic] = []

    def new_chain(p, k):
        chain = LevelChain(indices=[None] * len(field_grid))
        chain.indices[p] = k
        owner[(p, k)] = len(chains)
        chains.append(chain)

    for k in range(len(points[0])):
        new_chain(0, k)
    for p in range(len(field_grid) - 1):
        matched_next: set[int] = set()
        if len(points[p]) and len(points[p + 1]):
            ov = points[p].overlap_matrix(points[p + 1])
            rows, cols = linear_sum_assignment(-ov)
            for r, c in zip(rows, cols):
                ci = owner[(p, r)]
                if ov[r, c] <= 0.5:
                    diagnostics.append(
                        TrackingDiagnostic(
                            chain=ci,
                            grid_index=p + 1,
                            overlap=float(ov[r, c]),
                            note="adiabatic continuity lost; chain split",
                        )
                    )
                    continue
                chains[ci].indices[p + 1] = c
                owner[(p + 1, c)] = ci
                matched_next.add(c)
        for k in range(len(points[p + 1])):
            if k not in matched_next:
                new_chain(p + 1, k)

    return StarkMap(
        field_grid=field_grid,
        energies=energies,
        labels=labels,
        chains=chains,
        diagnostics=diagnostics,
        reference_state=reference_state,
        reference_name=engine.reference_name,
        points=points if keep_points else None,
    )


def static_dipole(stark_map: StarkMap, chain_id: int, field_vcm: float) -> float:
    """Stark gradient of a tracked level near field_vcm, in MHz/(V/cm)."""
    f, e = stark_map.chain_curve(chain_id)
    valid = ~np.isnan(e)
    if valid.sum() < 2:
        raise ValueError("level is not tracked across at least 2 grid points")
    f, e = f[valid], e[valid]
    if len(f) >= 3:
        k = int(np.argmin(np.abs(f - field_vcm)))
        k = min(max(k, 1), len(f) - 2)
        slope = (e[k + 1] - e[k - 1]) / (f[k + 1] - f[k - 1])
    else:
        slope = (e[1] - e[0]) / (f[1] - f[0])
    return cst.rads_to_mhz(slope)


@dataclass
class ResonantTransition:
    index: int
    detuning_rads: float
    dipole_ea0: complex
    label: BasisState
    energy_rads: float


def find_resonant_transitions(
    point: StarkPoint,
    from_index: int,
    polarization_lab,
    target_rads: float,
    window_rads: float,
) -> list[ResonantTransition]:
    """Window states within window_rads of the target transition frequency."""
    if window_rads <= 0:
        raise ValueError("search window must be positive")
    omega = point.energies - point.energies[from_index]
    detuning = omega - target_rads
    hits = np.nonzero(np.abs(detuning) < window_rads)[0]
    dipoles = point.dipoles_from(from_index, polarization_lab)
    labels = point.dominant_labels()
    out = [
        ResonantTransition(
            index=int(k),
            detuning_rads=float(detuning[k]),
            dipole_ea0=complex(dipoles[k]),
            label=labels[k],
            energy_rads=float(point.energies[k]),
        )
        for k in hits
    ]
    return sorted(out, key=lambda t: abs(t.detuning_rads))
