"""Nonlinear least squares and the three experiment fit pipelines.

The optimizer is a self-contained damped Gauss-Newton (Levenberg-Marquardt
style) solver with a central-difference Jacobian and bound handling by
projection.  Weights follow counting statistics: sigma = sqrt(max(y, 1))
unless explicit errors are given.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import constants as cst
from .cavity import CavityParams, TwoLevelParams, broadened_spectrum
from .surface import AdsorbateFieldModel, CloudBeamProfile, CompensationField, compensation_scan


@dataclass(frozen=True)
class FitParameter:
    name: str
    initial: float
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower <= self.initial <= self.upper:
            raise ValueError(
                f"initial value of '{self.name}' ({self.initial}) outside bounds "
                f"[{self.lower}, {self.upper}]"
            )


@dataclass
class FitProblem:
    """Model + data + free parameters; loss is weighted squared residuals."""

    model: object  # callable(params: np.ndarray, x: np.ndarray) -> np.ndarray
    x: np.ndarray
    y: np.ndarray
    y_err: np.ndarray
    parameters: list

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.y_err = np.asarray(self.y_err, dtype=float)
        if len(self.x) != len(self.y) or len(self.y) != len(self.y_err):
            raise ValueError("x, y, y_err must have equal lengths")
        if np.any(self.y_err <= 0):
            raise ValueError("y errors must be positive")
        if len(self.y) < len(self.parameters) + 1:
            raise ValueError("need more data points than free parameters")

    def residuals(self, p: np.ndarray) -> np.ndarray:
        model_y = np.asarray(self.model(p, self.x), dtype=float)
        if np.any(~np.isfinite(model_y)):
            raise ValueError(f"model returned non-finite values at parameters {p.tolist()}")
        return (model_y - self.y) / self.y_err


@dataclass
class FitResult:
    names: list
    estimates: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    notes: list = field(default_factory=list)

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def __getitem__(self, name: str) -> float:
        return float(self.estimates[self.names.index(name)])

    def sigma(self, name: str) -> float:
        return float(self.uncertainties[self.names.index(name)])

    def to_json(self, seed=None) -> str:
        payload = {
            "estimates": dict(zip(self.names, map(float, self.estimates))),
            "uncertainties_1sigma": dict(zip(self.names, map(float, self.uncertainties))),
            "covariance": self.covariance.tolist(),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "notes": self.notes,
        }
        if seed is not None:
            payload["seed"] = seed
        return json.dumps(payload, indent=2)


def _jacobian(problem: FitProblem, p: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    cols = []
    for i in range(len(p)):
        h = rel_step * (abs(p[i]) if p[i] != 0.0 else 1.0)
        p_hi = p.copy()
        p_lo = p.copy()
        p_hi[i] += h
        p_lo[i] -= h
        cols.append((problem.residuals(p_hi) - problem.residuals(p_lo)) / (2 * h))
    return np.column_stack(cols)


def least_squares(problem: FitProblem, max_iterations: int = 200) -> FitResult:
    """Damped Gauss-Newton descent with bound projection.

    Converges when the relative residual change or the parameter step drops
    below 1e-10.  A singular Jacobian yields converged=False with a note.
    """
    lower = np.array([q.lower for q in problem.parameters])
    upper = np.array([q.upper for q in problem.parameters])
    names = [q.name for q in problem.parameters]
    p = np.array([q.initial for q in problem.parameters], dtype=float)
    r = problem.residuals(p)
    cost = float(r @ r)
    lam = 1e-3
    notes = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        jac = _jacobian(problem, p)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        for _ in range(25):
            damp = jtj + lam * np.diag(np.clip(np.diag(jtj), 1e-30, None))
            try:
                step = np.linalg.solve(damp, -jtr)
            except np.linalg.LinAlgError:
                notes.append("singular Jacobian")
                return FitResult(
                    names, p, np.full((len(p),) * 2, np.nan), math.sqrt(cost),
                    False, iterations, notes,
                )
            p_new = np.clip(p + step, lower, upper)
            try:
                r_new = problem.residuals(p_new)
            except ValueError:
                lam *= 10.0
                continue
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            notes.append("no downhill step found; stopping")
            break
        step_size = np.max(np.abs(p_new - p) / np.maximum(np.abs(p), 1.0))
        rel_drop = (cost - cost_new) / max(cost, 1e-300)
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        if rel_drop < 1e-10 or step_size < 1e-10:
            converged = True
            break
    jac = _jacobian(problem, p)
    jtj = jac.T @ jac
    dof = max(len(problem.y) - len(p), 1)
    try:
        cov = np.linalg.inv(jtj) * (cost / dof)
    except np.linalg.LinAlgError:
        cov = np.full((len(p),) * 2, np.nan)
        notes.append("covariance unavailable (singular normal matrix)")
        converged = False
    return FitResult(names, p, cov, math.sqrt(cost), converged, iterations, notes)


@dataclass(frozen=True)
class SyntheticDataset:
    x: np.ndarray
    mean: np.ndarray  # noiseless model counts per pulse
    counts: np.ndarray  # Poisson-drawn totals over all pulses
    pulses: int
    seed: int

    @property
    def y(self) -> np.ndarray:
        """Per-pulse normalized counts."""
        return self.counts / self.pulses

    @property
    def y_err(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.counts, 1.0)) / self.pulses


def synthesize(model, params, x_grid, pulses_per_point: int, seed: int) -> SyntheticDataset:
    """Poisson draws around model(params, x) * pulses, reproducible by seed."""
    if pulses_per_point < 1:
        raise ValueError("pulses_per_point must be >= 1")
    x = np.asarray(x_grid, dtype=float)
    mean = np.asarray(model(np.asarray(params, dtype=float), x), dtype=float)
    if np.any(mean < 0):
        raise ValueError("model mean is negative; cannot draw Poisson counts")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean * pulses_per_point).astype(float)
    return SyntheticDataset(x, mean, counts, pulses_per_point, seed)


def poisson_errors(counts, pulses: int = 1) -> np.ndarray:
    """Counting-statistics sigma: sqrt(max(counts, 1)), per pulse."""
    return np.sqrt(np.maximum(np.asarray(counts, dtype=float), 1.0)) / pulses


# -- pipeline: compensation-field excitation scan  ---------------------------


def scan_model(resonance_fields, profile: CloudBeamProfile, z_max_um: float = 10000.0):
    """Forward model factory: params = [A_1..A_m, E0, zeta, E_xy]."""

    def model(p, e_h_grid):
        amps = p[: len(resonance_fields)]
        surface = AdsorbateFieldModel(p[-3], p[-2], p[-1])
        states = list(zip(resonance_fields, amps))
        totals, _ = compensation_scan(e_h_grid, states, surface, profile, z_max_um)
        return totals

    return model


def fit_excitation_scan(
    e_h: np.ndarray,
    counts: np.ndarray,
    resonance_fields: list,
    profile: CloudBeamProfile,
    initial_surface: AdsorbateFieldModel | None = None,
    y_err: np.ndarray | None = None,
) -> FitResult:
    """Fit layer strengths and adsorbate-field parameters to a scan."""
    counts = np.asarray(counts, dtype=float)
    informative = int(np.sum(counts > 0))
    if informative < 5:
        raise ValueError(
            f"only {informative} informative scan points; the scan is under-determined"
        )
    guess = initial_surface or AdsorbateFieldModel()
    amp0 = max(float(np.max(counts)), 1e-6)
    params = [
        FitParameter(f"A_{i}", amp0, 0.0, math.inf) for i in range(len(resonance_fields))
    ] + [
        FitParameter("E0_Vcm", guess.e0_vcm, 1e-3, math.inf),
        FitParameter("zeta_um", guess.zeta_um, 1e-3, math.inf),
        FitParameter("Exy_Vcm", guess.exy_vcm, 0.0, math.inf),
    ]
    problem = FitProblem(
        model=scan_model(resonance_fields, profile),
        x=e_h,
        y=counts,
        y_err=poisson_errors(counts) if y_err is None else y_err,
        parameters=params,
    )
    return least_squares(problem)


# -- pipeline: steady-state spectrum -----------------------------------------


def spectrum_model(cavity: CavityParams, atoms_template: TwoLevelParams, nodes: int = 401):
    """Forward model factory: params = [rabi_ref, omega_12, omega_c, amp, offset]."""

    def model(p, omega_mw_grid):
        rabi_ref, omega_12, omega_c, amp, offset = p
        cav = CavityParams(
            omega_c=omega_c,
            kappa=cavity.kappa,
            length_mm=cavity.length_mm,
            capacitance_per_length_pf_m=cavity.capacitance_per_length_pf_m,
            harmonic_index=cavity.harmonic_index,
        )
        atoms = TwoLevelParams(
            omega_12_mean=omega_12,
            delta_omega_12=atoms_template.delta_omega_12,
            gamma_decay=atoms_template.gamma_decay,
            dipole_ea0=atoms_template.dipole_ea0,
        )
        rho = broadened_spectrum(omega_mw_grid, cav, atoms, abs(rabi_ref), nodes=nodes)
        return amp * rho + offset

    return model


def fit_spectrum(
    omega_mw: np.ndarray,
    p2: np.ndarray,
    cavity: CavityParams,
    atoms_template: TwoLevelParams,
    y_err: np.ndarray | None = None,
    initial_rabi: float | None = None,
) -> FitResult:
    """Fit (Rabi frequency, line center, cavity frequency, amplitude, offset)."""
    omega_mw = np.asarray(omega_mw, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if len(omega_mw) < 7:
        raise ValueError("need at least 7 frequency points across the line")
    base = float(np.percentile(p2, 10))
    peak_idx = int(np.argmax(p2))
    omega_peak = float(omega_mw[peak_idx])
    if initial_rabi is None:
        above = omega_mw[p2 > 0.5 * (p2[peak_idx] + base)]
        fwhm = float(above.max() - above.min()) if len(above) > 1 else cavity.kappa / 10
        initial_rabi = max(fwhm / 2.0, atoms_template.delta_omega_12 / 4.0)
    span = float(omega_mw.max() - omega_mw.min())
    params = [
        FitParameter("rabi_ref", initial_rabi, 0.0, math.inf),
        FitParameter("omega_12", omega_peak, omega_mw.min() - span, omega_mw.max() + span),
        FitParameter("omega_c", cavity.omega_c, cavity.omega_c - 20 * cavity.kappa,
                     cavity.omega_c + 20 * cavity.kappa),
        FitParameter("amplitude", max(2.0 * (p2[peak_idx] - base), 1e-6), 0.0, math.inf),
        FitParameter("offset", base, -math.inf, math.inf),
    ]
    if y_err is None:
        y_err = np.full_like(p2, max(np.std(p2) / 10.0, 1e-6))
    problem = FitProblem(
        model=spectrum_model(cavity, atoms_template),
        x=omega_mw,
        y=p2,
        y_err=y_err,
        parameters=params,
    )
    result = least_squares(problem)
    if result.converged and result.sigma("omega_c") > cavity.kappa:
        result.notes.append(
            "cavity frequency weakly identified (1-sigma interval exceeds kappa)"
        )
    return result


def fit_spectrum_joint(
    datasets: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    cavity: CavityParams,
    atoms_template: TwoLevelParams,
    initial_rabis: list | None = None,
) -> FitResult:
    """Simultaneous fit of spectra at several pump powers.

    Each dataset is (omega_mw, p2, y_err).  The line center, cavity
    frequency, and amplitude are shared; each power gets its own Rabi
    frequency and offset.  Sharing breaks the amplitude/Rabi degeneracy of
    a weakly saturated single spectrum.
    """
    m = len(datasets)
    if m < 2:
        raise ValueError("joint fit needs at least two power settings")
    bounds = np.cumsum([0] + [len(d[0]) for d in datasets])
    x_all = np.concatenate([np.asarray(d[0], dtype=float) for d in datasets])
    y_all = np.concatenate([np.asarray(d[1], dtype=float) for d in datasets])
    e_all = np.concatenate([np.asarray(d[2], dtype=float) for d in datasets])
    single = spectrum_model(cavity, atoms_template)

    def model(p, _x):
        rabis = p[:m]
        omega_12, omega_c, amp = p[m : m + 3]
        offsets = p[m + 3 :]
        parts = []
        for i in range(m):
            seg = x_all[bounds[i] : bounds[i + 1]]
            parts.append(
                single(np.array([rabis[i], omega_12, omega_c, amp, offsets[i]]), seg)
            )
        return np.concatenate(parts)

    peaks = [float(np.asarray(d[0])[np.argmax(d[1])]) for d in datasets]
    omega_peak = float(np.median(peaks))
    if initial_rabis is None:
        initial_rabis = []
        for omega_mw, p2, _ in datasets:
            base = float(np.percentile(p2, 10))
            hw = np.asarray(omega_mw)[np.asarray(p2) > 0.5 * (np.max(p2) + base)]
            fwhm = float(hw.max() - hw.min()) if len(hw) > 1 else cavity.kappa / 10
            initial_rabis.append(max(fwhm / 2.0, atoms_template.delta_omega_12 / 4.0))
    span = float(x_all.max() - x_all.min())
    y_scale = float(np.max(y_all) - np.min(y_all))
    params = (
        [FitParameter(f"rabi_{i}", initial_rabis[i], 0.0, math.inf) for i in range(m)]
        + [
            FitParameter("omega_12", omega_peak, x_all.min() - span, x_all.max() + span),
            FitParameter("omega_c", cavity.omega_c, cavity.omega_c - 20 * cavity.kappa,
                         cavity.omega_c + 20 * cavity.kappa),
            FitParameter("amplitude", max(2.0 * y_scale, 1e-6), 0.0, math.inf),
        ]
        + [
            FitParameter(f"offset_{i}", float(np.percentile(datasets[i][1], 10)),
                         -math.inf, math.inf)
            for i in range(m)
        ]
    )
    problem = FitProblem(model=model, x=x_all, y=y_all, y_err=e_all, parameters=params)
    return least_squares(problem)


# -- pipeline: Rabi trace -----------------------------------------------------


def rabi_trace_model():
    """params = [rabi, gamma_per_s, amplitude, offset]; x in seconds."""

    def model(p, t):
        rabi, gamma, amp, offset = p
        return amp * 0.5 * (1.0 - np.exp(-(gamma * t) ** 2) * np.cos(rabi * t)) + offset

    return model


def estimate_rabi_fft(t: np.ndarray, y: np.ndarray) -> float:
    """Dominant angular frequency of a uniformly sampled trace."""
    dt = float(np.mean(np.diff(t)))
    detrended = y - np.mean(y)
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(len(t), dt)
    k = int(np.argmax(spectrum[1:])) + 1
    return cst.TWO_PI * float(freqs[k])


def fit_rabi_trace(
    t_s: np.ndarray,
    p2: np.ndarray,
    y_err: np.ndarray | None = None,
    initial_rabi: float | None = None,
) -> FitResult:
    """Fit damped-oscillation parameters to a Rabi trace.

    The model is amp (1 - exp(-(gamma t)^2) cos(Omega t))/2 + offset; the
    Rabi frequency is seeded from the FFT peak of the trace.
    """
    t_s = np.asarray(t_s, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    rabi0 = initial_rabi if initial_rabi is not None else estimate_rabi_fft(t_s, p2)
    periods = rabi0 * (t_s.max() - t_s.min()) / cst.TWO_PI
    if periods < 1.5:
        raise ValueError(
            f"trace covers only {periods:.2f} oscillation periods; need >= 1.5"
        )
    dt = float(np.mean(np.diff(t_s)))
    if rabi0 * dt > cst.TWO_PI / 4.0:
        warnings.warn(
            "fewer than 4 samples per oscillation period; the Rabi frequency "
            "estimate may alias",
            stacklevel=2,
        )
    amp0 = 2.0 * float(np.percentile(p2, 95) - np.percentile(p2, 5))
    params = [
        FitParameter("rabi", rabi0, 0.0, math.inf),
        FitParameter("gamma_per_s", 0.1 * rabi0, 0.0, math.inf),
        FitParameter("amplitude", max(amp0, 1e-6), 0.0, math.inf),
        FitParameter("offset", float(np.percentile(p2, 5)), -math.inf, math.inf),
    ]
    if y_err is None:
        y_err = np.full_like(p2, max(np.std(p2) / 10.0, 1e-6))
    problem = FitProblem(
        model=rabi_trace_model(), x=t_s, y=p2, y_err=y_err, parameters=params
    )
    return least_squares(problem)
