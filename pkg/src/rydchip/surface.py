"""Adsorbate surface field, excitation layers, and compensation-field scans.

The z component of the adsorbate field decays exponentially from the chip,
E0 exp(-z/zeta); a homogeneous compensation field E_h partially cancels it
and an uncompensated lateral component E_xy sets the floor of the total
field magnitude

    E(z) = sqrt((E0 exp(-z/zeta) - E_h)^2 + E_xy^2).

A Rydberg state resonant at field E_r is excited in up to two thin layers,
one on each side of the field minimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import constants as cst


@dataclass(frozen=True)
class AdsorbateFieldModel:
    """Exponential surface field: amplitude (V/cm), decay length (um),
    lateral component (V/cm)."""

    e0_vcm: float = 37.2
    zeta_um: float = 70.0
    exy_vcm: float = 3.482

    def __post_init__(self):
        if self.e0_vcm <= 0 or self.zeta_um <= 0 or self.exy_vcm < 0:
            raise ValueError("require E0 > 0, zeta > 0, E_xy >= 0")

    def to_json(self) -> str:
        return json.dumps(
            {"E0_Vcm": self.e0_vcm, "zeta_um": self.zeta_um, "Exy_Vcm": self.exy_vcm}
        )

    @classmethod
    def from_json(cls, text: str) -> "AdsorbateFieldModel":
        data = json.loads(text)
        return cls(data["E0_Vcm"], data["zeta_um"], data["Exy_Vcm"])


@dataclass(frozen=True)
class CompensationField:
    """Homogeneous compensation field (V/cm); 3 (V/cm) per volt of electrode."""

    e_h_vcm: float = 7.2
    vcm_per_volt: float = 3.0

    def __post_init__(self):
        if self.e_h_vcm < 0:
            raise ValueError("compensation field must be >= 0")

    @classmethod
    def from_voltage(cls, volts: float, vcm_per_volt: float = 3.0) -> "CompensationField":
        return cls(volts * vcm_per_volt, vcm_per_volt)


@dataclass(frozen=True)
class CloudBeamProfile:
    """Gaussian cloud and two-photon beam geometry (um)."""

    z_cloud_um: float = 130.0
    sigma_um: float = 25.0
    z_beam_um: float = 130.0
    waist_um: float = 25.0

    def __post_init__(self):
        if self.sigma_um <= 0 or self.waist_um <= 0:
            raise ValueError("cloud radius and beam waist must be positive")

    @classmethod
    def from_two_beams(cls, w780_um, w480_um, z_cloud_um=130.0, sigma_um=25.0, z_beam_um=130.0):
        w = w780_um * w480_um / math.sqrt(w780_um**2 + w480_um**2)
        return cls(z_cloud_um, sigma_um, z_beam_um, w)

    def density(self, z_um):
        return np.exp(-((np.asarray(z_um) - self.z_cloud_um) ** 2) / (2 * self.sigma_um**2))

    def intensity(self, z_um):
        return np.exp(-2 * (np.asarray(z_um) - self.z_beam_um) ** 2 / self.waist_um**2)


@dataclass(frozen=True)
class ExcitationLayer:
    state_id: str
    branch: int  # +1 or -1
    z_um: float
    gradient_vcm_per_um: float
    width_um: float
    weight: float


def total_field(z_um, model: AdsorbateFieldModel, comp: CompensationField):
    """Total field magnitude (V/cm) at height z (um) above the chip."""
    z = np.asarray(z_um, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be >= 0 (above the chip surface)")
    ez = model.e0_vcm * np.exp(-z / model.zeta_um) - comp.e_h_vcm
    return np.sqrt(ez**2 + model.exy_vcm**2)


def field_minimum(model: AdsorbateFieldModel, comp: CompensationField):
    """(z_min, E_min) of the total field; boundary minimum flagged via z=0.

    For E_h < E0 the z component cancels at z_min = zeta ln(E0/E_h) and the
    minimum equals the lateral component; otherwise the minimum sits at the
    chip surface.
    """
    if comp.e_h_vcm <= 0:
        return math.inf, comp.e_h_vcm  # never cancels; field decays toward E_h
    if comp.e_h_vcm >= model.e0_vcm:
        return 0.0, float(total_field(0.0, model, comp))
    z_min = model.zeta_um * math.log(model.e0_vcm / comp.e_h_vcm)
    return z_min, model.exy_vcm


def excitation_layer_positions(
    e_r_vcm: float, model: AdsorbateFieldModel, comp: CompensationField
) -> list[float]:
    """Heights z where the total field equals E_r: zero, one, or two layers.

    z_(r,+/-) = z_min - zeta ln(1 +/- sqrt((E_r^2 - E_xy^2))/E_h); the list
    holds the + branch first.  No excitation is possible for E_r below the
    lateral field; both layers merge at z_min when E_r equals it.
    """
    if e_r_vcm <= 0:
        raise ValueError("resonance field must be positive")
    if e_r_vcm < model.exy_vcm:
        return []
    z_min, _ = field_minimum(model, comp)
    if e_r_vcm == model.exy_vcm:
        return [z_min]
    beta = math.sqrt(e_r_vcm**2 - model.exy_vcm**2) / comp.e_h_vcm
    out = []
    for sign in (+1, -1):
        arg = 1.0 + sign * beta
        if arg <= 0:
            continue
        z = z_min - model.zeta_um * math.log(arg)
        if z >= 0:
            out.append(z)
    return out


def layer_gradient(
    e_r_vcm: float, model: AdsorbateFieldModel, comp: CompensationField, branch: int
) -> float:
    """|dE/dz| at the resonant layer (V/cm per um).

    Analytic form (E_h^2 / (zeta E_r)) beta (1 +/- beta) with
    beta = sqrt(E_r^2 - E_xy^2)/E_h; agrees with the finite difference of
    total_field away from the merged-layer point.
    """
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    if e_r_vcm <= model.exy_vcm:
        raise ValueError("no layer exists for E_r <= E_xy")
    beta = math.sqrt(e_r_vcm**2 - model.exy_vcm**2) / comp.e_h_vcm
    return (
        comp.e_h_vcm**2
        / (model.zeta_um * e_r_vcm)
        * beta
        * (1.0 + branch * beta)
    )


def layer_width(
    e_r_vcm: float,
    model: AdsorbateFieldModel,
    comp: CompensationField,
    branch: int,
    laser_linewidth_rads: float,
    stark_gradient_mhz_per_vcm: float,
) -> float:
    """Excitation layer thickness (um): laser linewidth over spectral slope.

    Valid when the two-photon Rabi frequency is small against the laser
    linewidth; at the merged-layer point the gradient vanishes and the
    width is reported as inf.
    """
    grad = layer_gradient(e_r_vcm, model, comp, branch)
    if grad == 0.0:
        return math.inf
    linewidth_mhz = laser_linewidth_rads / cst.TWO_PI / 1e6
    return linewidth_mhz / (abs(stark_gradient_mhz_per_vcm) * grad)


def field_variation_over_layer(
    e_r_vcm, model, comp, branch, width_um: float
) -> float:
    """Field change across one layer width (V/cm): width times gradient."""
    return width_um * layer_gradient(e_r_vcm, model, comp, branch)


def excitation_probability(
    comp: CompensationField,
    states: list[tuple[float, float]],  # (E_r, A_r) per state
    model: AdsorbateFieldModel,
    profile: CloudBeamProfile,
    z_max_um: float = 10000.0,
) -> float:
    """Relative Rydberg count: sum of A_r n(z) I(z) over all layers.

    Layers outside [0, z_max] (electrode distance) contribute nothing.
    """
    if not states:
        raise ValueError("need at least one (E_r, A_r) state")
    total = 0.0
    for e_r, weight in states:
        if e_r <= model.exy_vcm:
            continue
        for z in excitation_layer_positions(e_r, model, comp):
            if 0.0 <= z <= z_max_um:
                total += weight * float(profile.density(z) * profile.intensity(z))
    return total


def compensation_scan(
    e_h_grid,
    states: list[tuple[float, float]],
    model: AdsorbateFieldModel,
    profile: CloudBeamProfile,
    z_max_um: float = 10000.0,
):
    """Predicted counts on a grid of compensation fields.

    Returns (totals, per-contribution dict keyed (state_index, branch)).
    """
    e_h_grid = np.asarray(e_h_grid, dtype=float)
    totals = np.zeros_like(e_h_grid)
    contribs = {
        (si, br): np.zeros_like(e_h_grid) for si in range(len(states)) for br in (+1, -1)
    }
    for p, e_h in enumerate(e_h_grid):
        comp = CompensationField(float(e_h))
        for si, (e_r, weight) in enumerate(states):
            if e_r <= model.exy_vcm:
                continue
            layers = excitation_layer_positions(e_r, model, comp)
            for br, z in zip((+1, -1), layers):
                if 0.0 <= z <= z_max_um:
                    val = weight * float(profile.density(z) * profile.intensity(z))
                    contribs[(si, br)][p] = val
                    totals[p] += val
    return totals, contribs
