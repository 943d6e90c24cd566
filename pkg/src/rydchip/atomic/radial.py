"""Radial wavefunctions and matrix elements by Numerov integration.

The radial equation is integrated on a logarithmic grid x = ln(r): with
u(r) = r R(r) and Y(x) = u / sqrt(r),

    Y''(x) = g(x) Y(x),    g = (l + 1/2)^2 + 2 mu r^2 (V(r) - E),

which the Numerov scheme solves at O(h^4).  Integration runs from the
outer grid limit 2 n (n + 15) a0 inward; the unphysical growing solution
near the core is cut where the amplitude stops decaying inside the inner
turning point.  All states of one solver share a common x-lattice so that
overlap integrals are plain vector products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .. import constants as cst
from .basis import BasisState, QuantumDefectTable, zero_field_energy_au


@dataclass(frozen=True)
class CorePotential:
    """Parametric one-electron model potential V(r) = -Z_l(r)/r - core term.

    Z_l(r) = 1 + (Z-1) e^{-a1 r} - r (a3 + a4 r) e^{-a2 r}; the core
    polarization term is -alpha_c/(2 r^4) (1 - e^{-(r/rc)^6}).  Parameters
    are per-l up to l = 3, hydrogenic beyond.
    """

    z_nuclear: int
    alpha_c: float
    params: tuple[tuple[float, float, float, float, float], ...]  # (a1,a2,a3,a4,rc)
    mu: float = 1.0  # reduced mass in electron masses

    def __call__(self, l: int, r: np.ndarray) -> np.ndarray:
        if self.z_nuclear == 1 and self.alpha_c == 0.0:
            return -1.0 / r
        a1, a2, a3, a4, rc = self.params[min(l, len(self.params) - 1)]
        z_eff = (
            1.0
            + (self.z_nuclear - 1) * np.exp(-a1 * r)
            - r * (a3 + a4 * r) * np.exp(-a2 * r)
        )
        core = -self.alpha_c / (2.0 * r**4) * (1.0 - np.exp(-((r / rc) ** 6)))
        return -z_eff / r + core


#: Marinescu et al. model potential parameters for rubidium.
RB87_POTENTIAL = CorePotential(
    z_nuclear=37,
    alpha_c=9.0760,
    params=(
        (3.69628474, 1.64915255, -9.86069196, 0.19579987, 1.66242117),
        (4.44088978, 1.92828831, -16.79597770, -0.81633314, 1.50195124),
        (3.78717363, 1.57027864, -11.65588970, 0.52942658, 4.86851938),
        (2.39848933, 1.76810544, -12.07106780, 0.77256589, 4.79831327),
    ),
    mu=1.0 / (1.0 + cst.ELECTRON_MASS / cst.RB87_MASS),
)

#: Bare Coulomb potential; used by the hydrogen oracles.
COULOMB_POTENTIAL = CorePotential(z_nuclear=1, alpha_c=0.0, params=((0, 0, 0, 0, 1),))


def numerov_inward(g: np.ndarray, h: float) -> np.ndarray:
    """Solve Y'' = g Y from the outer end inward, seeded in the forbidden tail."""
    y = np.zeros_like(g)
    t = g * (h * h / 12.0)
    y[-1] = 0.0
    y[-2] = 1e-12
    for i in range(len(y) - 3, -1, -1):
        y[i] = (
            2.0 * y[i + 1] * (1.0 + 5.0 * t[i + 1]) - y[i + 2] * (1.0 - t[i + 2])
        ) / (1.0 - t[i])
        if abs(y[i]) > 1e100:  # rescale to dodge overflow deep in forbidden regions
            y[i:] *= 1e-100
    return y


@dataclass(frozen=True)
class RadialWavefunction:
    """Y(x) samples on the shared lattice, starting at lattice index i_lo."""

    i_lo: int
    values: np.ndarray  # normalized so that integral u^2 dr = 1

    @property
    def i_hi(self) -> int:
        return self.i_lo + len(self.values)


class RadialSolver:
    """Numerov solver with per-(n, l, j) wavefunction and integral caches."""

    def __init__(
        self,
        defects: QuantumDefectTable,
        potential: CorePotential = RB87_POTENTIAL,
        r_min: float = 0.5,
        points_per_wavelength: int = 24,
        n_cap: int = 90,
    ):
        self.defects = defects
        self.potential = potential
        self.x0 = math.log(r_min)
        self.h = 2.0 * math.pi / (points_per_wavelength * n_cap)
        self.n_cap = n_cap
        self._wf_cache: dict[tuple[int, int, float], RadialWavefunction] = {}
        self._int_cache: dict[tuple, float] = {}

    def lattice_r(self, i_lo: int, count: int) -> np.ndarray:
        x = self.x0 + self.h * (i_lo + np.arange(count))
        return np.exp(x)

    def wavefunction(self, n: int, l: int, j: float) -> RadialWavefunction:
        key = (n, l, j)
        cached = self._wf_cache.get(key)
        if cached is not None:
            return cached
        if n > self.n_cap:
            raise ValueError(f"n={n} exceeds solver n_cap={self.n_cap}")
        energy = zero_field_energy_au(BasisState(n, l, j, j), self.defects)
        r_out = 2.0 * n * (n + 15.0)
        count = int(math.ceil((math.log(r_out) - self.x0) / self.h)) + 1
        r = self.lattice_r(0, count)
        g = (l + 0.5) ** 2 + 2.0 * self.potential.mu * r**2 * (
            self.potential(l, r) - energy
        )
        y = numerov_inward(g, self.h)
        y = self._cut_core_divergence(y, g)
        y /= math.sqrt(trapezoid(y**2 * r**2, dx=self.h))
        nz = np.nonzero(y)[0]
        i_lo = int(nz[0]) if len(nz) else 0
        wf = RadialWavefunction(i_lo=i_lo, values=y[i_lo:].copy())
        self._wf_cache[key] = wf
        return wf

    @staticmethod
    def _cut_core_divergence(y: np.ndarray, g: np.ndarray) -> np.ndarray:
        # Inside the inner turning point the physical solution decays toward
        # the origin; renewed growth there is the unwanted Numerov branch.
        allowed = np.nonzero(g < 0.0)[0]
        if len(allowed) == 0:
            return y
        i_turn = int(allowed[0])
        amp = np.abs(y)
        cut = 0
        for i in range(i_turn - 1, -1, -1):
            if amp[i] > amp[i + 1]:
                cut = i + 1
                break
        if cut > 0:
            y = y.copy()
            y[:cut] = 0.0
        return y

    def radial_integral(self, s1: tuple, s2: tuple, power: int = 1) -> float:
        """<n1 l1 j1 | r^power | n2 l2 j2> in atomic units."""
        key = (min(s1, s2), max(s1, s2), power)
        cached = self._int_cache.get(key)
        if cached is not None:
            return cached
        r, weight = self.pair_product(s1, s2)
        value = float(np.sum(weight * r**power)) if len(r) else 0.0
        self._int_cache[key] = value
        return value

    def pair_product(self, s1: tuple, s2: tuple):
        """(r grid, u1*u2*dr quadrature weights) for custom radial integrals.

        Integrals of f(r) between the two states are sum(weight * f(r)).
        """
        wf1 = self.wavefunction(*s1)
        wf2 = self.wavefunction(*s2)
        i_lo = max(wf1.i_lo, wf2.i_lo)
        i_hi = min(wf1.i_hi, wf2.i_hi)
        if i_hi <= i_lo:
            return np.zeros(0), np.zeros(0)
        y1 = wf1.values[i_lo - wf1.i_lo : i_hi - wf1.i_lo]
        y2 = wf2.values[i_lo - wf2.i_lo : i_hi - wf2.i_lo]
        r = self.lattice_r(i_lo, i_hi - i_lo)
        weight = y1 * y2 * r**2 * self.h
        if len(weight) > 1:
            weight[0] *= 0.5
            weight[-1] *= 0.5
        return r, weight
