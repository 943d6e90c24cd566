"""Angular momentum algebra: Wigner symbols and |l,j,mj> operator factors.

Half-integer angular momenta are passed as floats and handled internally as
doubled integers, so values like j=2.5 are exact.  Everything heavily used
is cached: the Hamiltonian build asks for the same few thousand factors over
and over.
"""

from functools import lru_cache
from math import lgamma, sqrt, exp

import numpy as np


def _two_j(x):
    t = round(2 * x)
    if abs(2 * x - t) > 1e-9:
        raise ValueError(f"angular momentum {x} is not integer or half-integer")
    return t


def _fac_ln(n):
    # n is an integer >= 0
    return lgamma(n + 1)


@lru_cache(maxsize=None)
def _wigner3j_doubled(dj1, dj2, dj3, dm1, dm2, dm3):
    if dm1 + dm2 + dm3 != 0:
        return 0.0
    if not (abs(dj1 - dj2) <= dj3 <= dj1 + dj2):
        return 0.0
    if abs(dm1) > dj1 or abs(dm2) > dj2 or abs(dm3) > dj3:
        return 0.0
    if (dj1 + dj2 + dj3) % 2 != 0:
        return 0.0
    if (dj1 + dm1) % 2 != 0 or (dj2 + dm2) % 2 != 0 or (dj3 + dm3) % 2 != 0:
        return 0.0

    # Racah formula with log-factorials; all arguments below are true integers.
    def f(dx):
        return _fac_ln(dx // 2)

    pre = 0.5 * (
        f(dj1 + dj2 - dj3) + f(dj1 - dj2 + dj3) + f(-dj1 + dj2 + dj3)
        - f(dj1 + dj2 + dj3 + 2)
        + f(dj1 + dm1) + f(dj1 - dm1) + f(dj2 + dm2) + f(dj2 - dm2)
        + f(dj3 + dm3) + f(dj3 - dm3)
    )
    t_min = max(0, (dj2 - dj3 - dm1) // 2, (dj1 - dj3 + dm2) // 2)
    t_max = min((dj1 + dj2 - dj3) // 2, (dj1 - dm1) // 2, (dj2 + dm2) // 2)
    total = 0.0
    for t in range(t_min, t_max + 1):
        ln_den = (
            _fac_ln(t)
            + _fac_ln(t - (dj2 - dj3 - dm1) // 2)
            + _fac_ln(t - (dj1 - dj3 + dm2) // 2)
            + _fac_ln((dj1 + dj2 - dj3) // 2 - t)
            + _fac_ln((dj1 - dm1) // 2 - t)
            + _fac_ln((dj2 + dm2) // 2 - t)
        )
        total += (-1.0) ** t * exp(pre - ln_den)
    sign = (-1.0) ** ((dj1 - dj2 - dm3) // 2)
    return sign * total


def wigner_3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol (j1 j2 j3 / m1 m2 m3)."""
    return _wigner3j_doubled(
        _two_j(j1), _two_j(j2), _two_j(j3), _two_j(m1), _two_j(m2), _two_j(m3)
    )


@lru_cache(maxsize=None)
def _wigner6j_doubled(dj1, dj2, dj3, dj4, dj5, dj6):
    def triangle_ok(da, db, dc):
        return abs(da - db) <= dc <= da + db and (da + db + dc) % 2 == 0

    for tri in ((dj1, dj2, dj3), (dj1, dj5, dj6), (dj4, dj2, dj6), (dj4, dj5, dj3)):
        if not triangle_ok(*tri):
            return 0.0

    def tri_ln(da, db, dc):
        return 0.5 * (
            _fac_ln((da + db - dc) // 2)
            + _fac_ln((da - db + dc) // 2)
            + _fac_ln((-da + db + dc) // 2)
            - _fac_ln((da + db + dc) // 2 + 1)
        )

    pre = (
        tri_ln(dj1, dj2, dj3) + tri_ln(dj1, dj5, dj6)
        + tri_ln(dj4, dj2, dj6) + tri_ln(dj4, dj5, dj3)
    )
    s1 = (dj1 + dj2 + dj3) // 2
    s2 = (dj1 + dj5 + dj6) // 2
    s3 = (dj4 + dj2 + dj6) // 2
    s4 = (dj4 + dj5 + dj3) // 2
    q1 = (dj1 + dj2 + dj4 + dj5) // 2
    q2 = (dj2 + dj3 + dj5 + dj6) // 2
    q3 = (dj3 + dj1 + dj6 + dj4) // 2
    t_min = max(s1, s2, s3, s4)
    t_max = min(q1, q2, q3)
    total = 0.0
    for t in range(t_min, t_max + 1):
        ln_num = _fac_ln(t + 1)
        ln_den = (
            _fac_ln(t - s1) + _fac_ln(t - s2) + _fac_ln(t - s3) + _fac_ln(t - s4)
            + _fac_ln(q1 - t) + _fac_ln(q2 - t) + _fac_ln(q3 - t)
        )
        total += (-1.0) ** t * exp(pre + ln_num - ln_den)
    return total


def wigner_6j(j1, j2, j3, j4, j5, j6):
    """Wigner 6j symbol {j1 j2 j3 / j4 j5 j6}."""
    return _wigner6j_doubled(
        _two_j(j1), _two_j(j2), _two_j(j3), _two_j(j4), _two_j(j5), _two_j(j6)
    )


def clebsch_gordan(j1, m1, j2, m2, j, m):
    """<j1 m1; j2 m2 | j m>."""
    if abs(m1 + m2 - m) > 1e-9:
        return 0.0
    return (
        (-1.0) ** round(j1 - j2 + m)
        * sqrt(2 * j + 1)
        * wigner_3j(j1, j2, j, m1, m2, -m)
    )


@lru_cache(maxsize=None)
def _c1_lbasis_doubled(dl2, dml2, dl1, dml1, dq2):
    # <l2 ml2 | C^1_q | l1 ml1> with C the Racah spherical tensor of rank 1;
    # Wigner-Eckart phase (-1)^(l2-ml2) times reduced-element phase (-1)^l2.
    l2, l1 = dl2 // 2, dl1 // 2
    pref = (-1.0) ** (l2 + (dl2 - dml2) // 2) * sqrt((2 * l1 + 1) * (2 * l2 + 1))
    return (
        pref
        * _wigner3j_doubled(dl2, 2, dl1, -dml2, dq2, dml1)
        * _wigner3j_doubled(dl2, 2, dl1, 0, 0, 0)
    )


@lru_cache(maxsize=None)
def _dipole_angular_doubled(dl2, dj2, dmj2, dl1, dj1, dmj1, dq2):
    # <l2 j2 mj2 | C^1_q | l1 j1 mj1> by explicit decomposition over |ml, ms>.
    if dmj2 != dmj1 + dq2:
        return 0.0
    total = 0.0
    for dms in (-1, 1):
        dml1 = dmj1 - dms
        dml2 = dmj2 - dms
        if abs(dml1) > dl1 or abs(dml2) > dl2:
            continue
        cg1 = clebsch_gordan(dl1 / 2, dml1 / 2, 0.5, dms / 2, dj1 / 2, dmj1 / 2)
        cg2 = clebsch_gordan(dl2 / 2, dml2 / 2, 0.5, dms / 2, dj2 / 2, dmj2 / 2)
        if cg1 == 0.0 or cg2 == 0.0:
            continue
        total += cg1 * cg2 * _c1_lbasis_doubled(dl2, dml2, dl1, dml1, dq2)
    return total


def dipole_angular_factor(l2, j2, mj2, l1, j1, mj1, q):
    """Angular factor <l2 j2 mj2|C^1_q|l1 j1 mj1>.

    The full matrix element of the spherical position component r_q is this
    factor times the radial integral <n2 l2 j2|r|n1 l1 j1>.
    """
    return _dipole_angular_doubled(
        _two_j(l2), _two_j(j2), _two_j(mj2),
        _two_j(l1), _two_j(j1), _two_j(mj1), _two_j(q),
    )


def _lj_states(l):
    # (j, mj) pairs of one l, in deterministic order.
    js = [0.5] if l == 0 else [l - 0.5, l + 0.5]
    return [(j, mj / 2.0) for j in js for mj in range(-_two_j(j), _two_j(j) + 1, 2)]


@lru_cache(maxsize=None)
def magnetic_moment_matrices(l, g_s):
    """Matrices of L_i + g_s S_i (i = x, y, z) in the |l j mj> basis of one l.

    Returns (states, Mx, My, Mz) where states is the (j, mj) tuple list and
    My is returned as a complex array (Mx, Mz are real).
    Built by CG transformation from the product basis |ml>|ms>, where the
    ladder-operator matrix elements are elementary.
    """
    states = _lj_states(l)
    mls = list(range(-l, l + 1))
    mss = [-0.5, 0.5]
    prod = [(ml, ms) for ml in mls for ms in mss]
    dim_p = len(prod)

    def ladder(j, m):
        return sqrt(j * (j + 1) - m * (m + 1))  # <j m+1|J+|j m>

    lp = np.zeros((dim_p, dim_p))
    sp = np.zeros((dim_p, dim_p))
    lz = np.zeros((dim_p, dim_p))
    sz = np.zeros((dim_p, dim_p))
    index = {p: i for i, p in enumerate(prod)}
    for i, (ml, ms) in enumerate(prod):
        lz[i, i] = ml
        sz[i, i] = ms
        if (ml + 1, ms) in index:
            lp[index[(ml + 1, ms)], i] = ladder(l, ml)
        if (ml, ms + 1) in index:
            sp[index[(ml, ms + 1)], i] = ladder(0.5, ms)

    lx = 0.5 * (lp + lp.T)
    ly = -0.5j * (lp - lp.T)
    sx = 0.5 * (sp + sp.T)
    sy = -0.5j * (sp - sp.T)

    # CG transform columns: |j mj> = sum_{ml ms} CG |ml ms>
    trans = np.zeros((dim_p, len(states)))
    for col, (j, mj) in enumerate(states):
        for (ml, ms), row in index.items():
            trans[row, col] = clebsch_gordan(l, ml, 0.5, ms, j, mj)

    mx = trans.T @ (lx + g_s * sx) @ trans
    my = trans.T @ (ly + g_s * sy) @ trans
    mz = trans.T @ (lz + g_s * sz) @ trans
    return tuple(states), mx, my.astype(complex), mz
