"""Exact multi-soliton fields of the focusing NLS from discrete spectral data.

A double (order-2) pole of the transmission problem at ``z_k`` in the upper
half plane carries two complex constants ``(c0, c1)``.  The piecewise-rational
solution matrix is reconstructed from a dense linear system over the Laurent
coefficients of its pole expansion; the field is read off the ``1/z`` moment,

    q(x, t) = 2i * lim_{z->inf} z * m_12(z).

Order-1 (simple pole) data embeds as the degenerate case ``c1 = 0``.

Two orientations are supported per pole: "lower" poles put the singular
columns on the left (the natural normalization), "upper" poles on the right.
Re-orienting a subset ``Delta`` of the spectrum is the column scaling
``m -> m * a_Delta(z)^{sigma3}`` with ``a_Delta`` the squared Blaschke product
over ``Delta``; :func:`reorient_constants` maps the pole constants
accordingly, and the reconstructed field is invariant under the change.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "DiscreteDatum",
    "OrientedData",
    "SolitonSystem",
    "SolitonState",
    "pole_coefficients",
    "assemble_system",
    "solve_soliton",
    "soliton_field",
    "evaluate_matrix",
    "outer_matrix_row",
    "mass_from_spectrum",
    "blaschke_product",
    "blaschke_derivatives_at_member",
    "reorient_constants",
    "modulate_constants",
    "restrict_to_interval",
]

_COINCIDENCE_TOL = 1e-12
_COND_WARN = 1e12


@dataclass(frozen=True)
class DiscreteDatum:
    """One point of the discrete spectrum with its reconstruction constants.

    ``c0`` and ``c1`` are the t-independent parts; the time/space dependent
    factors are assembled by :func:`pole_coefficients` at evaluation time.
    ``b`` and ``d`` optionally keep the raw connection coefficients recovered
    by forward scattering (they are not needed to reconstruct the field).
    """

    z: complex
    order: int = 2
    c0: complex = 0.0
    c1: complex = 1.0
    b: complex | None = None
    d: complex | None = None

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ValueError("pole order must be 1 or 2")
        if self.z.imag <= 0:
            raise ValueError("discrete spectrum must lie in the upper half plane")
        if self.order == 1 and self.c1 != 0:
            raise ValueError("order-1 data must carry c1 = 0")
        if self.order == 2 and self.c1 == 0:
            raise ValueError("order-2 data needs c1 != 0")


@dataclass(frozen=True)
class OrientedData:
    """Spectrum plus a per-pole column orientation ("lower" or "upper")."""

    data: tuple[DiscreteDatum, ...]
    orientations: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.data) != len(self.orientations):
            raise ValueError("one orientation per datum required")
        for o in self.orientations:
            if o not in ("lower", "upper"):
                raise ValueError(f"unknown orientation {o!r}")

    @staticmethod
    def all_lower(data) -> "OrientedData":
        data = tuple(data)
        return OrientedData(data, ("lower",) * len(data))


@dataclass
class SolitonSystem:
    """The dense block system for an all-lower orientation.

    Unknown vector layout: ``(alpha1, alpha2, conj(beta1), conj(beta2))``,
    each block of length N.  ``matrix`` is ``[[I, 0, A, B], [0, I, C, D],
    [-conj(A), -conj(B), I, 0], [-conj(C), -conj(D), 0, I]]`` and
    ``rhs = (0, 0, conj(gamma0), conj(gamma1))``.
    """

    z: np.ndarray
    gamma0: np.ndarray
    gamma1: np.ndarray
    A_blk: np.ndarray
    B_blk: np.ndarray
    C_blk: np.ndarray
    D_blk: np.ndarray
    rhs: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        n = len(self.z)
        eye = np.eye(n, dtype=np.complex128)
        zero = np.zeros((n, n), dtype=np.complex128)
        return np.block([
            [eye, zero, self.A_blk, self.B_blk],
            [zero, eye, self.C_blk, self.D_blk],
            [-np.conj(self.A_blk), -np.conj(self.B_blk), eye, zero],
            [-np.conj(self.C_blk), -np.conj(self.D_blk), zero, eye],
        ])


@dataclass
class SolitonState:
    """Solved Laurent coefficients of the solution matrix at one ``(x, t)``."""

    oriented: OrientedData
    x: float
    t: float
    alpha1: np.ndarray
    alpha2: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    q: complex
    residual: float
    condition: float
    ill_conditioned: bool
    m_out_row: np.ndarray | None = None


def pole_coefficients(datum: DiscreteDatum, x: float, t: float,
                      orientation: str = "lower") -> tuple[complex, complex]:
    """Assemble the (gamma0, gamma1) pair for one pole at ``(x, t)``.

    Lower orientation: ``gamma_i = c_i(x,t) * exp(+2i(t z^2 + x z))`` with the
    linear-in-derivative shift folded into gamma0; upper orientation mirrors
    the exponent and the shift sign.
    """
    z = datum.z
    shift = 4j * t * z + 2j * x
    if orientation == "lower":
        ph = cmath.exp(2j * t * z * z + 2j * x * z)
        return (datum.c0 + datum.c1 * shift) * ph, datum.c1 * ph
    if orientation == "upper":
        ph = cmath.exp(-(2j * t * z * z + 2j * x * z))
        return (datum.c0 - datum.c1 * shift) * ph, datum.c1 * ph
    raise ValueError(f"unknown orientation {orientation!r}")


def _check_distinct(zs: np.ndarray) -> None:
    n = len(zs)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(zs[i] - zs[j]) < _COINCIDENCE_TOL:
                raise ValueError(
                    f"coincident spectral points {zs[i]} and {zs[j]}")


def assemble_system(data, x: float, t: float) -> SolitonSystem:
    """Build the 4N x 4N block system for all-lower-oriented data."""
    data = tuple(data)
    zs = np.array([d.z for d in data], dtype=np.complex128)
    _check_distinct(zs)
    n = len(data)
    g0 = np.empty(n, dtype=np.complex128)
    g1 = np.empty(n, dtype=np.complex128)
    for i, d in enumerate(data):
        g0[i], g1[i] = pole_coefficients(d, x, t, "lower")

    # Pairwise displacements z_k - conj(z_j); rows index the pole whose
    # residue condition is being written, columns the coupled pole.
    w = zs[:, None] - np.conj(zs)[None, :]
    A = g0[:, None] / w - g1[:, None] / w**2
    B = g0[:, None] / w**2 - 2.0 * g1[:, None] / w**3
    C = g1[:, None] / w
    D = g1[:, None] / w**2

    rhs = np.concatenate([
        np.zeros(n, dtype=np.complex128),
        np.zeros(n, dtype=np.complex128),
        np.conj(g0),
        np.conj(g1),
    ])
    return SolitonSystem(zs, g0, g1, A, B, C, D, rhs)


def _scaled_residual(matrix: np.ndarray, u: np.ndarray, rhs: np.ndarray) -> float:
    num = float(np.max(np.abs(matrix @ u - rhs)))
    den = (float(np.max(np.abs(matrix))) * float(np.max(np.abs(u)))
           + float(np.max(np.abs(rhs))) + 1e-300)
    return num / den


def _assemble_mixed(oriented: OrientedData, x: float, t: float):
    """Conjugate-doubled 8N x 8N system for mixed orientations.

    Unknown layout: ``(alpha1, alpha2, beta1, beta2,
    conj(alpha1), conj(alpha2), conj(beta1), conj(beta2))``.
    """
    data = oriented.data
    orients = oriented.orientations
    n = len(data)
    zs = np.array([d.z for d in data], dtype=np.complex128)
    _check_distinct(zs)

    g0 = np.empty(n, dtype=np.complex128)
    g1 = np.empty(n, dtype=np.complex128)
    for i, (d, o) in enumerate(zip(data, orients)):
        g0[i], g1[i] = pole_coefficients(d, x, t, o)

    # Index helpers into the 8N unknown vector.
    def idx(block: int, j: int) -> int:
        return block * n + j

    dim = 8 * n
    M = np.zeros((dim, dim), dtype=np.complex128)
    rhs = np.zeros(dim, dtype=np.complex128)

    # Column vectors of the pole expansion, as linear forms over the unknowns:
    # col1(z) = e1 + sum_{j lower} (a1_j, b1_j)/(z-z_j) + (a2_j, b2_j)/(z-z_j)^2
    #              + sum_{j upper} (cb1_j, -ca1_j)/(z-zb_j) + (cb2_j, -ca2_j)/(z-zb_j)^2
    # col2(z) = e2 + sum_{j lower} (-cb1_j, ca1_j)/(z-zb_j) + (-cb2_j, ca2_j)/(z-zb_j)^2
    #              + sum_{j upper} (a1_j, b1_j)/(z-z_j) + (a2_j, b2_j)/(z-z_j)^2
    # (ca/cb denote conjugated unknowns, zb_j = conj(z_j)).
    def col_contribs(which: int):
        """List of (unknown_index, center, power, row1_coeff, row2_coeff)."""
        out = []
        for j, o in enumerate(orients):
            zb = np.conj(zs[j])
            if (o == "lower") == (which == 1):
                # direct coefficients at z_j
                out.append((idx(0, j), zs[j], 1, 1.0, 0.0))   # alpha1_j
                out.append((idx(2, j), zs[j], 1, 0.0, 1.0))   # beta1_j
                out.append((idx(1, j), zs[j], 2, 1.0, 0.0))   # alpha2_j
                out.append((idx(3, j), zs[j], 2, 0.0, 1.0))   # beta2_j
            elif o == "lower":
                # mirrored block of a lower pole, lives in column 2 at conj z_j
                out.append((idx(6, j), zb, 1, -1.0, 0.0))     # -conj(beta1_j)
                out.append((idx(4, j), zb, 1, 0.0, 1.0))      # +conj(alpha1_j)
                out.append((idx(7, j), zb, 2, -1.0, 0.0))
                out.append((idx(5, j), zb, 2, 0.0, 1.0))
            else:
                # mirrored block of an upper pole, lives in column 1 at conj z_j
                out.append((idx(6, j), zb, 1, 1.0, 0.0))      # +conj(beta1_j)
                out.append((idx(4, j), zb, 1, 0.0, -1.0))     # -conj(alpha1_j)
                out.append((idx(7, j), zb, 2, 1.0, 0.0))
                out.append((idx(5, j), zb, 2, 0.0, -1.0))
        return out

    contribs = {1: col_contribs(1), 2: col_contribs(2)}

    for k, o in enumerate(orients):
        which = 2 if o == "lower" else 1
        zk = zs[k]
        e_row1, e_row2 = (0.0, 1.0) if which == 2 else (1.0, 0.0)

        # order-2 condition rows: (alpha2_k, beta2_k) = gamma1 * col(z_k)
        r_a2, r_b2 = idx(1, k), idx(3, k)
        M[r_a2, idx(1, k)] += 1.0
        M[r_b2, idx(3, k)] += 1.0
        # order-1 condition rows: (alpha1_k, beta1_k) = gamma0*col + gamma1*col'
        r_a1, r_b1 = idx(0, k), idx(2, k)
        M[r_a1, idx(0, k)] += 1.0
        M[r_b1, idx(2, k)] += 1.0

        rhs[r_a2] += g1[k] * e_row1
        rhs[r_b2] += g1[k] * e_row2
        rhs[r_a1] += g0[k] * e_row1
        rhs[r_b1] += g0[k] * e_row2

        for (ui, ctr, power, cr1, cr2) in contribs[which]:
            if abs(zk - ctr) < _COINCIDENCE_TOL:
                raise ValueError("evaluation point collides with a pole")
            base = 1.0 / (zk - ctr) ** power
            dbase = -power / (zk - ctr) ** (power + 1)
            M[r_a2, ui] -= g1[k] * base * cr1
            M[r_b2, ui] -= g1[k] * base * cr2
            M[r_a1, ui] -= (g0[k] * base + g1[k] * dbase) * cr1
            M[r_b1, ui] -= (g0[k] * base + g1[k] * dbase) * cr2

    # Conjugated copies close the real-linear system: swap the two 4N halves
    # of the unknown vector and conjugate coefficients and right-hand sides.
    half = 4 * n
    for r in range(half):
        rc = r + half
        rhs[rc] = np.conj(rhs[r])
        for cidx in range(dim):
            if M[r, cidx] != 0.0:
                M[rc, (cidx + half) % dim] = np.conj(M[r, cidx])
    return M, rhs, g0, g1


def solve_soliton(data, x: float, t: float,
                  orientations=None, z_eval: complex | None = None) -> SolitonState:
    """Solve the pole system at ``(x, t)`` and reconstruct the field value.

    ``data`` may be a sequence of :class:`DiscreteDatum` (all-lower by
    default) or an :class:`OrientedData`.  ``z_eval`` optionally requests the
    first row of the solution matrix at one point (stored in ``m_out_row``).
    """
    if isinstance(data, OrientedData):
        oriented = data
    else:
        data = tuple(data)
        if orientations is None:
            oriented = OrientedData.all_lower(data)
        else:
            oriented = OrientedData(data, tuple(orientations))

    n = len(oriented.data)
    if n == 0:
        state = SolitonState(oriented, x, t,
                             *(np.zeros(0, dtype=np.complex128) for _ in range(4)),
                             q=0.0 + 0.0j, residual=0.0, condition=1.0,
                             ill_conditioned=False)
        if z_eval is not None:
            state.m_out_row = outer_matrix_row(state, z_eval)
        return state

    all_lower = all(o == "lower" for o in oriented.orientations)
    if all_lower:
        system = assemble_system(oriented.data, x, t)
        M = system.matrix
        rhs = system.rhs
        u = np.linalg.solve(M, rhs)
        alpha1 = u[0 * n:1 * n]
        alpha2 = u[1 * n:2 * n]
        beta1 = np.conj(u[2 * n:3 * n])
        beta2 = np.conj(u[3 * n:4 * n])
    else:
        M, rhs, _, _ = _assemble_mixed(oriented, x, t)
        u = np.linalg.solve(M, rhs)
        mismatch = float(np.max(np.abs(u[4 * n:] - np.conj(u[:4 * n]))))
        scale = float(np.max(np.abs(u))) + 1e-300
        if mismatch > 1e-8 * scale:
            warnings.warn(
                f"conjugate-pair mismatch {mismatch:.2e} in the doubled solve",
                RuntimeWarning)
        alpha1 = u[0 * n:1 * n]
        alpha2 = u[1 * n:2 * n]
        beta1 = u[2 * n:3 * n]
        beta2 = u[3 * n:4 * n]

    residual = _scaled_residual(M, u, rhs)
    condition = float(abs(np.linalg.cond(M, 1)))
    ill = condition > _COND_WARN
    if ill:
        warnings.warn(f"pole system condition number {condition:.2e}",
                      RuntimeWarning)

    # q = 2i * (1/z moment of m_12): lower poles contribute -conj(beta1),
    # upper poles contribute alpha1.
    moment = 0.0 + 0.0j
    for j, o in enumerate(oriented.orientations):
        moment += alpha1[j] if o == "upper" else -np.conj(beta1[j])
    q = 2j * moment

    state = SolitonState(oriented, x, t, alpha1, alpha2, beta1, beta2,
                         q=complex(q), residual=residual, condition=condition,
                         ill_conditioned=ill)
    if z_eval is not None:
        state.m_out_row = outer_matrix_row(state, z_eval)
    return state


def soliton_field(data, x_values, t: float, orientations=None) -> np.ndarray:
    """Evaluate ``q(x, t)`` over an array of ``x`` (one dense solve each)."""
    out = np.empty(len(x_values), dtype=np.complex128)
    for i, x in enumerate(np.asarray(x_values, dtype=float)):
        out[i] = solve_soliton(data, float(x), t, orientations=orientations).q
    return out


def evaluate_matrix(state: SolitonState, z) -> np.ndarray:
    """Closed-form solution matrix at points ``z`` (shape ``z.shape + (2, 2)``)."""
    z = np.asarray(z, dtype=np.complex128)
    m = np.zeros(z.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = 1.0
    m[..., 1, 1] = 1.0
    for j, o in enumerate(state.oriented.orientations):
        zj = state.oriented.data[j].z
        w1 = 1.0 / (z - zj)
        w2 = w1 * w1
        v1 = 1.0 / (z - np.conj(zj))
        v2 = v1 * v1
        a1, a2 = state.alpha1[j], state.alpha2[j]
        b1, b2 = state.beta1[j], state.beta2[j]
        if o == "lower":
            m[..., 0, 0] += a1 * w1 + a2 * w2
            m[..., 1, 0] += b1 * w1 + b2 * w2
            m[..., 0, 1] += -np.conj(b1) * v1 - np.conj(b2) * v2
            m[..., 1, 1] += np.conj(a1) * v1 + np.conj(a2) * v2
        else:
            m[..., 0, 1] += a1 * w1 + a2 * w2
            m[..., 1, 1] += b1 * w1 + b2 * w2
            m[..., 0, 0] += np.conj(b1) * v1 + np.conj(b2) * v2
            m[..., 1, 0] += -np.conj(a1) * v1 - np.conj(a2) * v2
    return m


def outer_matrix_row(state: SolitonState, z: complex) -> np.ndarray:
    """First row ``(m_11, m_12)`` of the solution matrix at one point."""
    m = evaluate_matrix(state, np.asarray(z, dtype=np.complex128))
    return np.array([m[..., 0, 0], m[..., 0, 1]]).reshape(2)


def mass_from_spectrum(data) -> float:
    """Trace-formula mass: each pole contributes ``4 * order * Im z_k``."""
    return float(sum(4.0 * d.order * d.z.imag for d in data))


# ---------------------------------------------------------------------------
# Orientation changes (column scaling by a squared Blaschke product)
# ---------------------------------------------------------------------------

def blaschke_product(z, members) -> np.ndarray:
    """``prod_k ((z - z_k)/(z - conj z_k))^order`` over the member data."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.ones_like(z)
    for d in members:
        out = out * ((z - d.z) / (z - np.conj(d.z))) ** d.order
    return out


def _log_deriv_sums(z: complex, members, skip: int | None = None):
    """First three derivatives of ``log a_Delta`` at a regular point ``z``."""
    l1 = l2 = l3 = 0.0 + 0.0j
    for i, d in enumerate(members):
        if i == skip:
            continue
        p = d.order
        for c, sgn in ((d.z, 1.0), (np.conj(d.z), -1.0)):
            w = z - c
            l1 += sgn * p / w
            l2 -= sgn * p / w**2
            l3 += sgn * 2.0 * p / w**3
    return l1, l2, l3


def blaschke_value_and_derivs(z: complex, members) -> tuple[complex, complex, complex]:
    """``(a, a', a'')`` of the Blaschke product at a non-member point."""
    a = complex(blaschke_product(np.asarray(z, dtype=np.complex128), members))
    l1, l2, _ = _log_deriv_sums(z, members)
    return a, a * l1, a * (l2 + l1 * l1)


def blaschke_derivatives_at_member(members, k: int) -> tuple[complex, complex]:
    """Leading derivatives of ``a_Delta`` at its own k-th zero.

    For an order-2 member returns ``(a'', a''')``; for order-1, ``(a', a'')``.
    Uses the factored form ``a(z) = (z - z_k)^p g(z)`` with ``g`` evaluated
    exactly, so no cancellation occurs at the zero.
    """
    d = members[k]
    zk = d.z
    p = d.order
    g = (zk - np.conj(zk)) ** (-p)
    for i, other in enumerate(members):
        if i == k:
            continue
        g = g * ((zk - other.z) / (zk - np.conj(other.z))) ** other.order
    # log-derivative of g at z_k
    lg = -p / (zk - np.conj(zk))
    l1, _, _ = _log_deriv_sums(zk, members, skip=k)
    lg += l1
    if p == 2:
        return 2.0 * g, 6.0 * g * lg
    return g, 2.0 * g * lg


def reorient_constants(data, delta_indices) -> OrientedData:
    """Move the poles listed in ``delta_indices`` to the upper orientation.

    The constants of every pole change under the column scaling by the
    squared Blaschke product ``a`` over the flipped subset:

    * member ``k`` of the flipped set (order 2):
      ``c1~ = 4 / (c1 * a''(z_k)^2)``,
      ``c0~ = -c1~ * (c0/c1 + 2 a'''(z_k) / (3 a''(z_k)))``;
      order-1 members: ``c0~ = 1 / (c0 * a'(z_k)^2)``;
    * remaining poles keep the lower orientation with
      ``c1~ = c1 * a(z_k)^2``, ``c0~ = (c0 + 2 c1 a'(z_k)/a(z_k)) * a(z_k)^2``
      (order-1: ``c0~ = c0 * a(z_k)^2``).
    """
    data = tuple(data)
    delta_indices = sorted(set(int(i) for i in delta_indices))
    members = [data[i] for i in delta_indices]
    member_pos = {i: pos for pos, i in enumerate(delta_indices)}

    new_data = []
    orients = []
    for i, d in enumerate(data):
        if i in member_pos:
            if d.order == 2:
                app, appp = blaschke_derivatives_at_member(members, member_pos[i])
                c1t = 4.0 / (d.c1 * app * app)
                c0t = -c1t * (d.c0 / d.c1 + 2.0 * appp / (3.0 * app))
            else:
                ap, _ = blaschke_derivatives_at_member(members, member_pos[i])
                c0t, c1t = 1.0 / (d.c0 * ap * ap), 0.0
            new_data.append(replace(d, c0=complex(c0t), c1=complex(c1t)))
            orients.append("upper")
        else:
            a, ap, _ = blaschke_value_and_derivs(d.z, members)
            if d.order == 2:
                c1t = d.c1 * a * a
                c0t = (d.c0 + 2.0 * d.c1 * ap / a) * a * a
            else:
                c0t, c1t = d.c0 * a * a, 0.0
            new_data.append(replace(d, c0=complex(c0t), c1=complex(c1t)))
            orients.append("lower")
    return OrientedData(tuple(new_data), tuple(orients))


def modulate_constants(data, delta_at) -> tuple[DiscreteDatum, ...]:
    """Weight every pole's constants by ``delta(z_k)^2``.

    ``delta_at`` is a callable returning the scalar radiation factor at a
    point of the upper half plane (supplied by :mod:`fnls.phase`); for
    reflectionless data pass ``lambda z: 1.0``.
    """
    out = []
    for d in data:
        if d.z.imag <= 0:
            raise ValueError("modulation is defined off the real axis only")
        w = complex(delta_at(d.z)) ** 2
        out.append(replace(d, c0=d.c0 * w, c1=d.c1 * w))
    return tuple(out)


def restrict_to_interval(data, interval: tuple[float, float],
                         z0: float) -> OrientedData:
    """Keep the poles whose ``Re z_k`` lies in the closed interval, then give
    those left of ``z0`` the upper orientation (ties stay lower with a
    warning, mirroring the partition convention)."""
    lo, hi = interval
    kept = [d for d in data if lo <= d.z.real <= hi]
    delta = []
    for i, d in enumerate(kept):
        if d.z.real < z0:
            delta.append(i)
        elif d.z.real == z0:
            warnings.warn(f"pole at Re z = z0 = {z0}; keeping lower orientation",
                          RuntimeWarning)
    return reorient_constants(kept, delta)
