"""Reproducing kernel of the model space: block series and resolvent form.

The kernel expands into four coefficient families indexed by pairs of
orders, all of which are cross-Gram matrices of two ladders of window
blocks: adjoint powers applied to the model subspace and dual powers
applied to it.  That structure makes the conjugate-symmetry relations
exact by construction and gives sharp geometric tail bounds from the
measured ladder norms.  The same kernel evaluates through dense resolvent
solves, which serves as the independent second path.

For cycle-free composition systems the families vanish outside bands
whose width is the covering index of the model subspace; the band check
verifies that and reports any violating block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import OrbitStructure, k_phi
from .errors import (
    FormalModeError,
    NotApplicableError,
    OutsideAnnulusError,
    SingularResolventError,
    UnboundedSupportError,
)
from .model import laurent_coefficients, unitary_pairing
from .operators import TruncatedOperator, WanderingSubspace, adjoint_step, forward_step

EVAL_MARGIN = 0.05


@dataclass(frozen=True)
class KernelBlocks:
    """The four block-coefficient families up to a truncation order.

    Families are stored as (M+1, M+1, d, d) arrays; the regions outside
    each family's valid index range are zero.  ``neg_norms[j]`` and
    ``pos_norms[j]`` are the ladder norms used for tail bounds.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    exact: np.ndarray
    max_order: int
    e_dim: int
    e_token: str
    neg_norms: tuple
    pos_norms: tuple
    band_k: Optional[int]
    printed_c: bool

    def __post_init__(self):
        for arr in (self.A, self.B, self.C, self.D, self.exact):
            arr.setflags(write=False)


def kernel_blocks(op: TruncatedOperator, dual: TruncatedOperator,
                  E: WanderingSubspace, max_order: int,
                  orbits: Optional[OrbitStructure] = None,
                  printed_c_variant: bool = False) -> KernelBlocks:
    """Compute all block families by compressing ladder cross-products.

    With X_j the j-th adjoint-power block and Y_j the j-th dual-power
    block of the subspace basis, the families are X_i* X_j, X_i* Y_j,
    Y_i* X_j and Y_i* Y_j.  ``printed_c_variant`` replaces the third
    family with compressions of dual-adjoint against forward powers, a
    displayed variant that breaks conjugate symmetry; kept for comparison.
    """
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    d = E.dim
    m1 = max_order + 1
    xs, ys, zs = [E.basis.copy()], [E.basis.copy()], [E.basis.copy()]
    x_exact, y_exact = [True], [True]
    for _ in range(max_order):
        nxt, ok = adjoint_step(op, xs[-1])
        xs.append(nxt)
        x_exact.append(x_exact[-1] and ok)
        nxt, ok = forward_step(dual, ys[-1])
        ys.append(nxt)
        y_exact.append(y_exact[-1] and ok)
        if printed_c_variant:
            nxt, _ = forward_step(op, zs[-1])
            zs.append(nxt)
    a = np.zeros((m1, m1, d, d), dtype=complex)
    b = np.zeros((m1, m1, d, d), dtype=complex)
    c = np.zeros((m1, m1, d, d), dtype=complex)
    dd = np.zeros((m1, m1, d, d), dtype=complex)
    exact = np.zeros((m1, m1), dtype=bool)
    for i in range(m1):
        for j in range(m1):
            if i >= 1 and j >= 1:
                a[i, j] = xs[i].conj().T @ xs[j]
            if i >= 1:
                b[i, j] = xs[i].conj().T @ ys[j]
            if j >= 1:
                if printed_c_variant:
                    c[i, j] = ys[i].conj().T @ zs[j]
                else:
                    c[i, j] = ys[i].conj().T @ xs[j]
            dd[i, j] = ys[i].conj().T @ ys[j]
            exact[i, j] = (x_exact[i] and x_exact[j]
                           and y_exact[i] and y_exact[j])
    band_k = None
    if orbits is not None and not any(o.has_cycle for o in orbits.orbits):
        try:
            band_k = k_phi(orbits, E.support)
        except UnboundedSupportError:
            band_k = None
    neg_norms = tuple(float(np.linalg.norm(x, 2)) if d else 0.0 for x in xs)
    pos_norms = tuple(float(np.linalg.norm(y, 2)) if d else 0.0 for y in ys)
    return KernelBlocks(A=a, B=b, C=c, D=dd, exact=exact,
                        max_order=max_order, e_dim=d, e_token=E.token,
                        neg_norms=neg_norms, pos_norms=pos_norms,
                        band_k=band_k, printed_c=printed_c_variant)


def _negative_part_vanishes(blocks: KernelBlocks, tol: float = 1e-13) -> bool:
    return (float(np.max(np.abs(blocks.A))) <= tol
            and float(np.max(np.abs(blocks.B))) <= tol
            and float(np.max(np.abs(blocks.C))) <= tol)


def _guard_point(z: complex, annulus: tuple, margin: float,
                 disc_like: bool) -> None:
    r_minus, r_plus = annulus
    if not (r_plus > r_minus):
        raise FormalModeError("empty annulus: the kernel is formal data only")
    a = abs(z)
    if a > r_plus - margin + 1e-12:
        raise OutsideAnnulusError(
            f"|z| = {a:.6g} violates the outer margin {r_plus - margin:.6g}"
        )
    lower = 0.0 if (disc_like and r_minus == 0.0) else r_minus + margin
    if a < lower - 1e-12:
        raise OutsideAnnulusError(
            f"|z| = {a:.6g} violates the inner margin {lower:.6g}"
        )
    if a == 0.0 and not disc_like:
        raise OutsideAnnulusError("zero evaluation needs a vanishing negative part")


def kernel_eval(blocks: KernelBlocks, z: complex, lam: complex,
                annulus: tuple, margin: float = EVAL_MARGIN) -> np.ndarray:
    """Evaluate the block series at (z, lam).

    The second slot enters conjugated, the standard sesquilinear
    convention; with it the reproducing identity holds numerically.
    """
    disc_like = _negative_part_vanishes(blocks)
    _guard_point(z, annulus, margin, disc_like)
    _guard_point(lam, annulus, margin, disc_like)
    m1 = blocks.max_order + 1
    lb = np.conj(lam)
    out = np.zeros((blocks.e_dim, blocks.e_dim), dtype=complex)
    zpos = np.array([z ** i for i in range(m1)])
    lpos = np.array([lb ** i for i in range(m1)])
    if abs(z) > 0:
        zneg = np.array([z ** (-i) for i in range(m1)])
    else:
        zneg = np.zeros(m1, dtype=complex)
    if abs(lam) > 0:
        lneg = np.array([lb ** (-i) for i in range(m1)])
    else:
        lneg = np.zeros(m1, dtype=complex)
    for i in range(m1):
        for j in range(m1):
            if i >= 1 and j >= 1:
                out += blocks.A[i, j] * (zneg[i] * lneg[j])
            if i >= 1:
                out += blocks.B[i, j] * (zneg[i] * lpos[j])
            if j >= 1:
                out += blocks.C[i, j] * (zpos[i] * lneg[j])
            out += blocks.D[i, j] * (zpos[i] * lpos[j])
    return out


def resolvent_states(op: TruncatedOperator, dual: TruncatedOperator,
                     E: WanderingSubspace, lam: complex,
                     spectral_bound: Optional[float] = None) -> np.ndarray:
    """Dense-solve kernel states: the resolvent combination applied to the basis.

    Returns the window block [(T*/conj(lam)) (I - T*/conj(lam))^{-1}
    + (I - conj(lam) T')^{-1}] E.
    """
    n = op.n
    lb = np.conj(lam)
    eye = np.eye(n)
    if spectral_bound is None:
        spectral_bound = float(np.max(np.abs(np.linalg.eigvals(op.matrix))))
    if abs(lam) <= spectral_bound + 1e-12 and spectral_bound > 0:
        raise SingularResolventError(
            f"|lam| = {abs(lam):.6g} is inside the spectral bound "
            f"{spectral_bound:.6g}"
        )
    second = np.linalg.solve(eye - lb * dual.matrix, E.basis)
    if abs(lam) > 0:
        ts = op.matrix.conj().T / lb
        first = np.linalg.solve(eye - ts, ts @ E.basis)
    else:
        first = np.zeros_like(E.basis)
    return first + second


def kernel_eval_resolvent(op: TruncatedOperator, dual: TruncatedOperator,
                          E: WanderingSubspace, z: complex, lam: complex,
                          spectral_bound: Optional[float] = None) -> np.ndarray:
    """Evaluate the kernel through dense resolvent solves; the second path."""
    n = op.n
    eye = np.eye(n)
    if spectral_bound is None:
        spectral_bound = float(np.max(np.abs(np.linalg.eigvals(op.matrix))))
    y = resolvent_states(op, dual, E, lam, spectral_bound=spectral_bound)
    if abs(z) <= spectral_bound + 1e-12 and spectral_bound > 0:
        raise SingularResolventError(
            f"|z| = {abs(z):.6g} is inside the spectral bound "
            f"{spectral_bound:.6g}"
        )
    if abs(z) > 0:
        tz = op.matrix / z
        first = np.linalg.solve(eye - tz, tz @ y)
    else:
        first = np.zeros_like(y)
    second = np.linalg.solve(eye - z * dual.matrix.conj().T, y)
    return E.basis.conj().T @ (first + second)


def _ratio_bound(norms: Sequence[float]) -> float:
    """Largest recent step ratio of a norm sequence; bounds future growth."""
    tail = norms[max(1, len(norms) // 2):]
    ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1) if tail[i] > 0]
    return max(ratios) if ratios else 0.0


def series_tail_bound(blocks: KernelBlocks, z: complex, lam: complex) -> float:
    """Upper bound on the truncated part of the series at (z, lam).

    Block norms factor through the ladder norms, so each family's tail is
    bounded by products of one-variable sums extended geometrically with
    the measured step ratio.  Infinite when the ratio forbids convergence
    at the point.
    """
    a = blocks.neg_norms
    d = blocks.pos_norms
    qa = _ratio_bound(a)
    qd = _ratio_bound(d)
    m = blocks.max_order

    def sums(point: float, norms, q, negative: bool):
        if negative:
            body = sum(norms[i] * point ** (-i) for i in range(1, m + 1))
            rho = q / point if point > 0 else float("inf")
            last = norms[m] * point ** (-m)
        else:
            body = sum(norms[i] * point ** i for i in range(m + 1))
            rho = q * point
            last = norms[m] * point ** m
        if rho >= 1.0:
            return body, float("inf")
        return body, last * rho / (1.0 - rho)

    az, al = abs(z), abs(lam)
    sa_z, ta_z = sums(az, a, qa, negative=True)
    sa_l, tl_a = sums(al, a, qa, negative=True)
    sd_z, td_z = sums(az, d, qd, negative=False)
    sd_l, td_l = sums(al, d, qd, negative=False)

    def family(s1, t1, s2, t2):
        if not (math.isfinite(t1) and math.isfinite(t2)):
            return float("inf")
        return (s1 + t1) * (s2 + t2) - s1 * s2

    return (family(sa_z, ta_z, sa_l, tl_a)
            + family(sa_z, ta_z, sd_l, td_l)
            + family(sd_z, td_z, sa_l, tl_a)
            + family(sd_z, td_z, sd_l, td_l))


@dataclass(frozen=True)
class BandViolation:
    family: str
    i: int
    j: int
    magnitude: float


def band_check(blocks: KernelBlocks, k: int,
               orbits: Optional[OrbitStructure] = None,
               tol: float = 1e-12) -> tuple:
    """Verify the band structure at width ``k``; returns the violations.

    The two pure families must vanish when the index difference exceeds
    ``k``, the two mixed families when the index sum does.  Only makes
    sense for cycle-free systems: with a cycle present the families are
    periodic in the indices and never band-limited.
    """
    if orbits is not None and any(o.has_cycle for o in orbits.orbits):
        raise NotApplicableError("band structure requires a cycle-free system")
    out = []
    m1 = blocks.max_order + 1
    for name, arr, banded_by_diff, (i0, j0) in (
        ("A", blocks.A, True, (1, 1)),
        ("B", blocks.B, False, (1, 0)),
        ("C", blocks.C, False, (0, 1)),
        ("D", blocks.D, True, (0, 0)),
    ):
        for i in range(i0, m1):
            for j in range(j0, m1):
                outside = (abs(i - j) > k) if banded_by_diff else (i + j > k)
                if not outside:
                    continue
                mag = float(np.max(np.abs(arr[i, j]))) if blocks.e_dim else 0.0
                if mag > tol:
                    out.append(BandViolation(family=name, i=i, j=j,
                                             magnitude=mag))
    return tuple(out)


def block_support_check(blocks: KernelBlocks, orbits: OrbitStructure,
                        spec, E: WanderingSubspace,
                        tol: float = 1e-12) -> tuple:
    """Support-side consistency: blocks vanish when the operator product
    moves the subspace support to levels disjoint from its own.

    Levels shift by +1 per forward or dual step and by -1 per adjoint
    step, so each family's index pair predicts the reachable level range;
    an empty overlap with the support levels forces a zero block.
    """
    levels = [orbits.level[p] for p in sorted(E.support, key=spec.index.__getitem__)]
    if not levels:
        return ()
    lo, hi = min(levels), max(levels)
    violations = []
    m1 = blocks.max_order + 1
    shifts = {"A": lambda i, j: i - j, "B": lambda i, j: i + j,
              "C": lambda i, j: -i - j, "D": lambda i, j: j - i}
    arrays = {"A": blocks.A, "B": blocks.B, "C": blocks.C, "D": blocks.D}
    starts = {"A": (1, 1), "B": (1, 0), "C": (0, 1), "D": (0, 0)}
    for name, shift in shifts.items():
        i0, j0 = starts[name]
        for i in range(i0, m1):
            for j in range(j0, m1):
                s = shift(i, j)
                overlap = not (lo + s > hi or hi + s < lo)
                if overlap:
                    continue
                mag = float(np.max(np.abs(arrays[name][i, j])))
                if mag > tol:
                    violations.append(BandViolation(family=name, i=i, j=j,
                                                    magnitude=mag))
    return tuple(violations)


@dataclass(frozen=True)
class ReproducingResult:
    max_residual: float
    tail_bound: float
    per_basis: tuple


def reproducing_check(op: TruncatedOperator, dual: TruncatedOperator,
                      E: WanderingSubspace, blocks: KernelBlocks,
                      x: np.ndarray, lam: complex, orders: tuple,
                      annulus: tuple, margin: float = EVAL_MARGIN,
                      spectral_bound: Optional[float] = None) -> ReproducingResult:
    """Reproducing identity at one sample point.

    Compares the model series of ``x`` evaluated at ``lam`` against the
    coefficient pairing of the model with the companion family of the
    dense-solve kernel state, for every subspace basis direction.
    """
    disc_like = _negative_part_vanishes(blocks)
    _guard_point(lam, annulus, margin, disc_like)
    f = laurent_coefficients(op, dual, E, x, orders)
    value = f.value_at(lam)
    residuals = []
    states = resolvent_states(op, dual, E, lam, spectral_bound=spectral_bound)
    for j in range(E.dim):
        lhs = complex(value[j])
        y = states[:, j]
        g = laurent_coefficients(dual, op, E, y, orders)
        rhs = unitary_pairing(f, g)
        residuals.append(abs(lhs - rhs))
    # truncation tail of both the evaluation and the pairing
    bound = series_tail_bound(blocks, lam, lam)
    xnorm = float(np.linalg.norm(x))
    return ReproducingResult(
        max_residual=max(residuals) if residuals else 0.0,
        tail_bound=bound * max(xnorm, 1.0),
        per_basis=tuple(residuals),
    )


def gram_psd_check(blocks: KernelBlocks, points: Sequence[complex],
                   annulus: tuple, margin: float = EVAL_MARGIN) -> float:
    """Minimum eigenvalue of the sampled block Gram matrix.

    Assembles the Hermitian block matrix of kernel evaluations over the
    sample points; positivity of the kernel makes it positive
    semidefinite up to truncation dust.
    """
    p = len(points)
    d = blocks.e_dim
    g = np.zeros((p * d, p * d), dtype=complex)
    for i, zi in enumerate(points):
        for j, zj in enumerate(points):
            g[i * d:(i + 1) * d, j * d:(j + 1) * d] = kernel_eval(
                blocks, zi, zj, annulus, margin=margin
            )
    g = 0.5 * (g + g.conj().T)
    eig = np.linalg.eigvalsh(g)
    return float(eig[0]) if len(eig) else 0.0
