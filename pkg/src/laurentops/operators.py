"""Truncated matrix models of weighted composition operators.

The operator sends f to w * (f o phi) on the square-summable functions
over the window.  Its matrix has column support exactly on the preimage
set of each point, its adjoint walks points forward along the map, and
the product of the adjoint with the operator is diagonal, which makes
left-invertibility a pointwise statement and gives the Cauchy dual
T (T*T)^{-1} weight-by-weight.

The module also constructs the model subspace: for each first-generation
point above a cycle the kernel of the restricted adjoint on its rooted
descendant subtree, or for tree-like systems the root (or distinguished
branching vertex) together with the orthogonal complements of the weight
vectors over each branching vertex's children.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import (
    DirectedTree,
    OrbitStructure,
    Point,
    SystemSpec,
    descendants,
    gen_range,
)
from .errors import (
    BoundaryExitError,
    IndexRangeError,
    NotLeftInvertibleError,
    ZeroWeightError,
)

ORTHONORMALITY_TOL = 1e-12


@dataclass(frozen=True)
class TruncatedOperator:
    """A window matrix with per-column exactness bookkeeping.

    ``interior_mask[i]`` is True when column i is window-exact, i.e. the
    preimage set of the i-th point is fully inside the window.
    ``exit_mask[i]`` is True when the i-th point's image was cut off by the
    window, so adjoint-side applications touching it are inexact.
    """

    matrix: np.ndarray
    interior_mask: np.ndarray
    exit_mask: np.ndarray
    label: str
    points: tuple

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.interior_mask.setflags(write=False)
        self.exit_mask.setflags(write=False)

    @cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def basis_vector(self, x: Point) -> np.ndarray:
        v = np.zeros(self.n, dtype=complex)
        v[self.index[x]] = 1.0
        return v

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def apply_adjoint(self, v: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ v


def _active_rows(v: np.ndarray) -> np.ndarray:
    mask = np.abs(v) > 0
    return mask if mask.ndim == 1 else mask.any(axis=1)


def forward_step(op: TruncatedOperator, v: np.ndarray):
    """Apply the operator once, reporting whether the result is exact.

    The step is inexact when the input touches a column with preimages
    beyond the window, since those output components are lost.
    """
    exact = not bool(np.any(_active_rows(v) & ~op.interior_mask))
    return op.matrix @ v, exact


def adjoint_step(op: TruncatedOperator, v: np.ndarray):
    """Apply the adjoint once; inexact when the input sits on a cut exit."""
    exact = not bool(np.any(_active_rows(v) & op.exit_mask))
    return op.matrix.conj().T @ v, exact


def build_composition(spec: SystemSpec) -> TruncatedOperator:
    """Assemble the weighted composition matrix on the window basis."""
    n = spec.n
    m = np.zeros((n, n), dtype=complex)
    for y in spec.points:
        x = spec.phi[y]
        if x is not None:
            m[spec.index[y], spec.index[x]] = spec.weights[y]
    interior = np.array([p not in spec.truncated_columns for p in spec.points])
    exits = np.array([p in spec.truncated_exits for p in spec.points])
    return TruncatedOperator(matrix=m, interior_mask=interior,
                             exit_mask=exits, label="weighted composition",
                             points=spec.points)


def adjoint_power_apply(op: TruncatedOperator, spec: SystemSpec,
                        x: Point, n: int) -> np.ndarray:
    """The n-th adjoint power on a basis vector, from the weight-product formula.

    Returns conj(w(x) w(phi x) ... w(phi^{n-1} x)) at phi^n(x).  A chain
    hitting a true root dies (the adjoint annihilates the root); a chain
    hitting a window-truncated exit is an error, since the true value lives
    outside the window.
    """
    if n < 0:
        raise IndexRangeError("power must be nonnegative")
    if x not in spec.index:
        raise KeyError(f"{x!r} is not a window point")
    out = np.zeros(spec.n, dtype=complex)
    cur = x
    product = 1.0 + 0.0j
    for _ in range(n):
        product *= np.conj(spec.weights[cur])
        nxt = spec.phi[cur]
        if nxt is None:
            if cur in spec.truncated_exits:
                raise BoundaryExitError(
                    f"adjoint chain from {x!r} leaves the window at {cur!r}"
                )
            return out
        cur = nxt
    out[spec.index[cur]] = product
    return out


def gram_diagonal(op: TruncatedOperator, spec: SystemSpec) -> dict:
    """x -> sum of |w(y)|^2 over the in-window preimages y of x."""
    return {
        x: float(sum(abs(spec.weights[y]) ** 2 for y in spec.preimages[x]))
        for x in spec.points
    }


@dataclass(frozen=True)
class LeftInvertibility:
    ok: bool
    witness: Optional[Point]
    min_interior: float
    boundary_failures: tuple


def is_left_invertible(op: TruncatedOperator, spec: SystemSpec,
                       floor: float) -> LeftInvertibility:
    """Pointwise lower bound test on the diagonal of the adjoint product.

    Only window-exact columns count toward the verdict; edge columns that
    fail the floor are reported separately.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    diag = gram_diagonal(op, spec)
    interior = [p for i, p in enumerate(spec.points) if op.interior_mask[i]]
    boundary = [p for i, p in enumerate(spec.points) if not op.interior_mask[i]]
    floor2 = floor * floor
    witness = min(interior, key=lambda p: (diag[p], spec.index[p])) \
        if interior else None
    min_interior = diag[witness] if witness is not None else float("inf")
    return LeftInvertibility(
        ok=bool(min_interior >= floor2),
        witness=witness,
        min_interior=min_interior,
        boundary_failures=tuple(p for p in boundary if diag[p] < floor2),
    )


def cauchy_dual(op: TruncatedOperator, spec: SystemSpec,
                printed_denominator: bool = False) -> TruncatedOperator:
    """The left-inverse-adjoint companion T (T*T)^{-1}, built weight-by-weight.

    The dual is again a weighted composition operator over the same map;
    each weight is divided by the preimage weight-mass of its image point.
    ``printed_denominator`` switches to dividing by the point's own
    preimage mass instead, a variant kept only for comparison; it does not
    reproduce the dense oracle.
    """
    diag = gram_diagonal(op, spec)
    interior_min = min(
        (diag[p] for i, p in enumerate(spec.points) if op.interior_mask[i]),
        default=0.0,
    )
    if interior_min <= 0.0:
        raise NotLeftInvertibleError(
            "the adjoint-product diagonal vanishes on an interior point"
        )
    n = spec.n
    m = np.zeros((n, n), dtype=complex)
    for y in spec.points:
        x = spec.phi[y]
        if x is None:
            continue
        denom = diag[y] if printed_denominator else diag[x]
        if denom == 0.0:
            m[spec.index[y], spec.index[x]] = 0.0
        else:
            m[spec.index[y], spec.index[x]] = spec.weights[y] / denom
    return TruncatedOperator(matrix=m, interior_mask=op.interior_mask.copy(),
                             exit_mask=op.exit_mask.copy(),
                             label="cauchy dual", points=spec.points)


def dense_cauchy_dual(op: TruncatedOperator) -> np.ndarray:
    """Dense oracle T (T*T)^{-1} by direct solve, no structure assumed.

    Columns whose diagonal entry of T*T vanishes (possible only at window
    edges) are left zero.
    """
    m = op.matrix
    g = m.conj().T @ m
    d = np.diag(g).real.copy()
    n = m.shape[0]
    ginv = np.zeros((n, n), dtype=complex)
    keep = d > 0
    gk = g[np.ix_(keep, keep)]
    ginv[np.ix_(keep, keep)] = np.linalg.solve(gk, np.eye(int(keep.sum())))
    return m @ ginv


def null_space_adjoint(op: TruncatedOperator, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the kernel of the adjoint, by SVD."""
    a = op.matrix.conj().T
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if len(s) else 0.0
    null_cols = [i for i in range(a.shape[1])
                 if i >= len(s) or s[i] <= rtol * max(smax, 1.0)]
    return vh.conj().T[:, null_cols]


@dataclass(frozen=True)
class WanderingSubspace:
    """Orthonormal basis of the model subspace, with provenance per vector."""

    basis: np.ndarray
    support: frozenset
    construction_trace: tuple
    points: tuple

    def __post_init__(self):
        self.basis.setflags(write=False)
        if self.dim:
            g = self.basis.conj().T @ self.basis
            if not np.allclose(g, np.eye(self.dim), atol=ORTHONORMALITY_TOL):
                raise ValueError("model subspace basis is not orthonormal")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def token(self) -> str:
        h = hashlib.sha256(self.basis.tobytes())
        return h.hexdigest()[:16]

    def project_coords(self, v: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ v


def _householder_complement(weights_vec: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of one vector.

    A deterministic Householder reflection maps the normalized vector to
    the first coordinate; the remaining columns of the (Hermitian, unitary)
    reflection span the complement.
    """
    a = np.asarray(weights_vec, dtype=complex)
    na = np.linalg.norm(a)
    if na == 0:
        raise ZeroWeightError("weight vector over a branching vertex is zero")
    a = a / na
    m = len(a)
    phase = a[0] / abs(a[0]) if a[0] != 0 else 1.0 + 0.0j
    v = a.copy()
    v[0] += phase
    h = np.eye(m, dtype=complex) - 2.0 * np.outer(v, v.conj()) / np.vdot(v, v).real
    return h[:, 1:]


def _branch_blocks(spec: SystemSpec, vertices: Iterable[Point],
                   vectors: list, traces: list) -> None:
    """Append the child-complement vectors over each branching vertex."""
    n = spec.n
    for u in vertices:
        children = spec.preimages[u]
        if len(children) < 2:
            continue
        lam = np.array([spec.weights[c] for c in children], dtype=complex)
        comp = _householder_complement(lam)
        for j in range(comp.shape[1]):
            vec = np.zeros(n, dtype=complex)
            for row, c in enumerate(children):
                vec[spec.index[c]] = comp[row, j]
            vectors.append(vec)
            traces.append(f"child-block complement {j + 1} at {u!r}")


def wandering_subspace(spec: SystemSpec,
                       orbits: OrbitStructure) -> WanderingSubspace:
    """Construct the model subspace from the system's structure.

    Cycle orbits contribute, for each first-generation point above the
    cycle, the kernel of the restricted adjoint on its rooted descendant
    subtree: the subtree root plus the child complements of every
    branching vertex inside the subtree.  Rooted orbits contribute the
    root and their branch complements; rootless cycle-free orbits with
    branching contribute the distinguished branching vertex and the branch
    complements.  A rootless line without branching contributes nothing.
    """
    vectors: list = []
    traces: list = []
    n = spec.n
    for rec in orbits.orbits:
        rec_points = set(rec.points)
        if rec.has_cycle:
            gen1 = sorted(
                (p for p in gen_range(orbits, 1, 1) if p in rec_points),
                key=spec.index.__getitem__,
            )
            for x in gen1:
                sub = descendants(spec, x).points
                vec = np.zeros(n, dtype=complex)
                vec[spec.index[x]] = 1.0
                vectors.append(vec)
                traces.append(f"subtree root {x!r}")
                inner = sorted(sub, key=spec.index.__getitem__)
                _branch_blocks(spec, inner, vectors, traces)
        else:
            roots = [p for p in rec.points if spec.phi[p] is None
                     and p not in spec.truncated_exits]
            if roots:
                for r in roots:
                    vec = np.zeros(n, dtype=complex)
                    vec[spec.index[r]] = 1.0
                    vectors.append(vec)
                    traces.append(f"tree root {r!r}")
                _branch_blocks(spec, rec.points, vectors, traces)
            elif rec.omega is not None:
                vec = np.zeros(n, dtype=complex)
                vec[spec.index[rec.omega]] = 1.0
                vectors.append(vec)
                traces.append(f"distinguished branching vertex {rec.omega!r}")
                _branch_blocks(spec, rec.points, vectors, traces)
            # rootless, branching-free: nothing to contribute
    basis = (np.stack(vectors, axis=1) if vectors
             else np.zeros((n, 0), dtype=complex))
    support = frozenset(
        p for p in spec.points
        if vectors and np.any(np.abs(basis[spec.index[p], :]) > 0)
    )
    return WanderingSubspace(basis=basis, support=support,
                             construction_trace=tuple(traces),
                             points=spec.points)


def wandering_from_points(spec: SystemSpec,
                          pts: Sequence[Point]) -> WanderingSubspace:
    """A hand-picked model subspace spanned by basis vectors."""
    n = spec.n
    basis = np.zeros((n, len(pts)), dtype=complex)
    for j, p in enumerate(pts):
        basis[spec.index[p], j] = 1.0
    return WanderingSubspace(
        basis=basis,
        support=frozenset(pts),
        construction_trace=tuple(f"selected basis vector {p!r}" for p in pts),
        points=spec.points,
    )


def restricted_subtree(spec: SystemSpec, x: Point) -> DirectedTree:
    """The rooted descendant subtree of a first-generation point."""
    sub = descendants(spec, x).points
    return DirectedTree.from_system(spec, sub, root=x)
