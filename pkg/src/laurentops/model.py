"""Two-sided analytic model in coefficient form.

Every window vector x is represented by a two-sided coefficient family:
negative coefficients are the model-subspace compressions of forward
powers applied to x, nonnegative ones the compressions of dual-adjoint
powers.  Multiplication by the variable is a coefficient right-shift; its
left inverse subtracts the kernel component of the underlying vector and
shifts left.  The convergence annulus is estimated from the n-th roots of
compression norms, side by side with the weight-product formulas specific
to composition operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .dynamics import OrbitStructure, SystemSpec, w_set
from .errors import (
    FormalModeError,
    LaurentOpsError,
    MismatchedSubspaceError,
    OutsideAnnulusError,
)
from .operators import (
    TruncatedOperator,
    WanderingSubspace,
    adjoint_step,
    forward_step,
    gram_diagonal,
    null_space_adjoint,
)


@dataclass(frozen=True)
class LaurentCoefficients:
    """Two-sided coefficient family of one vector, in subspace coordinates.

    ``neg[k]`` is the coefficient of the (k+1)-th negative power and
    ``pos[k]`` of the k-th nonnegative power.  Exactness flags mark the
    coefficients whose computation never touched a window-truncated column
    or exit.  The source vector is kept so shift operations can update the
    kernel projection they need.
    """

    neg: tuple
    pos: tuple
    exact_neg: tuple
    exact_pos: tuple
    orders: tuple
    e_dim: int
    e_token: str
    source: Optional[np.ndarray] = None

    def coefficient(self, k: int) -> np.ndarray:
        """Coefficient of the k-th power, k in [-orders[0], orders[1]]."""
        if k >= 0:
            return self.pos[k]
        return self.neg[-k - 1]

    def is_exact(self, k: int) -> bool:
        if k >= 0:
            return self.exact_pos[k]
        return self.exact_neg[-k - 1]

    def value_at(self, z: complex) -> np.ndarray:
        """Evaluate the truncated series at a point (caller guards the annulus)."""
        out = np.zeros(self.e_dim, dtype=complex)
        for k, c in enumerate(self.pos):
            out += c * z ** k
        for k, c in enumerate(self.neg):
            out += c * z ** (-(k + 1))
        return out


def laurent_coefficients(op: TruncatedOperator, dual: TruncatedOperator,
                         E: WanderingSubspace, x: np.ndarray,
                         orders: tuple,
                         adjoint_negative: bool = False,
                         initial_exact: bool = True) -> LaurentCoefficients:
    """Build the coefficient family of ``x``.

    Negative coefficients compress forward powers of the operator, the
    variant under which multiplication by the variable intertwines exactly
    with the operator.  ``adjoint_negative`` switches the negative side to
    adjoint powers, a displayed variant kept for comparison only.  Pass
    ``initial_exact=False`` when ``x`` itself came out of a
    window-truncated application.
    """
    n_neg, n_pos = orders
    if n_neg < 0 or n_pos < 0:
        raise ValueError("orders must be nonnegative")
    x = np.asarray(x, dtype=complex)
    zero = np.zeros(E.dim, dtype=complex)
    pos, exact_pos = [], []
    v, ok = x.copy(), initial_exact
    for k in range(n_pos + 1):
        pos.append(E.project_coords(v))
        exact_pos.append(ok)
        if k < n_pos:
            if not np.any(v):
                pos.extend([zero] * (n_pos - k))
                exact_pos.extend([ok] * (n_pos - k))
                break
            v, step_ok = adjoint_step(dual, v)
            ok = ok and step_ok
    neg, exact_neg = [], []
    v, ok = x.copy(), initial_exact
    for k in range(n_neg):
        if not np.any(v):
            neg.extend([zero] * (n_neg - k))
            exact_neg.extend([ok] * (n_neg - k))
            break
        if adjoint_negative:
            v, step_ok = adjoint_step(op, v)
        else:
            v, step_ok = forward_step(op, v)
        ok = ok and step_ok
        neg.append(E.project_coords(v))
        exact_neg.append(ok)
    return LaurentCoefficients(
        neg=tuple(neg), pos=tuple(pos),
        exact_neg=tuple(exact_neg), exact_pos=tuple(exact_pos),
        orders=(n_neg, n_pos), e_dim=E.dim, e_token=E.token,
        source=x.copy(),
    )


def dual_model_coefficients(op: TruncatedOperator, dual: TruncatedOperator,
                            E: WanderingSubspace, x: np.ndarray,
                            orders: tuple) -> LaurentCoefficients:
    """Coefficient family of the companion model, with the roles swapped."""
    return laurent_coefficients(dual, op, E, x, orders)


@dataclass(frozen=True)
class CompressionLadders:
    """Row compressions of operator powers: every basis family at once.

    ``neg[n]`` holds the subspace compression of the n-th forward power
    as a (dim, window) block, so its column x is the n-th negative
    coefficient of the basis vector at x; likewise ``pos`` for
    dual-adjoint powers and ``dual_neg``/``dual_pos`` for the companion
    model.  ``clean`` marks the columns whose chains stayed clear of
    window truncation through every stored order.
    """

    neg: tuple
    pos: tuple
    dual_neg: tuple
    dual_pos: tuple
    clean: np.ndarray
    order: int
    e_dim: int
    e_token: str


def _taint_masks(op: TruncatedOperator, spec: SystemSpec, order: int):
    """Columns whose power chains touch window truncation within ``order``."""
    n = op.n
    fwd_taint = np.zeros(n, dtype=bool)
    current = set(spec.truncated_columns)
    for _ in range(order + 2):
        for p in current:
            fwd_taint[spec.index[p]] = True
        current = {spec.phi[p] for p in current if spec.phi[p] is not None}
    adj_taint = np.zeros(n, dtype=bool)
    current = set(spec.truncated_exits)
    for _ in range(order + 2):
        for p in current:
            adj_taint[spec.index[p]] = True
        current = {q for p in current for q in spec.preimages[p]}
    return fwd_taint, adj_taint


def compression_ladders(op: TruncatedOperator, dual: TruncatedOperator,
                        E: WanderingSubspace, spec: SystemSpec,
                        order: int) -> CompressionLadders:
    """Build all four compression ladders up to ``order``."""
    bh = E.basis.conj().T
    neg = [bh.copy()]
    pos = [bh.copy()]
    dual_neg = [bh.copy()]
    dual_pos = [bh.copy()]
    for _ in range(order):
        neg.append(neg[-1] @ op.matrix)
        pos.append(pos[-1] @ dual.matrix.conj().T)
        dual_neg.append(dual_neg[-1] @ dual.matrix)
        dual_pos.append(dual_pos[-1] @ op.matrix.conj().T)
    fwd_taint, adj_taint = _taint_masks(op, spec, order)
    clean = ~(fwd_taint | adj_taint)
    return CompressionLadders(
        neg=tuple(neg), pos=tuple(pos),
        dual_neg=tuple(dual_neg), dual_pos=tuple(dual_pos),
        clean=clean, order=order, e_dim=E.dim, e_token=E.token,
    )


def pairing_gram(op: TruncatedOperator, dual: TruncatedOperator,
                 E: WanderingSubspace, order: int) -> np.ndarray:
    """The window Gram matrix of the coefficient pairing.

    Entry (y, x) is the diagonal coefficient pairing of the model family
    of basis vector x against the companion family of basis vector y, so
    its distance from the identity bounds the pairing error for every
    vector pair at once.  Iterates the four ladders without storing them.
    """
    bh = E.basis.conj().T
    neg = bh.copy()
    pos = bh.copy()
    dneg = bh.copy()
    dpos = bh.copy()
    g = dpos.conj().T @ pos

    def balance(a, b):
        # each pair enters only through a^H b, which is invariant under
        # (a / s, b * s); rescaling keeps deep reciprocal-product ladders
        # inside floating-point range
        amax = float(np.max(np.abs(a))) if a.size else 0.0
        if amax > 1e100:
            return a / amax, b * amax
        return a, b

    for _ in range(order):
        neg = neg @ op.matrix
        dneg = dneg @ dual.matrix
        pos = pos @ dual.matrix.conj().T
        dpos = dpos @ op.matrix.conj().T
        g += dneg.conj().T @ neg
        g += dpos.conj().T @ pos
        if not (np.any(neg) or np.any(pos)):
            break
        dneg, neg = balance(dneg, neg)
        dpos, pos = balance(dpos, pos)
        pos, dpos = balance(pos, dpos)
        neg, dneg = balance(neg, dneg)
    return g


def mz_apply(f: LaurentCoefficients, op: TruncatedOperator) -> LaurentCoefficients:
    """Coefficient right-shift; models multiplication by the variable.

    The deepest negative coefficient of the result is unknown (it would
    need one more order of the input) and is emitted as zero, flagged
    inexact.
    """
    n_neg, n_pos = f.orders
    zero = np.zeros(f.e_dim, dtype=complex)
    pos = [(f.neg[0] if n_neg > 0 else zero)] + list(f.pos[:n_pos])
    exact_pos = [(f.exact_neg[0] if n_neg > 0 else True)] + list(f.exact_pos[:n_pos])
    neg = list(f.neg[1:]) + [zero]
    exact_neg = list(f.exact_neg[1:]) + [False]
    if n_neg == 0:
        neg, exact_neg = [], []
    source = op.matrix @ f.source if f.source is not None else None
    return replace(f, neg=tuple(neg), pos=tuple(pos),
                   exact_neg=tuple(exact_neg), exact_pos=tuple(exact_pos),
                   source=source)


def l_apply(f: LaurentCoefficients, E: WanderingSubspace,
            op: TruncatedOperator, dual: TruncatedOperator,
            kernel_basis: Optional[np.ndarray] = None) -> LaurentCoefficients:
    """Left inverse of the shift: drop the adjoint-kernel component, shift left.

    The kernel component lives in the kernel of the operator's adjoint; its
    coefficient family is subtracted before the index shift.  The topmost
    nonnegative coefficient of the result is unknown and flagged inexact.
    """
    if f.source is None:
        raise ValueError("shift operations need the source vector")
    if kernel_basis is None:
        kernel_basis = null_space_adjoint(op)
    y = kernel_basis @ (kernel_basis.conj().T @ f.source)
    g = laurent_coefficients(op, dual, E, y, f.orders)
    # a kernel direction supported on a window-cut exit is a truncation
    # artifact; projections onto it poison every coefficient
    artifact = False
    if kernel_basis.shape[1]:
        exit_rows = np.asarray(op.exit_mask)
        artifact_cols = np.any(np.abs(kernel_basis[exit_rows, :]) > 0, axis=0)
        if np.any(artifact_cols):
            comp = kernel_basis[:, artifact_cols].conj().T @ f.source
            artifact = bool(np.any(np.abs(comp) > 1e-13))
    n_neg, n_pos = f.orders
    zero = np.zeros(f.e_dim, dtype=complex)

    def diff(k):
        return f.coefficient(k) - g.coefficient(k)

    def diff_ok(k):
        return f.is_exact(k) and g.is_exact(k) and not artifact

    pos = [diff(k + 1) for k in range(n_pos)] + [zero]
    exact_pos = [diff_ok(k + 1) for k in range(n_pos)] + [False]
    neg = [diff(-k) for k in range(n_neg)]
    exact_neg = [diff_ok(-k) for k in range(n_neg)]
    source = dual.matrix.conj().T @ f.source
    return replace(f, neg=tuple(neg), pos=tuple(pos),
                   exact_neg=tuple(exact_neg), exact_pos=tuple(exact_pos),
                   source=source)


def unitary_pairing(f: LaurentCoefficients, g: LaurentCoefficients) -> complex:
    """Diagonal coefficient pairing of a model family with a companion family.

    Reproduces the inner product of the source vectors when the subspace
    generates the window under both operators and is orthogonal to its own
    forward iterates under each.
    """
    if f.e_token != g.e_token:
        raise MismatchedSubspaceError(
            "coefficient families were built over different subspaces"
        )
    total = 0.0 + 0.0j
    for k in range(min(f.orders[0], g.orders[0])):
        total += np.vdot(g.neg[k], f.neg[k])
    for k in range(min(f.orders[1], g.orders[1]) + 1):
        total += np.vdot(g.pos[k], f.pos[k])
    return complex(total)


@dataclass(frozen=True)
class LiResult:
    ok: bool
    residual: float
    complement_dim: int
    ranks: tuple
    inconclusive: bool


def check_li(op: TruncatedOperator, dual: TruncatedOperator,
             E: WanderingSubspace, depth: int,
             tol: float = 1e-8) -> LiResult:
    """Rank-saturation test: adjoint powers and dual powers of the subspace.

    Verdict is whether the joint span of T*^n E and (T')^n E, n up to
    ``depth``, fills the window.  Flagged inconclusive when the rank is
    still growing at the last step.
    """
    n = op.n
    if E.dim == 0:
        return LiResult(ok=False, residual=1.0, complement_dim=n,
                        ranks=(0,) * (depth + 1), inconclusive=False)
    # incremental Gram-Schmidt against a growing orthonormal block
    q = np.zeros((n, n), dtype=complex)
    rank = 0

    def absorb(block):
        nonlocal rank
        for j in range(block.shape[1]):
            if rank == n:
                return
            c = block[:, j].copy()
            nc = np.linalg.norm(c)
            if nc == 0.0:
                continue
            # normalize before the rank decision: the generated span counts
            # directions, not magnitudes
            c /= nc
            for _ in range(2):
                c -= q[:, :rank] @ (q[:, :rank].conj().T @ c)
            nc = np.linalg.norm(c)
            if nc > tol:
                q[:, rank] = c / nc
                rank += 1

    ranks = []
    a_block = E.basis.copy()
    b_block = E.basis.copy()
    absorb(a_block)
    ranks.append(rank)
    for _ in range(depth):
        a_block = op.matrix.conj().T @ a_block
        b_block = dual.matrix @ b_block
        absorb(a_block)
        absorb(b_block)
        ranks.append(rank)
        if rank == n:
            ranks.extend([n] * (depth - len(ranks) + 1))
            break
    ok = rank == n
    inconclusive = (not ok) and depth > 0 and ranks[-1] > ranks[-2]
    if ok:
        proj = np.eye(n) - q @ q.conj().T
        residual = float(np.linalg.norm(proj, 2))
    else:
        residual = 1.0
    return LiResult(ok=ok, residual=residual, complement_dim=n - rank,
                    ranks=tuple(ranks), inconclusive=inconclusive)


@dataclass(frozen=True)
class PrepResult:
    ok: bool
    max_violation: float


def check_prep(op: TruncatedOperator, dual: TruncatedOperator,
               E: WanderingSubspace, depth: int,
               tol: float = 1e-10) -> PrepResult:
    """Orthogonality of the subspace to its forward iterates under both operators."""
    worst = 0.0
    for m in (op.matrix, dual.matrix):
        v = E.basis.copy()
        for _ in range(depth):
            v = m @ v
            worst = max(worst, float(np.max(np.abs(E.basis.conj().T @ v)))
                        if E.dim else 0.0)
    return PrepResult(ok=worst <= tol, max_violation=worst)


@dataclass(frozen=True)
class CompositionRadii:
    """Weight-product radius formulas for composition operators."""

    inner: Optional[float]
    outer: Optional[float]
    inner_sequence: tuple
    outer_sequence: tuple
    inner_applicable: bool
    outer_applicable: bool
    truncated: bool


@dataclass(frozen=True)
class RadiiEstimate:
    neg_norms: tuple
    pos_norms: tuple
    neg_roots: tuple
    pos_roots: tuple
    r_minus: float
    r_plus: float
    annulus_nonempty: bool
    divergent: bool
    composition: Optional[CompositionRadii]

    @property
    def annulus(self) -> tuple:
        return (self.r_minus, self.r_plus)


def _tail_extrapolate(values: Sequence[float], take_max: bool) -> float:
    window = max(1, math.ceil(len(values) / 3))
    tail = values[-window:]
    return max(tail) if take_max else min(tail)


def _tail_spread(values: Sequence[float]) -> float:
    window = max(1, math.ceil(len(values) / 3))
    tail = [v for v in values[-window:] if math.isfinite(v)]
    if not tail or max(tail) == 0:
        return 0.0
    return (max(tail) - min(tail)) / max(abs(max(tail)), 1e-300)


def estimate_radii(op: TruncatedOperator, dual: TruncatedOperator,
                   E: WanderingSubspace, spec: SystemSpec,
                   orbits: OrbitStructure, depth: int) -> RadiiEstimate:
    """Estimate the convergence annulus of the model series.

    The general estimate extrapolates the n-th roots of the compression
    norms of forward powers (inner radius) and dual-adjoint powers (outer
    radius, via reciprocal roots).  For composition systems the
    weight-product formulas are evaluated alongside: the cycle weight
    product, or the forward weight products from the distinguished vertex,
    for the inner radius, and the graded preimage-set sums of dual weights
    for the outer one.  Both are reported; nothing is reconciled silently.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    neg_norms, pos_norms = [], []
    neg_exact = pos_exact = depth
    xb = E.basis.copy()
    yb = E.basis.copy()
    x_ok = y_ok = True
    for k in range(depth):
        if x_ok:
            xb, step_ok = adjoint_step(op, xb)
            if not step_ok:
                x_ok = False
                neg_exact = min(neg_exact, k)
        else:
            xb = op.matrix.conj().T @ xb
        if y_ok:
            yb, step_ok = forward_step(dual, yb)
            if not step_ok:
                y_ok = False
                pos_exact = min(pos_exact, k)
        else:
            yb = dual.matrix @ yb
        neg_norms.append(float(np.linalg.norm(xb, 2)) if E.dim else 0.0)
        pos_norms.append(float(np.linalg.norm(yb, 2)) if E.dim else 0.0)
    neg_roots = [nn ** (1.0 / (k + 1)) if nn > 0 else 0.0
                 for k, nn in enumerate(neg_norms)]
    pos_roots = [nn ** (-1.0 / (k + 1)) if nn > 0 else float("inf")
                 for k, nn in enumerate(pos_norms)]
    # extrapolate over the window-exact prefix only
    r_minus = _tail_extrapolate(neg_roots[:max(neg_exact, 1)], take_max=True)
    r_plus = _tail_extrapolate(pos_roots[:max(pos_exact, 1)], take_max=False)
    divergent = max(_tail_spread(neg_roots[:max(neg_exact, 1)]),
                    _tail_spread(pos_roots[:max(pos_exact, 1)])) > 0.05

    composition = _composition_radii(op, spec, orbits, E, depth)
    return RadiiEstimate(
        neg_norms=tuple(neg_norms), pos_norms=tuple(pos_norms),
        neg_roots=tuple(neg_roots), pos_roots=tuple(pos_roots),
        r_minus=float(r_minus), r_plus=float(r_plus),
        annulus_nonempty=bool(r_plus > r_minus),
        divergent=divergent, composition=composition,
    )


def _composition_radii(op, spec, orbits, E, depth) -> CompositionRadii:
    diag = gram_diagonal(op, spec)
    dual_weight = {}
    for y in spec.points:
        img = spec.phi[y]
        if img is not None:
            dual_weight[y] = spec.weights[y] / diag[img]

    # inner radius: cycle weight product, or root products along the
    # distinguished vertex's forward path
    inner = None
    inner_seq: list = []
    inner_applicable = False
    truncated = False
    cycles = [o.cycle for o in orbits.orbits if o.has_cycle]
    if cycles:
        inner = 1.0
        for c in cycles[0]:
            inner *= abs(spec.weights[c])
        inner = float(inner)
        inner_applicable = True
    else:
        start = None
        for o in orbits.orbits:
            if o.omega is not None:
                start = o.omega
                break
        if start is None and spec.roots:
            # rooted systems sit outside the rootless construction
            inner_applicable = False
        elif start is not None:
            prod = 1.0
            cur = spec.phi[start]
            k = 0
            while cur is not None and k < depth:
                prod *= abs(spec.weights[cur])
                k += 1
                inner_seq.append(prod ** (1.0 / k))
                cur = spec.phi[cur]
            truncated = cur is None and k < depth
            if inner_seq:
                inner = float(_tail_extrapolate(inner_seq, take_max=True))
                inner_applicable = True

    # outer radius: graded preimage-set sums of dual weight products
    outer = None
    outer_seq: list = []
    outer_applicable = False
    support = sorted(E.support, key=spec.index.__getitem__)
    try:
        prods = {x: 1.0 for x in spec.points}
        for n in range(1, depth + 1):
            layer = w_set(orbits, spec, support, n)
            if not layer:
                # the window ran out of preimages; deeper layers are artifacts
                truncated = True
                break
            nxt = {}
            for x in spec.points:
                img = spec.phi[x]
                if img is not None and img in prods and x in dual_weight:
                    nxt[x] = abs(dual_weight[x]) ** 2 * prods[img]
            prods = nxt
            s = sum(prods.get(x, 0.0) for x in layer)
            outer_seq.append(s ** (-1.0 / (2 * n)) if s > 0 else float("inf"))
            if any(x in spec.truncated_columns for x in layer):
                truncated = True
                break
        finite = [v for v in outer_seq if math.isfinite(v)]
        if finite:
            outer = float(_tail_extrapolate(outer_seq, take_max=False))
            outer_applicable = True
    except LaurentOpsError:
        outer_applicable = False
    return CompositionRadii(
        inner=inner, outer=outer,
        inner_sequence=tuple(inner_seq), outer_sequence=tuple(outer_seq),
        inner_applicable=inner_applicable, outer_applicable=outer_applicable,
        truncated=truncated,
    )


@dataclass(frozen=True)
class ShimorinResult:
    analytic: Optional[bool]
    coincides: Optional[bool]
    max_neg_coefficient: float
    power_norms: tuple
    reason: str


def shimorin_coincidence(op: TruncatedOperator, depth: int,
                         orders: Optional[int] = None,
                         tol: float = 1e-12) -> ShimorinResult:
    """Analyticity test plus vanishing of the negative model side.

    Analyticity (trivial intersection of the forward ranges) is decided
    on the window by repeated squaring: a composition-operator power has
    one weight-product path per entry, so a power vanishes exactly when
    the range chain dies, and any window power beyond the point count
    decides nilpotency.  Windows that cut off a forward exit are refuted
    directly, since their matrices are nilpotent for a spurious reason.
    When analytic, the negative coefficients of every basis model over
    the adjoint kernel must vanish.
    """
    if depth <= 0:
        return ShimorinResult(analytic=None, coincides=None,
                              max_neg_coefficient=float("nan"),
                              power_norms=(), reason="zero depth")
    if bool(np.any(op.exit_mask)):
        return ShimorinResult(
            analytic=False, coincides=None,
            max_neg_coefficient=float("nan"), power_norms=(),
            reason="window truncates a forward exit; the map continues below",
        )
    norms = []
    p = op.matrix.copy()
    power = 1
    analytic: Optional[bool] = None
    while True:
        scale = float(np.max(np.abs(p)))
        norms.append(scale)
        if scale == 0.0:
            analytic = True
            break
        if power >= max(op.n, depth):
            analytic = False
            break
        p = (p / scale) @ (p / scale)
        power *= 2
    if not analytic:
        return ShimorinResult(analytic=False, coincides=None,
                              max_neg_coefficient=float("nan"),
                              power_norms=tuple(norms),
                              reason=f"power {power} still has full chains")
    kernel = null_space_adjoint(op)
    orders = orders if orders is not None else depth
    worst = 0.0
    r = kernel.conj().T
    for _ in range(orders):
        r = r @ op.matrix
        if r.size:
            worst = max(worst, float(np.max(np.abs(r))))
        if not np.any(r):
            break
    return ShimorinResult(analytic=True, coincides=worst <= tol,
                          max_neg_coefficient=worst,
                          power_norms=tuple(norms),
                          reason=f"forward power {power} vanished")


@dataclass(frozen=True)
class EigenResult:
    max_residual: float
    per_basis: tuple
    warned_outside: bool
    formal_only: bool
    growth_ratios: tuple
    solution_edge_mass: float


def _shift_eigenvector_divergent(lam: complex, half_width: int) -> tuple:
    """Solve (shift - lam) a = 0 over a truncated two-sided index range.

    The coefficient shift sends a_n to a_{n-1}, so the homogeneous system
    over indices [-M, M] has a one-dimensional solution space.  Returns
    whether that formal solution is divergent (its mass does not decay
    toward both edges, so no square-summable two-sided extension exists)
    together with the measured edge-mass fraction.
    """
    if lam == 0:
        # shifted sequence must vanish identically
        return True, 1.0
    m = half_width
    rows = 2 * m
    cols = 2 * m + 1
    a = np.zeros((rows, cols), dtype=complex)
    for r, n in enumerate(range(-m + 1, m + 1)):
        a[r, n - 1 + m] = 1.0
        a[r, n + m] = -lam
    _, s, vh = np.linalg.svd(a)
    sol = vh.conj().T[:, -1]
    sol = sol / np.linalg.norm(sol)
    edge = max(1, m // 4)
    edge_mass = float(np.sum(np.abs(sol[:edge]) ** 2)
                      + np.sum(np.abs(sol[-edge:]) ** 2))
    inner = slice(m - edge // 2, m + edge // 2 + 1)
    inner_mass = float(np.sum(np.abs(sol[inner]) ** 2))
    # square-summable over the whole line would need the edges to decay
    divergent = edge_mass >= inner_mass * 0.5
    return divergent, edge_mass


def eigenrelation_check(op: TruncatedOperator, dual: TruncatedOperator,
                        E: WanderingSubspace, lam: complex,
                        annulus: tuple, order: int,
                        margin: float = 0.05) -> EigenResult:
    """Eigenvector relation of the adjoint shift against the kernel states.

    For each subspace basis vector g, builds the kernel state at ``lam`` by
    truncated resolvent series and measures how far the adjoint moves it
    from the conjugate-eigenvalue line.  Also reports that the only formal
    eigenvector candidates of the shift itself are the geometric sequences,
    which fail square-summability on at least one side at every point, so
    the point spectrum stays empty.
    """
    r_minus, r_plus = annulus
    if not (r_plus > r_minus):
        raise FormalModeError("empty annulus: kernel states are formal only")
    warned = False
    a = abs(lam)
    disc = r_minus == 0.0
    if a > r_plus - margin or (not disc and a < r_minus + margin):
        warned = True
    if a == 0.0 and not disc:
        raise OutsideAnnulusError("zero is outside the annulus")
    residuals = []
    lb = np.conj(lam)
    for j in range(E.dim):
        g = E.basis[:, j]
        y = np.zeros_like(g)
        v = g.copy()
        for k in range(order + 1):
            y = y + (lb ** k) * v
            v = dual.matrix @ v
        if a > 0:
            v = g.copy()
            for k in range(1, order + 1):
                v = op.matrix.conj().T @ v
                y = y + (lb ** (-k)) * v
        res = op.matrix.conj().T @ y - lb * y
        residuals.append(float(np.linalg.norm(res)))
    if a == 0:
        ratios = (0.0, 0.0)
    else:
        ratios = (1.0 / a, a)
    divergent, edge_mass = _shift_eigenvector_divergent(lam, max(order, 8))
    return EigenResult(
        max_residual=max(residuals) if residuals else 0.0,
        per_basis=tuple(residuals),
        warned_outside=warned,
        formal_only=divergent,
        growth_ratios=ratios,
        solution_edge_mass=edge_mass,
    )
