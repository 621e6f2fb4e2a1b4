"""Countable-set dynamical systems on finite windows.

A system is a window onto (X, phi, w): an ordered tuple of points, a
self-map ``phi`` and a nowhere-zero complex weight ``w``.  Infinite systems
(bilateral shifts, infinite rays) are materialized on a finite window; the
attached :class:`WindowMeta` records which points have images or preimages
that were cut off, so every derived quantity can report whether it is
window-exact.

The module computes the combinatorial skeleton everything else builds on:
orbits, cycles, the integer level function, generation ranges, descendant
sets, branching data, the distinguished branching vertex with a
branching-free forward path, the covering index of a support set and the
graded preimage sets used in convergence-radius estimates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Optional

from .errors import (
    BoundaryExitError,
    IndexRangeError,
    UnboundedSupportError,
    WindowTooSmallError,
    ZeroWeightError,
)

Point = Hashable

MAX_WINDOW_POINTS = 4096


@dataclass(frozen=True)
class WindowMeta:
    """Provenance of a generated window onto an infinite system.

    ``truncated_exits`` holds points whose true image lies outside the
    window (the in-window map reports no image for them); ``truncated_columns``
    holds points with at least one preimage outside the window.  Both are
    empty for systems that are finite in truth.
    """

    family: str
    params: dict
    extent: int
    truncated_exits: frozenset = frozenset()
    truncated_columns: frozenset = frozenset()


@dataclass(frozen=True)
class SystemSpec:
    """A weighted self-map on an ordered finite window of points.

    ``phi`` maps every point either to another window point or to ``None``.
    ``None`` means "no image": either a genuine root of a tree-like system
    or, when the point is listed in ``window_meta.truncated_exits``, an
    image that exists but fell outside the window.
    """

    points: tuple
    phi: Mapping[Point, Optional[Point]]
    weights: Mapping[Point, complex]
    window_meta: Optional[WindowMeta] = None

    def __post_init__(self):
        if len(self.points) == 0:
            raise WindowTooSmallError("a system needs at least one point")
        if len(self.points) > MAX_WINDOW_POINTS:
            raise WindowTooSmallError(
                f"window has {len(self.points)} points; the cap is {MAX_WINDOW_POINTS}"
            )
        if len(set(self.points)) != len(self.points):
            raise ValueError("window points must be distinct")
        pset = set(self.points)
        for p in self.points:
            if p not in self.phi:
                raise ValueError(f"phi is undefined at {p!r}")
            img = self.phi[p]
            if img is not None and img not in pset:
                raise ValueError(f"phi({p!r}) = {img!r} is not a window point")
            if p not in self.weights:
                raise ValueError(f"weight undefined at {p!r}")
            if self.weights[p] == 0:
                raise ZeroWeightError(f"weight vanishes at {p!r}")

    @cached_property
    def n(self) -> int:
        return len(self.points)

    @cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def preimages(self) -> dict:
        pre = {p: [] for p in self.points}
        for p in self.points:
            img = self.phi[p]
            if img is not None:
                pre[img].append(p)
        order = self.index
        return {p: tuple(sorted(v, key=order.__getitem__)) for p, v in pre.items()}

    @cached_property
    def truncated_exits(self) -> frozenset:
        return self.window_meta.truncated_exits if self.window_meta else frozenset()

    @cached_property
    def truncated_columns(self) -> frozenset:
        return self.window_meta.truncated_columns if self.window_meta else frozenset()

    @cached_property
    def roots(self) -> tuple:
        """Points with genuinely no image (window-truncated exits excluded)."""
        return tuple(
            p for p in self.points
            if self.phi[p] is None and p not in self.truncated_exits
        )

    def point_label(self, p: Point) -> str:
        return str(p)


@dataclass(frozen=True)
class DescendantSet:
    points: frozenset
    window_truncated: bool


@dataclass(frozen=True)
class OrbitRecord:
    """One orbit of the window: its points, cycle and level anchoring."""

    points: tuple
    cycle: tuple
    anchor: Optional[Point]
    omega: Optional[Point]
    omega_ambiguous: bool
    window_truncated: bool

    @property
    def has_cycle(self) -> bool:
        return len(self.cycle) > 0


@dataclass(frozen=True)
class OrbitStructure:
    """Orbit partition, cycles, level function and branching data."""

    spec: SystemSpec
    orbits: tuple
    level: Mapping[Point, int]
    branching_points: frozenset
    branching_index: int
    branching_index_truncated: bool

    @property
    def orbit_partition(self):
        return tuple(frozenset(o.points) for o in self.orbits)

    @property
    def cycles(self):
        return tuple(o.cycle for o in self.orbits)

    @property
    def omega(self) -> Optional[Point]:
        """The distinguished branching vertex, when there is a single orbit."""
        if len(self.orbits) == 1:
            return self.orbits[0].omega
        return None

    @cached_property
    def _orbit_lookup(self) -> dict:
        lookup = {}
        for o in self.orbits:
            for p in o.points:
                lookup[p] = o
        return lookup

    def orbit_of(self, x: Point) -> OrbitRecord:
        try:
            return self._orbit_lookup[x]
        except KeyError:
            raise KeyError(f"{x!r} is not a window point") from None


def iterate(spec: SystemSpec, x: Point, n: int) -> Point:
    """Return the n-th image of ``x`` under the system map.

    Raises :class:`BoundaryExitError` if any intermediate image is missing,
    whether because the window truncated it or because the point is a root.
    """
    if n < 0:
        raise IndexRangeError("iteration count must be nonnegative")
    if x not in spec.index:
        raise KeyError(f"{x!r} is not a window point")
    cur = x
    for _ in range(n):
        nxt = spec.phi[cur]
        if nxt is None:
            raise BoundaryExitError(f"orbit of {x!r} leaves the window at {cur!r}")
        cur = nxt
    return cur


def _components(spec: SystemSpec):
    """Weakly connected components of the functional graph, window-ordered."""
    adj = {p: set() for p in spec.points}
    for p in spec.points:
        img = spec.phi[p]
        if img is not None:
            adj[p].add(img)
            adj[img].add(p)
    seen = set()
    comps = []
    for p in spec.points:
        if p in seen:
            continue
        comp = []
        queue = deque([p])
        seen.add(p)
        while queue:
            q = queue.popleft()
            comp.append(q)
            for r in sorted(adj[q], key=spec.index.__getitem__):
                if r not in seen:
                    seen.add(r)
                    queue.append(r)
        comps.append(sorted(comp, key=spec.index.__getitem__))
    return comps


def _find_cycle(spec: SystemSpec, start: Point):
    """Walk forward from ``start`` until revisiting a point or exiting.

    Returns the cycle as a tuple in map order (empty when the walk exits).
    The walk is bounded by the window size; exceeding the bound means the
    window is inconsistent.
    """
    seen = {}
    cur = start
    steps = 0
    while cur is not None and cur not in seen:
        seen[cur] = steps
        cur = spec.phi[cur]
        steps += 1
        if steps > spec.n + 1:
            raise WindowTooSmallError("cycle detection exceeded the window bound")
    if cur is None:
        return ()
    # cur is the first revisited point; collect the loop from there
    cycle = [cur]
    nxt = spec.phi[cur]
    while nxt != cycle[0]:
        cycle.append(nxt)
        nxt = spec.phi[nxt]
    start_at = min(range(len(cycle)), key=lambda i: spec.index[cycle[i]])
    return tuple(cycle[start_at:] + cycle[:start_at])


def _omega_of(spec: SystemSpec, branching, comp_set):
    """The branching vertex whose whole forward path is branching-free."""
    candidates = []
    truncated = False
    for b in branching:
        cur = spec.phi[b]
        ok = True
        steps = 0
        while cur is not None:
            if cur in branching:
                ok = False
                break
            cur = spec.phi[cur]
            steps += 1
            if steps > len(comp_set) + 1:
                raise WindowTooSmallError("forward walk exceeded the window bound")
        if ok:
            candidates.append(b)
    if not candidates:
        return None, False
    if len(candidates) > 1:
        # only possible when forward paths exit before merging
        truncated = True
    ordered = sorted(candidates, key=spec.index.__getitem__)
    return ordered[0], truncated or len(candidates) > 1


def analyze_orbits(spec: SystemSpec) -> OrbitStructure:
    """Partition the window into orbits and compute all level data.

    Levels are anchored so that they decrease by one along the map: each
    cycle sits at level 0 and level grows with distance upstream of it.  On
    cycle-free orbits the anchor is, in order of preference, the true root,
    the distinguished branching vertex (the one whose forward path contains
    no further branching), or the point at which the window cuts the
    forward orbit.
    """
    level = {}
    records = []
    any_truncated = bool(spec.truncated_exits or spec.truncated_columns)
    for comp in _components(spec):
        comp_set = set(comp)
        cycle = _find_cycle(spec, comp[0])
        branching = {p for p in comp if len(spec.preimages[p]) >= 2}
        omega, omega_ambiguous = (None, False)
        if not cycle and branching:
            omega, omega_ambiguous = _omega_of(spec, branching, comp_set)

        comp_trunc = any(p in spec.truncated_exits or p in spec.truncated_columns
                         for p in comp)
        if cycle:
            anchor = None
            for c in cycle:
                level[c] = 0
            queue = deque(cycle)
            in_cycle = set(cycle)
            while queue:
                q = queue.popleft()
                for r in spec.preimages[q]:
                    if r not in in_cycle and r not in level:
                        level[r] = level[q] + 1
                        queue.append(r)
        else:
            roots = [p for p in comp if spec.phi[p] is None
                     and p not in spec.truncated_exits]
            exits = [p for p in comp if spec.phi[p] is None]
            if roots:
                anchor = roots[0]
            elif omega is not None:
                anchor = omega
            elif exits:
                anchor = exits[0]
            else:
                raise WindowTooSmallError(
                    "cycle-free orbit with no exit point; window inconsistent"
                )
            # undirected BFS: level(phi(x)) = level(x) - 1 everywhere off-cycle
            level[anchor] = 0
            queue = deque([anchor])
            while queue:
                q = queue.popleft()
                img = spec.phi[q]
                if img is not None and img not in level:
                    level[img] = level[q] - 1
                    queue.append(img)
                for r in spec.preimages[q]:
                    if r not in level:
                        level[r] = level[q] + 1
                        queue.append(r)
        records.append(OrbitRecord(
            points=tuple(comp),
            cycle=cycle,
            anchor=anchor,
            omega=omega,
            omega_ambiguous=omega_ambiguous,
            window_truncated=comp_trunc,
        ))

    branching_points = frozenset(
        p for p in spec.points if len(spec.preimages[p]) >= 2
    )
    branching_index = max((level[p] for p in branching_points), default=0)
    return OrbitStructure(
        spec=spec,
        orbits=tuple(records),
        level=level,
        branching_points=branching_points,
        branching_index=branching_index,
        branching_index_truncated=any_truncated,
    )


def gen_range(orbits: OrbitStructure, m: int, n: int) -> frozenset:
    """All window points whose level lies in [m, n]."""
    if m > n:
        raise IndexRangeError(f"empty generation range: {m} > {n}")
    return frozenset(p for p, lv in orbits.level.items() if m <= lv <= n)


def descendants(spec: SystemSpec, x: Point) -> DescendantSet:
    """Everything that reaches ``x`` under some iterate, ``x`` included.

    The result is flagged window-truncated when some member may have
    further preimages beyond the window edge.
    """
    if x not in spec.index:
        raise KeyError(f"{x!r} is not a window point")
    seen = {x}
    queue = deque([x])
    truncated = False
    while queue:
        q = queue.popleft()
        if q in spec.truncated_columns:
            truncated = True
        for r in spec.preimages[q]:
            if r not in seen:
                seen.add(r)
                queue.append(r)
    return DescendantSet(points=frozenset(seen), window_truncated=truncated)


def k_phi(orbits: OrbitStructure, support: Iterable[Point]) -> int:
    """Smallest generation bound covering ``support``.

    With a cycle present the admissible generations start at 1; without one
    they start at the anchor level 0.  Support below the admissible floor
    has no finite cover and raises :class:`UnboundedSupportError`.  An
    empty support returns 1, the smallest index the graded constructions
    use.
    """
    support = list(support)
    if not support:
        return 1
    levels = []
    for p in support:
        rec = orbits.orbit_of(p)
        lv = orbits.level[p]
        floor = 1 if rec.has_cycle else 0
        if lv < floor:
            raise UnboundedSupportError(
                f"support point {p!r} sits at level {lv}, below the floor {floor}"
            )
        levels.append(lv)
    floor_all = max(
        1 if orbits.orbit_of(p).has_cycle else 0 for p in support
    )
    return max(max(levels), floor_all)


def w_set(orbits: OrbitStructure, spec: SystemSpec,
          support: Iterable[Point], n: int) -> frozenset:
    """The n-th graded preimage set of the base layer covering ``support``.

    The base layer collects the generations from the floor up to the
    covering index, intersected (in the cycle-free case) with the
    descendants of the distinguished vertex.  Positive indices pull the
    base layer back through the map; negative indices (cycle-free systems
    only) push it forward.
    """
    support = list(support)
    cycle_mode = any(orbits.orbit_of(p).has_cycle for p in support) if support \
        else any(o.has_cycle for o in orbits.orbits)
    if cycle_mode and n < 0:
        raise IndexRangeError("negative layer index is invalid when a cycle exists")
    k = k_phi(orbits, support)
    if cycle_mode:
        base = gen_range(orbits, 1, k)
    else:
        base = gen_range(orbits, 0, k)
        ref = None
        for o in orbits.orbits:
            if o.omega is not None:
                ref = o.omega
                break
            if o.anchor is not None and ref is None:
                ref = o.anchor
        if ref is not None:
            base = base & descendants(spec, ref).points
    current = set(base)
    if n >= 0:
        for _ in range(n):
            nxt = set()
            for p in current:
                nxt.update(spec.preimages[p])
            current = nxt
    else:
        for _ in range(-n):
            nxt = set()
            for p in current:
                img = spec.phi[p]
                if img is not None:
                    nxt.add(img)
            current = nxt
    return frozenset(current)


@dataclass(frozen=True)
class DirectedTree:
    """A finite directed tree given by its parent map."""

    vertices: tuple
    parent: Mapping[Point, Point]
    root: Optional[Point]

    @cached_property
    def children(self) -> dict:
        ch = {v: [] for v in self.vertices}
        for v in self.vertices:
            if v in self.parent:
                ch[self.parent[v]].append(v)
        return {v: tuple(vs) for v, vs in ch.items()}

    @cached_property
    def branching_vertices(self) -> frozenset:
        return frozenset(v for v, c in self.children.items() if len(c) >= 2)

    def validate(self) -> None:
        vset = set(self.vertices)
        for v in self.vertices:
            if v == self.root:
                if v in self.parent:
                    raise ValueError("the root must have no parent")
            elif v not in self.parent:
                raise ValueError(f"non-root vertex {v!r} has no parent")
            elif self.parent[v] not in vset:
                raise ValueError(f"parent of {v!r} is not a vertex")
        # acyclicity and connectivity by Kahn-style elimination from the leaves
        degree = {v: len(self.children[v]) for v in self.vertices}
        queue = deque(v for v in self.vertices if degree[v] == 0)
        visited = 0
        while queue:
            v = queue.popleft()
            visited += 1
            p = self.parent.get(v)
            if p is not None:
                degree[p] -= 1
                if degree[p] == 0:
                    queue.append(p)
        if visited != len(self.vertices):
            raise ValueError("parent map contains a cycle")
        if self.root is not None:
            reach = {self.root}
            queue = deque([self.root])
            while queue:
                v = queue.popleft()
                for c in self.children[v]:
                    if c not in reach:
                        reach.add(c)
                        queue.append(c)
            if reach != vset:
                raise ValueError("tree is not connected to its root")

    @classmethod
    def from_parent_map(cls, parent: Mapping[Point, Point],
                        vertices: Iterable[Point]) -> "DirectedTree":
        vertices = tuple(vertices)
        roots = [v for v in vertices if v not in parent]
        if len(roots) > 1:
            raise ValueError("parent map has more than one root")
        tree = cls(vertices=vertices, parent=dict(parent),
                   root=roots[0] if roots else None)
        tree.validate()
        return tree

    @classmethod
    def from_system(cls, spec: SystemSpec, subset: Iterable[Point],
                    root: Point) -> "DirectedTree":
        """View ``subset`` (a backward-closed set) as the tree rooted at ``root``."""
        subset = set(subset)
        parent = {p: spec.phi[p] for p in subset
                  if p != root and spec.phi[p] in subset}
        order = spec.index
        tree = cls(vertices=tuple(sorted(subset, key=order.__getitem__)),
                   parent=parent, root=root)
        tree.validate()
        return tree
