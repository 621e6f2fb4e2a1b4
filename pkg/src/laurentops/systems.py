"""Built-in system families.

These generators produce the window specs the CLI and the test suite work
with: finite weighted cycles, windowed bilateral shifts, a ray attached to
a cycle, rooted rays, rooted trees with one branching vertex, and a
rootless line with a side branch.  Each generated family records its
truncation data so downstream code can tell window-exact answers apart
from truncated ones, and can be regenerated at a larger extent for
consistency checks.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .dynamics import SystemSpec, WindowMeta
from .errors import ConfigError


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex values are [re, im]; got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def make_cycle(n: int, weights: Sequence) -> SystemSpec:
    """Weighted cycle on {1, ..., n}: i maps to i + 1 and n wraps to 1."""
    if n < 1:
        raise ConfigError("cycle length must be positive")
    if len(weights) != n:
        raise ConfigError(f"cycle of length {n} needs {n} weights")
    points = tuple(range(1, n + 1))
    phi = {i: (i + 1 if i < n else 1) for i in points}
    w = {i: _as_complex(weights[i - 1]) for i in points}
    meta = WindowMeta(family="cycle", params={"n": n}, extent=n)
    return SystemSpec(points=points, phi=phi, weights=w, window_meta=meta)


def bilateral_weight(rule: str, n: int, value: complex = 1.0) -> complex:
    if rule == "half_below_zero":
        return 0.5 if n <= 0 else 1.0
    if rule == "constant":
        return value
    raise ConfigError(f"unknown bilateral weight rule {rule!r}")


def make_bilateral(window: int, rule: str = "half_below_zero",
                   value=1.0, weights: Optional[Mapping] = None) -> SystemSpec:
    """Bilateral weighted shift on the window [-window, window].

    The shift sends e_n to w(n+1) e_{n+1}; in the composition picture the
    map is n -> n - 1 with weight w(n) at n.  The lower edge point has its
    image cut off and the preimage of the upper edge point is missing.
    """
    if window < 1:
        raise ConfigError("bilateral window extent must be positive")
    value = _as_complex(value)
    points = tuple(range(-window, window + 1))
    phi = {p: (p - 1 if p - 1 >= -window else None) for p in points}
    if weights is not None:
        w = {p: _as_complex(weights[str(p)] if str(p) in weights else weights[p])
             for p in points}
    else:
        w = {p: bilateral_weight(rule, p, value) for p in points}
    meta = WindowMeta(
        family="bilateral",
        params={"window": window, "rule": rule, "value": value},
        extent=window,
        truncated_exits=frozenset({-window}),
        truncated_columns=frozenset({window}),
    )
    return SystemSpec(points=points, phi=phi, weights=w, window_meta=meta)


def make_ray_cycle(k: int, window: int,
                   cycle_weights: Optional[Sequence] = None,
                   ray_weights: Optional[Sequence] = None) -> SystemSpec:
    """An infinite ray grafted onto a (k+1)-cycle, windowed at ray length.

    Cycle points are 0..k with 0 mapping to k and i mapping to i - 1; ray
    points (1, 0), (1, 1), ... map down the ray and (1, 0) lands on k, so
    k is the unique branching point.  ``window`` is the materialized ray
    length; the far ray end has its preimage cut off.
    """
    if k < 1:
        raise ConfigError("cycle part needs k >= 1")
    if window < 1:
        raise ConfigError("ray window must be positive")
    if cycle_weights is None:
        cycle_weights = [0.5] * (k + 1)
    if ray_weights is None:
        ray_weights = [1.0] * (window + 1)
    if len(cycle_weights) != k + 1:
        raise ConfigError(f"need {k + 1} cycle weights")
    if len(ray_weights) != window + 1:
        raise ConfigError(f"need {window + 1} ray weights")
    cyc = tuple(range(k + 1))
    ray = tuple((1, i) for i in range(window + 1))
    points = cyc + ray
    phi = {}
    for i in cyc:
        phi[i] = k if i == 0 else i - 1
    phi[(1, 0)] = k
    for i in range(1, window + 1):
        phi[(1, i)] = (1, i - 1)
    w = {i: _as_complex(cycle_weights[i]) for i in cyc}
    w.update({(1, i): _as_complex(ray_weights[i]) for i in range(window + 1)})
    meta = WindowMeta(
        family="ray_cycle",
        params={"k": k, "window": window},
        extent=window,
        truncated_columns=frozenset({(1, window)}),
    )
    return SystemSpec(points=points, phi=phi, weights=w, window_meta=meta)


def make_rooted_ray(length: int, weights: Optional[Sequence] = None,
                    infinite: bool = True) -> SystemSpec:
    """Rooted ray 0 -> 1 -> ... -> length, the map walking toward the root.

    With ``infinite`` the ray is a window onto an unbounded ray and the far
    end's preimage is recorded as truncated; otherwise the system is finite
    in truth.
    """
    if length < 1:
        raise ConfigError("ray length must be positive")
    if weights is None:
        weights = [1.0] * (length + 1)
    if len(weights) != length + 1:
        raise ConfigError(f"need {length + 1} weights")
    points = tuple(range(length + 1))
    phi = {i: (i - 1 if i > 0 else None) for i in points}
    w = {i: _as_complex(weights[i]) for i in points}
    meta = WindowMeta(
        family="rooted_ray",
        params={"length": length, "infinite": infinite},
        extent=length,
        truncated_columns=frozenset({length}) if infinite else frozenset(),
    )
    return SystemSpec(points=points, phi=phi, weights=w, window_meta=meta)


def make_branch_tree(stem: int, arms: int,
                     arm_weights: Sequence = (1.0, 0.7),
                     stem_weight=1.0,
                     infinite: bool = True) -> SystemSpec:
    """Rooted tree with a single branching vertex.

    A stem of ``stem`` edges runs from the root to the branching vertex,
    which carries two arms of ``arms`` edges each.  Arm weights are
    constant per arm; distinct moduli keep the kernel's outermost band
    populated.
    """
    if stem < 0 or arms < 1:
        raise ConfigError("stem must be >= 0 and arms >= 1")
    wa, wb = (_as_complex(arm_weights[0]), _as_complex(arm_weights[1]))
    ws = _as_complex(stem_weight)
    stem_pts = tuple(range(stem + 1))
    arm_a = tuple(("a", i) for i in range(arms))
    arm_b = tuple(("b", i) for i in range(arms))
    points = stem_pts + arm_a + arm_b
    phi = {i: (i - 1 if i > 0 else None) for i in stem_pts}
    w = {i: ws for i in stem_pts}
    for label, arm, wt in (("a", arm_a, wa), ("b", arm_b, wb)):
        for j, p in enumerate(arm):
            phi[p] = stem if j == 0 else (label, j - 1)
            w[p] = wt
    trunc = frozenset({("a", arms - 1), ("b", arms - 1)}) if infinite else frozenset()
    meta = WindowMeta(
        family="branch_tree",
        params={"stem": stem, "arms": arms},
        extent=stem + arms,
        truncated_columns=trunc,
    )
    return SystemSpec(points=points, phi=phi, weights=w, window_meta=meta)


def make_branched_ray(window: int, branch_len: int,
                      main_weight=1.0, branch_weight=0.7) -> SystemSpec:
    """Rootless line with one side branch: a cycle-free system with branching.

    The main line is the bilateral path -window..window with n mapping to
    n - 1; a side ray of ``branch_len`` edges attaches at 0, making 0 the
    unique branching vertex with a branching-free forward path.
    """
    if window < 1 or branch_len < 1:
        raise ConfigError("window and branch_len must be positive")
    wm = _as_complex(main_weight)
    wb = _as_complex(branch_weight)
    main = tuple(range(-window, window + 1))
    side = tuple(("s", i) for i in range(branch_len))
    points = main + side
    phi = {p: (p - 1 if p - 1 >= -window else None) for p in main}
    w = {p: wm for p in main}
    for j, p in enumerate(side):
        phi[p] = 0 if j == 0 else ("s", j - 1)
        w[p] = wb
    meta = WindowMeta(
        family="branched_ray",
        params={"window": window, "branch_len": branch_len},
        extent=window,
        truncated_exits=frozenset({-window}),
        truncated_columns=frozenset({window, ("s", branch_len - 1)}),
    )
    return SystemSpec(points=points, phi=phi, weights=w, window_meta=meta)


def make_inline(points: Sequence, phi: Mapping, weights: Mapping) -> SystemSpec:
    """A system given literally; the window is the whole system."""
    pts = tuple(points)
    phi_map = {}
    for p in pts:
        if p not in phi:
            raise ConfigError(f"phi missing at {p!r}")
        phi_map[p] = phi[p]
    w = {p: _as_complex(weights[p]) for p in pts if p in weights}
    for p in pts:
        if p not in w:
            raise ConfigError(f"weight missing at {p!r}")
    return SystemSpec(points=pts, phi=phi_map, weights=w, window_meta=None)


def regenerate(spec: SystemSpec, extent: int) -> SystemSpec:
    """Rebuild a generated family at a different extent.

    Used by the window-consistency checks: the regenerated system must
    agree with the original on the shared points.
    """
    meta = spec.window_meta
    if meta is None:
        raise ConfigError("only generated families can be regenerated")
    fam, p = meta.family, meta.params
    if fam == "cycle":
        raise ConfigError("a finite cycle has no window to enlarge")
    if fam == "bilateral":
        if "rule" in p and any(spec.weights[q] != bilateral_weight(
                p["rule"], q, p.get("value", 1.0)) for q in spec.points):
            raise ConfigError("bilateral system with explicit weights cannot regenerate")
        return make_bilateral(extent, rule=p["rule"], value=p.get("value", 1.0))
    if fam == "ray_cycle":
        k = p["k"]
        old = p["window"]
        cyc = [spec.weights[i] for i in range(k + 1)]
        ray = [spec.weights[(1, i)] for i in range(old + 1)]
        if extent > old:
            ray = ray + [ray[-1]] * (extent - old)
        else:
            ray = ray[:extent + 1]
        return make_ray_cycle(k, extent, cycle_weights=cyc, ray_weights=ray)
    if fam == "rooted_ray":
        old = p["length"]
        ws = [spec.weights[i] for i in range(old + 1)]
        if extent > old:
            ws = ws + [ws[-1]] * (extent - old)
        else:
            ws = ws[:extent + 1]
        return make_rooted_ray(extent, weights=ws, infinite=p["infinite"])
    raise ConfigError(f"family {fam!r} does not support regeneration")
