"""Job configuration: a versioned JSON document describing one run.

The document selects a system (a built-in family with parameters, or an
inline map), the window extent, the truncation depths, tolerance
overrides, requested artifacts and evaluation sample points.  Unknown
keys are rejected by name, as are zero weights and oversized windows.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .dynamics import MAX_WINDOW_POINTS, SystemSpec
from .errors import ConfigError
from . import systems

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "left_invertibility_floor": 1e-6,
    "orthonormality": 1e-12,
    "cauchy_dual_oracle": 1e-10,
    "li_rank": 1e-8,
    "prep": 1e-10,
    "constants": 1e-12,
    "intertwining": 1e-10,
    "pairing": 1e-9,
    "hermitian_symmetry": 1e-12,
    "band": 1e-12,
    "psd_floor": -1e-9,
    "shimorin_neg": 1e-12,
    "adjoint_power": 1e-12,
}

VALID_OUTPUTS = ("coefficients", "blocks", "radii", "verify-report")

_TOP_KEYS = {"schema", "system", "window_extent", "depths", "tolerances",
             "outputs", "sample_points", "seed"}
_DEPTH_KEYS = {"coeff_order", "kernel_order", "verify_depth"}

BUILTIN_PARAMS = {
    "cycle": {"n", "weights"},
    "bilateral": {"window", "rule", "value", "weights"},
    "ray_cycle": {"k", "window", "cycle_weights", "ray_weights"},
    "rooted_ray": {"length", "weights", "infinite"},
    "branch_tree": {"stem", "arms", "arm_weights", "stem_weight", "infinite"},
    "branched_ray": {"window", "branch_len", "main_weight", "branch_weight"},
}


@dataclass(frozen=True)
class JobConfig:
    system: dict
    window_extent: Optional[int]
    depths: dict
    tolerances: dict
    outputs: tuple
    sample_points: tuple
    seed: int
    raw: dict = field(repr=False)

    def tolerance(self, name: str) -> float:
        return self.tolerances[name]

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True,
                               separators=(",", ":")).encode()
        return hashlib.sha256(canonical).hexdigest()


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


def _as_point(value):
    """JSON carries lists where the system uses tuples as point ids."""
    if isinstance(value, list):
        return tuple(_as_point(v) for v in value)
    return value


def parse_config(text: str) -> JobConfig:
    """Parse and validate a configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "configuration")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(
            f"field 'schema' must be {SCHEMA_VERSION}; got {doc.get('schema')!r}"
        )
    system = doc.get("system")
    if not isinstance(system, dict):
        raise ConfigError("field 'system' must be an object")
    if "builtin" in system:
        _reject_unknown(system, {"builtin", "params"}, "system")
        name = system["builtin"]
        if name not in BUILTIN_PARAMS:
            raise ConfigError(f"unknown builtin {name!r}")
        params = system.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("field 'system.params' must be an object")
        _reject_unknown(params, BUILTIN_PARAMS[name], f"system.params ({name})")
    elif "inline" in system:
        _reject_unknown(system, {"inline"}, "system")
        inline = system["inline"]
        if not isinstance(inline, dict):
            raise ConfigError("field 'system.inline' must be an object")
        _reject_unknown(inline, {"points", "phi", "weights"}, "system.inline")
        for key in ("points", "phi", "weights"):
            if key not in inline:
                raise ConfigError(f"field 'system.inline.{key}' is required")
    else:
        raise ConfigError("field 'system' needs either 'builtin' or 'inline'")

    extent = doc.get("window_extent")
    if extent is not None:
        if not isinstance(extent, int) or extent < 1:
            raise ConfigError("field 'window_extent' must be a positive integer")
        if extent > MAX_WINDOW_POINTS:
            raise ConfigError(
                f"field 'window_extent' exceeds the cap {MAX_WINDOW_POINTS}"
            )
    depths = doc.get("depths", {})
    if not isinstance(depths, dict):
        raise ConfigError("field 'depths' must be an object")
    _reject_unknown(depths, _DEPTH_KEYS, "depths")
    for key, value in depths.items():
        if not isinstance(value, int) or value < 0:
            raise ConfigError(f"field 'depths.{key}' must be a nonnegative integer")
    tolerances = dict(DEFAULT_TOLERANCES)
    overrides = doc.get("tolerances", {})
    if not isinstance(overrides, dict):
        raise ConfigError("field 'tolerances' must be an object")
    for key, value in overrides.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown key {key!r} in tolerances")
        tolerances[key] = float(value)
    outputs = doc.get("outputs", ["verify-report"])
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("field 'outputs' must be a nonempty list")
    for out in outputs:
        if out not in VALID_OUTPUTS:
            raise ConfigError(f"unknown output {out!r}")
    sample_points = []
    for entry in doc.get("sample_points", []):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ConfigError("sample points are [re, im] pairs")
        z = complex(float(entry[0]), float(entry[1]))
        if not (abs(z.real) < float("inf") and abs(z.imag) < float("inf")):
            raise ConfigError("sample points must be finite")
        sample_points.append(z)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("field 'seed' must be a nonnegative integer")
    return JobConfig(
        system=system,
        window_extent=extent,
        depths=dict(depths),
        tolerances=tolerances,
        outputs=tuple(outputs),
        sample_points=tuple(sample_points),
        seed=seed,
        raw=doc,
    )


def load_config(path: str) -> JobConfig:
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())


def build_system(cfg: JobConfig) -> SystemSpec:
    """Materialize the configured system as a window spec."""
    system = cfg.system
    if "inline" in system:
        inline = system["inline"]
        points = [_as_point(p) for p in inline["points"]]
        labels = {str(p): p for p in points}
        phi = {}
        for key, value in inline["phi"].items():
            if key not in labels:
                raise ConfigError(f"phi key {key!r} is not a listed point")
            phi[labels[key]] = None if value is None else _as_point(value)
        weights = {}
        for key, value in inline["weights"].items():
            if key not in labels:
                raise ConfigError(f"weight key {key!r} is not a listed point")
            weights[labels[key]] = value
        return systems.make_inline(points, phi, weights)
    name = system["builtin"]
    params = dict(system.get("params", {}))
    if cfg.window_extent is not None and name in ("bilateral", "ray_cycle",
                                                  "branched_ray"):
        params.setdefault("window", cfg.window_extent)
    if cfg.window_extent is not None and name == "rooted_ray":
        params.setdefault("length", cfg.window_extent)
    builder = {
        "cycle": systems.make_cycle,
        "bilateral": systems.make_bilateral,
        "ray_cycle": systems.make_ray_cycle,
        "rooted_ray": systems.make_rooted_ray,
        "branch_tree": systems.make_branch_tree,
        "branched_ray": systems.make_branched_ray,
    }[name]
    return builder(**params)


def subspace_policy(cfg: JobConfig) -> str:
    """How the pipeline picks the model subspace for this system.

    ``structural``: from the system's orbit structure.  ``cycle_vector``:
    the first cycle point's basis vector (pure cycles generate nothing
    structurally).  ``origin_vector``: the basis vector at 0 (bilateral
    shifts have no structural subspace either).
    """
    if "inline" in cfg.system:
        return "structural"
    name = cfg.system["builtin"]
    if name == "cycle":
        return "cycle_vector"
    if name == "bilateral":
        return "origin_vector"
    return "structural"


def prep_expected(cfg: JobConfig) -> Optional[bool]:
    """Whether orthogonality to forward iterates should hold for this system.

    Pure cycles are known to violate it (the model stays formal); the
    structural subspaces and the bilateral origin vector satisfy it.
    Inline systems carry no expectation.
    """
    if "inline" in cfg.system:
        return None
    name = cfg.system["builtin"]
    if name == "cycle":
        return False
    return True


def default_depths(cfg: JobConfig, spec: SystemSpec) -> dict:
    """Fill depth defaults from the window size.

    Coefficient orders default to half the window, which keeps every
    coefficient window-exact for the built-in families.
    """
    n = spec.n
    extent = spec.window_meta.extent if spec.window_meta else n
    depths = dict(cfg.depths)
    depths.setdefault("coeff_order", max(4, extent // 2))
    depths.setdefault("kernel_order", max(4, min(extent // 2, 24)))
    depths.setdefault("verify_depth", 20)
    depths["radii_depth"] = max(2 * depths["verify_depth"], 8)
    depths["li_depth"] = n
    return depths
