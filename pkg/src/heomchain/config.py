"""Run configuration: strict parsing, cross-field validation, provenance.

A run is described by a small YAML document with four sections --
``lattice``, ``bath``, ``method`` and ``run``.  Parsing is strict:
unknown keys are errors (silent typos in physics parameters are the
dominant user mistake), and cross-field constraints are checked up
front so a run never dies halfway with a numerics error that was
knowable from the file alone.

Every output file a run produces starts with a provenance header that
echoes the fully resolved configuration (defaults included) plus a
SHA-256 hash of its canonical serialization.  Headers carry no
timestamps: re-running the same configuration must produce
byte-identical files.
"""

from __future__ import annotations

import dataclasses
import hashlib

import yaml

__all__ = [
    "ConfigError",
    "LatticeConfig",
    "BathConfig",
    "MethodConfig",
    "GridConfig",
    "RunConfig",
    "Config",
    "parse_config",
    "parse_config_text",
    "serialize_config",
    "config_hash",
    "provenance_header",
]

METHOD_NAMES = ("heom", "rwa-heom", "bmme")
BATH_KINDS = ("drude-lorentz", "lorentzian")
SCHEMES = ("pade", "aaa", "lorentzian")
SOLVERS = ("dense", "iterative")

# desk-scale ceilings for the full hierarchy; anything beyond needs the
# explicit full-scale gate (ADO-space size explodes combinatorially)
DESK_N = 10
DESK_M_MAX = 3
DESK_L_MAX = 5


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field(s)."""


@dataclasses.dataclass(frozen=True)
class LatticeConfig:
    n_sites: int = 2
    spacing: float = 1.0
    coupling_mode: str = "collective"


@dataclasses.dataclass(frozen=True)
class BathConfig:
    kind: str = "drude-lorentz"
    coupling: float = 0.5
    width: float = 1.0
    center: float = 0.0
    temperature: float = 1.44
    scheme: str = "pade"
    l_max: int = 5


@dataclasses.dataclass(frozen=True)
class MethodConfig:
    name: str = "heom"
    m_max: int = 2


@dataclasses.dataclass(frozen=True)
class GridConfig:
    """Scan grid: which (method, N, coupling) cells a scan visits."""

    methods: tuple = ()
    n_values: tuple = ()
    couplings: tuple = ()
    observables: tuple = ("tau", "lambda_d", "xi", "profile")
    convergence: bool = True


@dataclasses.dataclass(frozen=True)
class RunConfig:
    t_max: float = 20.0
    n_times: int = 200
    rtol: float = 1e-8
    solver: str = "dense"
    out_dir: str = "."
    deterministic: bool = True
    full_scale: bool = False
    grid: GridConfig | None = None


@dataclasses.dataclass(frozen=True)
class Config:
    lattice: LatticeConfig
    bath: BathConfig
    method: MethodConfig
    run: RunConfig


_SECTION_FIELDS = {
    "lattice": LatticeConfig,
    "bath": BathConfig,
    "method": MethodConfig,
    "run": RunConfig,
}


_SCALAR_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce_scalar(value, type_name, path):
    """Check a YAML scalar against the annotated field type."""
    want = _SCALAR_TYPES.get(type_name)
    if want is None:
        return value
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return value
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string, got {value!r}")
    return value


def _take(mapping, section, cls, *, path):
    """Build a section dataclass from a dict, rejecting unknown keys."""
    raw = mapping.get(section, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}{section} must be a mapping, got {type(raw).__name__}")
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(types))
    if unknown:
        raise ConfigError(
            f"unknown key(s) {', '.join(f'{section}.{k}' for k in unknown)}; "
            f"known keys: {', '.join(sorted(types))}"
        )
    return {k: _coerce_scalar(v, types[k], f"{section}.{k}")
            for k, v in raw.items()}


def _as_tuple(value):
    if value is None:
        return ()
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def parse_config_text(text: str) -> Config:
    """Parse and validate a YAML configuration document."""
    doc = yaml.safe_load(text)
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"top level must be a mapping, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(_SECTION_FIELDS))
    if unknown:
        raise ConfigError(
            f"unknown section(s) {', '.join(unknown)}; "
            f"known sections: {', '.join(sorted(_SECTION_FIELDS))}"
        )

    lat = LatticeConfig(**_take(doc, "lattice", LatticeConfig, path=""))
    bath = BathConfig(**_take(doc, "bath", BathConfig, path=""))
    method = MethodConfig(**_take(doc, "method", MethodConfig, path=""))

    run_raw = dict(_take(doc, "run", RunConfig, path=""))
    grid_raw = run_raw.pop("grid", None)
    grid = None
    if grid_raw is not None:
        if not isinstance(grid_raw, dict):
            raise ConfigError("run.grid must be a mapping")
        known = {f.name for f in dataclasses.fields(GridConfig)}
        unknown = sorted(set(grid_raw) - known)
        if unknown:
            raise ConfigError(
                f"unknown key(s) {', '.join(f'run.grid.{k}' for k in unknown)}; "
                f"known keys: {', '.join(sorted(known))}"
            )
        grid_kwargs = dict(grid_raw)
        for key in ("methods", "n_values", "couplings", "observables"):
            if key in grid_kwargs:
                grid_kwargs[key] = _as_tuple(grid_kwargs[key])
        grid = GridConfig(**grid_kwargs)
    run = RunConfig(grid=grid, **run_raw)

    cfg = Config(lattice=lat, bath=bath, method=method, run=run)
    _validate(cfg)
    return cfg


def parse_config(path) -> Config:
    """Read, parse and validate the YAML configuration at ``path``."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _validate(cfg: Config) -> None:
    lat, bath, method, run = cfg.lattice, cfg.bath, cfg.method, cfg.run
    if lat.n_sites < 2:
        raise ConfigError(f"lattice.n_sites must be >= 2, got {lat.n_sites}")
    if lat.spacing <= 0:
        raise ConfigError(f"lattice.spacing must be > 0, got {lat.spacing}")
    if lat.coupling_mode not in ("collective", "separate"):
        raise ConfigError(
            f"lattice.coupling_mode must be collective or separate, "
            f"got {lat.coupling_mode!r}"
        )
    if bath.kind not in BATH_KINDS:
        raise ConfigError(f"bath.kind must be one of {BATH_KINDS}, got {bath.kind!r}")
    if bath.scheme not in SCHEMES:
        raise ConfigError(f"bath.scheme must be one of {SCHEMES}, got {bath.scheme!r}")
    if bath.coupling <= 0:
        raise ConfigError(f"bath.coupling must be > 0, got {bath.coupling}")
    if bath.width <= 0:
        raise ConfigError(f"bath.width must be > 0, got {bath.width}")
    if bath.temperature < 0:
        raise ConfigError(f"bath.temperature must be >= 0, got {bath.temperature}")
    if bath.l_max < 1:
        raise ConfigError(f"bath.l_max must be >= 1, got {bath.l_max}")
    if method.name not in METHOD_NAMES:
        raise ConfigError(
            f"method.name must be one of {METHOD_NAMES}, got {method.name!r}"
        )
    if method.m_max < 1:
        raise ConfigError(f"method.m_max must be >= 1, got {method.m_max}")
    if run.rtol <= 0:
        raise ConfigError(f"run.rtol must be > 0, got {run.rtol}")
    if run.t_max <= 0:
        raise ConfigError(f"run.t_max must be > 0, got {run.t_max}")
    if run.n_times < 2:
        raise ConfigError(f"run.n_times must be >= 2, got {run.n_times}")
    if run.solver not in SOLVERS:
        raise ConfigError(f"run.solver must be one of {SOLVERS}, got {run.solver!r}")

    # cross-field constraints
    if bath.temperature == 0 and bath.scheme != "lorentzian":
        raise ConfigError(
            "bath.temperature = 0 requires bath.scheme = lorentzian (the "
            "thermal decompositions divide by the Bose factor); got "
            f"bath.scheme = {bath.scheme!r}"
        )
    if bath.kind == "lorentzian" and bath.temperature != 0:
        raise ConfigError(
            "bath.kind = lorentzian supports only bath.temperature = 0 (its "
            "thermal frequency integrals diverge at the gap-free origin); "
            f"got bath.temperature = {bath.temperature}"
        )
    if bath.kind == "drude-lorentz" and bath.scheme == "lorentzian":
        raise ConfigError(
            "bath.scheme = lorentzian is the analytic zero-temperature "
            "Lorentzian decomposition; it needs bath.kind = lorentzian, "
            f"got bath.kind = {bath.kind!r}"
        )
    if method.name == "heom" and bath.scheme == "aaa":
        raise ConfigError(
            "method.name = heom needs a real/imaginary-channel scheme "
            "(bath.scheme = pade or lorentzian); aaa produces the "
            "absorb/emit split used by rwa-heom"
        )
    if method.name == "rwa-heom" and bath.scheme == "pade":
        raise ConfigError(
            "method.name = rwa-heom needs an absorb/emit scheme "
            "(bath.scheme = aaa or lorentzian); pade produces the "
            "real/imaginary split used by the full hierarchy"
        )
    if cfg.run.grid is not None:
        grid = cfg.run.grid
        for m in grid.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(
                    f"run.grid.methods entries must be in {METHOD_NAMES}, got {m!r}"
                )
        for n in grid.n_values:
            if isinstance(n, bool) or not isinstance(n, int) or n < 2:
                raise ConfigError(f"run.grid.n_values entries must be int >= 2, got {n!r}")
        for g in grid.couplings:
            if not isinstance(g, (int, float)) or isinstance(g, bool) or g <= 0:
                raise ConfigError(f"run.grid.couplings entries must be > 0, got {g!r}")

    _check_desk_scale(cfg)


def _check_desk_scale(cfg: Config) -> None:
    """Gate beyond-desk-scale hierarchy runs behind run.full_scale."""
    if cfg.run.full_scale:
        return
    if cfg.method.name == "bmme" and cfg.run.grid is None:
        return
    n_list = [cfg.lattice.n_sites]
    if cfg.run.grid is not None:
        hierarchical = [m for m in cfg.run.grid.methods if m != "bmme"]
        if not hierarchical and cfg.run.grid.methods:
            return
        n_list += list(cfg.run.grid.n_values)
    over = []
    if max(n_list) > DESK_N:
        over.append(f"N = {max(n_list)} > {DESK_N}")
    if cfg.method.m_max > DESK_M_MAX:
        over.append(f"method.m_max = {cfg.method.m_max} > {DESK_M_MAX}")
    if cfg.bath.l_max > DESK_L_MAX:
        over.append(f"bath.l_max = {cfg.bath.l_max} > {DESK_L_MAX}")
    if over:
        raise ConfigError(
            "beyond desk scale (" + "; ".join(over) + "); the hierarchy "
            "grows combinatorially -- set run.full_scale: true (or pass "
            "--full-scale) to run anyway"
        )


def _to_mapping(cfg: Config) -> dict:
    out = {}
    for section in ("lattice", "bath", "method", "run"):
        block = dataclasses.asdict(getattr(cfg, section))
        if section == "run":
            grid = block.pop("grid", None)
            if grid is not None:
                block["grid"] = {
                    k: list(v) if isinstance(v, tuple) else v
                    for k, v in grid.items()
                }
        out[section] = block
    return out


def serialize_config(cfg: Config) -> str:
    """Canonical YAML serialization (defaults resolved, keys sorted)."""
    return yaml.safe_dump(_to_mapping(cfg), sort_keys=True, default_flow_style=False)


def config_hash(cfg: Config) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def provenance_header(cfg: Config, *, comment: str = "#") -> str:
    """Header block echoing the resolved configuration, hash first.

    Deliberately timestamp-free so repeated runs emit byte-identical
    files.
    """
    lines = [f"{comment} config-sha256: {config_hash(cfg)}"]
    for section in ("lattice", "bath", "method", "run"):
        block = dataclasses.asdict(getattr(cfg, section))
        grid = block.pop("grid", None) if section == "run" else None
        for key in sorted(block):
            lines.append(f"{comment} {section}.{key}: {block[key]}")
        if grid is not None:
            for key in sorted(grid):
                val = grid[key]
                if isinstance(val, tuple):
                    val = list(val)
                lines.append(f"{comment} run.grid.{key}: {val}")
    return "\n".join(lines) + "\n"
