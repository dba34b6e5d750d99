"""Experiment configuration: one JSON document per experiment.

Parsing materializes every default, so ``parse(render(cfg)) == cfg`` and the
rendered form is what gets hashed into every output file.  Validation
errors carry dotted paths (``connections.w_I``) pointing at the offending
field.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, replace

from .connections import ConnectionSpec, block_connections, torus_connections
from .distributions import (
    DETERMINISTIC,
    EXPONENTIAL,
    DistributionSpec,
    exponential,
)
from .errors import ConfigError
from .topology import Topology, build_block_network, build_torus, default_pairing

TORUS = "torus"
BLOCKS = "blocks"


def _require(data: dict, where: str, allowed: set[str], required: set[str]):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(data)
    if missing:
        raise ConfigError(f"{where}: missing required keys {sorted(missing)}")


def _number(data: dict, where: str, key: str, default=None, integer=False):
    if key not in data:
        if default is None:
            raise ConfigError(f"{where}.{key}: required")
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


@dataclass(frozen=True)
class TorusTopologyConfig:
    nu: int
    N: int
    K_E: int
    offsets: tuple[tuple[int, ...], ...] | None = None

    def build(self) -> Topology:
        return build_torus(self.nu, self.N, self.K_E, self.offsets)


@dataclass(frozen=True)
class BlockTopologyConfig:
    p: int
    k: int
    pairing: tuple[tuple[int, int], ...]

    def build(self) -> Topology:
        return build_block_network(self.p, self.k, self.pairing)


@dataclass(frozen=True)
class TorusConnectionsConfig:
    w_I: float
    w_E: float
    eta1: DistributionSpec
    eta2: DistributionSpec


@dataclass(frozen=True)
class BlockConnectionsConfig:
    a: float
    b: float
    c: float
    magnitude: str


@dataclass(frozen=True)
class RunSection:
    seed: int
    horizon: float
    burn_in_fraction: float


@dataclass(frozen=True)
class OutputSection:
    dir: str
    formats: tuple[str, ...]


KNOWN_FORMATS = ("csv", "json", "pattern")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TorusTopologyConfig | BlockTopologyConfig
    connections: TorusConnectionsConfig | BlockConnectionsConfig
    y: DistributionSpec
    init: DistributionSpec
    run: RunSection
    output: OutputSection

    @property
    def kind(self) -> str:
        return TORUS if isinstance(self.topology, TorusTopologyConfig) else BLOCKS

    def build_topology(self) -> Topology:
        return self.topology.build()

    def build_connections(self, topology: Topology | None = None) -> ConnectionSpec:
        top = topology or self.build_topology()
        if self.kind == TORUS:
            c = self.connections
            return torus_connections(
                top, c.w_I, c.w_E, eta1=c.eta1, eta2=c.eta2, y=self.y
            )
        c = self.connections
        return block_connections(
            top, c.a, c.b, c.c, magnitude_kind=c.magnitude, y_kind=self.y.kind
        )


# -- parsing --------------------------------------------------------------


def _parse_distribution(data, where, default_mean=1.0) -> DistributionSpec:
    if data is None:
        return exponential(default_mean)
    return DistributionSpec.from_dict(data, where)


def _parse_topology(data):
    _require(
        data,
        "topology",
        {"kind", "nu", "N", "K_E", "offsets", "p", "k", "pairing"},
        {"kind"},
    )
    kind = data["kind"]
    if kind == TORUS:
        _require(data, "topology", {"kind", "nu", "N", "K_E", "offsets"}, {"nu", "N", "K_E"})
        offsets = data.get("offsets")
        if offsets is not None:
            try:
                offsets = tuple(tuple(int(v) for v in o) for o in offsets)
            except (TypeError, ValueError):
                raise ConfigError("topology.offsets: expected lists of integers") from None
        return TorusTopologyConfig(
            nu=_number(data, "topology", "nu", integer=True),
            N=_number(data, "topology", "N", integer=True),
            K_E=_number(data, "topology", "K_E", integer=True),
            offsets=offsets,
        )
    if kind == BLOCKS:
        _require(data, "topology", {"kind", "p", "k", "pairing"}, {"p", "k"})
        p = _number(data, "topology", "p", integer=True)
        pairing = data.get("pairing")
        if pairing is None:
            pairing = default_pairing(p)
        else:
            try:
                pairing = tuple(tuple(int(b) for b in couple) for couple in pairing)
            except (TypeError, ValueError):
                raise ConfigError("topology.pairing: expected pairs of integers") from None
        return BlockTopologyConfig(
            p=p, k=_number(data, "topology", "k", integer=True), pairing=pairing
        )
    raise ConfigError(f"topology.kind: expected '{TORUS}' or '{BLOCKS}', got {kind!r}")


def _parse_connections(data, topology):
    if isinstance(topology, TorusTopologyConfig):
        _require(data, "connections", {"w_I", "w_E", "eta1", "eta2"}, {"w_I", "w_E"})
        return TorusConnectionsConfig(
            w_I=_number(data, "connections", "w_I"),
            w_E=_number(data, "connections", "w_E"),
            eta1=_parse_distribution(data.get("eta1"), "connections.eta1"),
            eta2=_parse_distribution(data.get("eta2"), "connections.eta2"),
        )
    _require(data, "connections", {"a", "b", "c", "magnitude"}, {"a", "b", "c"})
    magnitude = data.get("magnitude", EXPONENTIAL)
    if magnitude not in (EXPONENTIAL, DETERMINISTIC):
        raise ConfigError(
            f"connections.magnitude: expected '{EXPONENTIAL}' or '{DETERMINISTIC}', "
            f"got {magnitude!r}"
        )
    return BlockConnectionsConfig(
        a=_number(data, "connections", "a"),
        b=_number(data, "connections", "b"),
        c=_number(data, "connections", "c"),
        magnitude=magnitude,
    )


def parse_config(data: dict) -> ExperimentConfig:
    _require(
        data,
        "config",
        {"topology", "connections", "distributions", "run", "output"},
        {"topology", "connections", "run"},
    )
    topology = _parse_topology(data["topology"])
    connections = _parse_connections(data["connections"], topology)

    dists = data.get("distributions") or {}
    _require(dists, "distributions", {"Y", "init"}, set())
    if isinstance(topology, TorusTopologyConfig):
        y = _parse_distribution(dists.get("Y"), "distributions.Y", 1.0)
        if y.mean != 1.0:
            raise ConfigError(
                f"distributions.Y: torus model requires mean 1, got {y.mean}"
            )
    else:
        y = _parse_distribution(dists.get("Y"), "distributions.Y", connections.a)
        if y.mean != connections.a:
            raise ConfigError(
                f"distributions.Y: block model requires mean a={connections.a}, got {y.mean}"
            )
    init = _parse_distribution(dists.get("init"), "distributions.init", 1.0)

    run_data = data["run"]
    _require(run_data, "run", {"seed", "horizon", "burn_in_fraction"}, {"seed", "horizon"})
    seed = _number(run_data, "run", "seed", integer=True)
    if seed < 0:
        raise ConfigError(f"run.seed: must be >= 0, got {seed}")
    horizon = _number(run_data, "run", "horizon")
    if horizon <= 0:
        raise ConfigError(f"run.horizon: must be > 0, got {horizon}")
    burn = _number(run_data, "run", "burn_in_fraction", default=0.2)
    if not 0.0 <= burn < 0.5:
        raise ConfigError(f"run.burn_in_fraction: must lie in [0, 0.5), got {burn}")
    run_section = RunSection(seed=seed, horizon=horizon, burn_in_fraction=burn)

    out_data = data.get("output") or {}
    _require(out_data, "output", {"dir", "formats"}, set())
    formats = out_data.get("formats")
    if formats is None:
        formats = KNOWN_FORMATS
    else:
        formats = tuple(formats)
        for f in formats:
            if f not in KNOWN_FORMATS:
                raise ConfigError(
                    f"output.formats: unknown format {f!r}; choices: {KNOWN_FORMATS}"
                )
    output = OutputSection(dir=str(out_data.get("dir", "results")), formats=formats)

    config = ExperimentConfig(topology, connections, y, init, run_section, output)
    # surface structural problems (bad offsets, pairing, weights) at load time
    config.build_connections()
    return config


def render_config(config: ExperimentConfig) -> dict:
    if config.kind == TORUS:
        top = {
            "kind": TORUS,
            "nu": config.topology.nu,
            "N": config.topology.N,
            "K_E": config.topology.K_E,
        }
        if config.topology.offsets is not None:
            top["offsets"] = [list(o) for o in config.topology.offsets]
        conn = {
            "w_I": config.connections.w_I,
            "w_E": config.connections.w_E,
            "eta1": config.connections.eta1.to_dict(),
            "eta2": config.connections.eta2.to_dict(),
        }
    else:
        top = {
            "kind": BLOCKS,
            "p": config.topology.p,
            "k": config.topology.k,
            "pairing": [list(couple) for couple in config.topology.pairing],
        }
        conn = {
            "a": config.connections.a,
            "b": config.connections.b,
            "c": config.connections.c,
            "magnitude": config.connections.magnitude,
        }
    return {
        "topology": top,
        "connections": conn,
        "distributions": {"Y": config.y.to_dict(), "init": config.init.to_dict()},
        "run": {
            "seed": config.run.seed,
            "horizon": config.run.horizon,
            "burn_in_fraction": config.run.burn_in_fraction,
        },
        "output": {"dir": config.output.dir, "formats": list(config.output.formats)},
    }


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def semantic_render(config: ExperimentConfig) -> dict:
    """The rendered config minus the output section: what the experiment
    *is*, independent of where its files land."""
    rendered = render_config(config)
    rendered.pop("output", None)
    return rendered


def config_sha256(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(semantic_render(config)).encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(data)


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """A copy with run- or connection-level fields replaced.

    Accepts ``seed``, ``horizon``, ``out_dir`` and any connection parameter
    of the config's kind (``w_I``/``w_E`` or ``a``/``b``/``c``).
    """
    run_fields = {}
    for key in ("seed", "horizon"):
        if key in overrides and overrides[key] is not None:
            run_fields[key] = overrides.pop(key)
    out_dir = overrides.pop("out_dir", None)
    conn = config.connections
    conn_fields = {}
    for key, value in list(overrides.items()):
        if value is None:
            overrides.pop(key)
            continue
        if hasattr(conn, key):
            conn_fields[key] = value
            overrides.pop(key)
    if overrides:
        raise ConfigError(f"unknown overrides {sorted(overrides)} for {config.kind} config")
    new = config
    if run_fields:
        new = replace(new, run=replace(new.run, **run_fields))
    if conn_fields:
        new = replace(new, connections=replace(conn, **conn_fields))
    if out_dir is not None:
        new = replace(new, output=replace(new.output, dir=str(out_dir)))
    if conn_fields:
        new.build_connections()  # revalidate
    return new


# -- sweeps ---------------------------------------------------------------

TORUS_AXES = ("w_I", "w_E")
BLOCK_AXES = ("a", "b", "c")


@dataclass(frozen=True)
class SweepSpec:
    base: ExperimentConfig
    grid: tuple[tuple[str, tuple[float, ...]], ...]
    replications: int
    seed_base: int

    @property
    def axes(self) -> tuple[str, ...]:
        return TORUS_AXES if self.base.kind == TORUS else BLOCK_AXES

    def cells(self) -> list[dict[str, float]]:
        """Cartesian product of the grid axes, in file order; the values of
        unswept axes come from the base config at run time."""
        if not self.grid or any(not values for _axis, values in self.grid):
            return []
        names = [axis for axis, _values in self.grid]
        combos = itertools.product(*(values for _axis, values in self.grid))
        return [dict(zip(names, combo)) for combo in combos]


def parse_sweep(data: dict) -> SweepSpec:
    _require(data, "sweep", {"base", "grid", "replications", "seed_base"}, {"base", "grid"})
    base = parse_config(data["base"])
    axes = TORUS_AXES if base.kind == TORUS else BLOCK_AXES
    grid_data = data["grid"]
    if not isinstance(grid_data, dict):
        raise ConfigError("sweep.grid: expected an object of axis -> values")
    grid = []
    for axis, values in grid_data.items():
        if axis not in axes:
            raise ConfigError(
                f"sweep.grid.{axis}: not a parameter of a {base.kind} config; "
                f"choices: {axes}"
            )
        if not isinstance(values, list):
            raise ConfigError(f"sweep.grid.{axis}: expected a list of numbers")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"sweep.grid.{axis}: expected numbers, got {v!r}")
        grid.append((axis, tuple(float(v) for v in values)))
    replications = _number(data, "sweep", "replications", default=1, integer=True)
    if replications < 1:
        raise ConfigError(f"sweep.replications: must be >= 1, got {replications}")
    seed_base = _number(data, "sweep", "seed_base", default=0, integer=True)
    return SweepSpec(
        base=base, grid=tuple(grid), replications=replications, seed_base=seed_base
    )


def load_sweep(path) -> SweepSpec:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_sweep(data)


def render_sweep(spec: SweepSpec) -> dict:
    return {
        "base": render_config(spec.base),
        "grid": {axis: list(values) for axis, values in spec.grid},
        "replications": spec.replications,
        "seed_base": spec.seed_base,
    }
