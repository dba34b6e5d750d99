"""Experiment orchestration and deterministic output writers.

Every writer is a pure function of the (already validated) config and the
recorded statistics: files embed the config hash and seed, never a
timestamp, so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    LABEL_HEURISTIC,
    SUBSET_BUDGET,
    BalanceReport,
    Classification,
    FrequencyEstimate,
    Verdict,
    activity_verdict,
    balance_report,
    classify_inductive,
    estimate_frequencies,
    _confidence_half_width,
)
from .config import (
    BLOCKS,
    KNOWN_FORMATS,
    TORUS,
    BlockConnectionsConfig,
    BlockTopologyConfig,
    ExperimentConfig,
    OutputSection,
    RunSection,
    SweepSpec,
    canonical_json,
    config_sha256,
    render_config,
    render_sweep,
    semantic_render,
    with_overrides,
)
from .connections import restrict
from .distributions import RngHandle, exponential
from .engine import combine_counts, default_name, init_state, run
from .errors import ConfigError
from .patterns import (
    Pattern,
    PatternFamily,
    brute_force_traps,
    enumerate_traps,
    hebb_connections,
    pattern_from_trap,
    trap_from_pattern,
    verify_storage,
)
from .topology import BlockStructure, default_pairing, sublattice_lambda0


def thread_count(n_tasks: int) -> int:
    """Worker cap: HOURGLASS_THREADS if set, else the CPU count."""
    env = os.environ.get("HOURGLASS_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(
                f"HOURGLASS_THREADS: expected an integer, got {env!r}"
            ) from None
        if cap < 1:
            raise ConfigError(f"HOURGLASS_THREADS: must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


# -- single experiment ----------------------------------------------------


@dataclass
class SimulationResult:
    config: ExperimentConfig
    sha256: str
    backend: str
    frequencies: FrequencyEstimate
    growth: np.ndarray
    verdict: Verdict
    silent: frozenset[int]
    pattern: Pattern
    analytic: Classification | None
    analytic_skipped: str | None
    n_events: int
    window: tuple[float, float]


def simulate_experiment(
    config: ExperimentConfig,
    *,
    rng: RngHandle | None = None,
    backend: str | None = None,
) -> SimulationResult:
    """Burn in, record the two post-burn-in half-windows, and summarize.

    The trailing half-window supplies the activity verdict; when the system
    is all-inhibitory and small enough, the exact subset classification is
    attached as well.
    """
    top = config.build_topology()
    conn = config.build_connections(top)
    handle = rng if rng is not None else RngHandle(config.run.seed)
    state = init_state(conn, config.init, seed=handle)
    x0 = state.x.copy()

    horizon = config.run.horizon
    half = horizon / 2.0
    burn = config.run.burn_in_fraction * horizon
    if burn > 0:
        run(state, burn, backend=backend)
    head = run(state, half, record=True, backend=backend)
    tail = run(state, horizon, record=True, backend=backend)
    stats = combine_counts(head, tail)

    freq = estimate_frequencies(stats)
    growth = state.x - x0
    verdict, silent = activity_verdict(
        range(conn.n_sites), growth, tail.total, horizon - half
    )
    pattern = pattern_from_trap(silent, top)

    analytic = None
    skipped = None
    if conn.excitatory_pairs:
        skipped = "excitatory couplings present"
    elif conn.n_sites > SUBSET_BUDGET:
        skipped = (
            f"{conn.n_sites} sites exceed the {SUBSET_BUDGET}-site subset budget"
        )
    else:
        analytic = classify_inductive(conn)

    return SimulationResult(
        config=config,
        sha256=config_sha256(config),
        backend=backend or default_name(),
        frequencies=freq,
        growth=growth,
        verdict=verdict,
        silent=silent,
        pattern=pattern,
        analytic=analytic,
        analytic_skipped=skipped,
        n_events=stats.n_events,
        window=(stats.t_start, stats.t_end),
    )


def report_dict(result: SimulationResult) -> dict:
    analytic = None
    if result.analytic is not None:
        witness = result.analytic.witness
        analytic = {
            "label": result.analytic.method,
            "verdict": result.analytic.verdict.value,
            "witness": sorted(witness) if witness is not None else None,
        }
    return {
        "config_sha256": result.sha256,
        "seed": result.config.run.seed,
        "horizon": result.config.run.horizon,
        "backend": result.backend,
        "n_events": int(result.n_events),
        "window": [result.window[0], result.window[1]],
        "frequencies": [list(row) for row in result.frequencies.rows()],
        "growth": [float(g) for g in result.growth],
        "heuristic": {
            "label": LABEL_HEURISTIC,
            "verdict": result.verdict.value,
            "silent_sites": sorted(result.silent),
        },
        "analytic": analytic,
        "analytic_skipped": result.analytic_skipped,
        "pattern": result.pattern.to_json(),
    }


def write_simulation(result: SimulationResult, out_dir=None) -> dict[str, Path]:
    out = Path(out_dir if out_dir is not None else result.config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    formats = result.config.output.formats
    paths: dict[str, Path] = {}
    stamp = f"# config={result.sha256} seed={result.config.run.seed}\n"
    if "csv" in formats:
        path = out / "frequencies.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(stamp)
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["site", "pi0", "pie_total", "pi_total"])
            writer.writerows(result.frequencies.rows())
        paths["frequencies"] = path
    if "json" in formats:
        paths["report"] = _write_json(out / "report.json", report_dict(result))
    if "pattern" in formats:
        paths["pattern_json"] = _write_json(
            out / "pattern.json", result.pattern.to_json()
        )
        path = out / "pattern.txt"
        path.write_text(
            result.pattern.render(result.config.build_topology()) + "\n",
            encoding="utf-8",
        )
        paths["pattern_txt"] = path
    return paths


# -- parameter sweeps -----------------------------------------------------


def _sweep_worker(payload) -> dict:
    base_dict, cell, cell_index, replication, seed_base, backend = payload
    from .config import parse_config  # local import keeps workers cheap to spawn

    config = with_overrides(parse_config(base_dict), **cell)
    handle = RngHandle(seed_base).derive(cell_index, replication)
    result = simulate_experiment(config, rng=handle, backend=backend)
    return {
        "cell_index": cell_index,
        "replication": replication,
        "transient": int(result.verdict is Verdict.TRANSIENT),
        "verdict": result.verdict.value,
        "mean_pi": float(np.mean(result.frequencies.pi_total)),
    }


@dataclass
class SweepResult:
    spec: SweepSpec
    sha256: str
    runs: list[dict]
    cells: list[dict]
    paths: dict[str, Path]


def sweep_sha256(spec: SweepSpec) -> str:
    semantic = render_sweep(spec)
    semantic["base"] = semantic_render(spec.base)
    return hashlib.sha256(canonical_json(semantic).encode()).hexdigest()


def run_sweep(
    spec: SweepSpec,
    out_dir=None,
    *,
    backend: str | None = None,
    max_workers: int | None = None,
) -> SweepResult:
    """Simulate every (cell, replication), then write per-run and per-cell
    tables.  Replications are seeded independently per cell from
    ``seed_base`` and executed on a process pool capped by
    HOURGLASS_THREADS; row order is deterministic regardless of scheduling.
    """
    cells = spec.cells()
    axes = spec.axes
    base_dict = render_config(spec.base)
    payloads = [
        (base_dict, cell, idx, rep, spec.seed_base, backend)
        for idx, cell in enumerate(cells)
        for rep in range(spec.replications)
    ]
    if max_workers is None:
        workers = thread_count(len(payloads))
    else:
        workers = max(1, min(max_workers, len(payloads) or 1))
    if workers <= 1 or len(payloads) <= 1:
        rows = [_sweep_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, payloads))

    base_values = {axis: getattr(spec.base.connections, axis) for axis in axes}
    cell_values = [
        {axis: cell.get(axis, base_values[axis]) for axis in axes} for cell in cells
    ]
    runs = [
        {**cell_values[row["cell_index"]], **row}
        for row in rows
    ]
    aggregates = []
    for idx in range(len(cells)):
        group = [row for row in rows if row["cell_index"] == idx]
        transient = np.array([row["transient"] for row in group], dtype=np.float64)
        pis = np.array([row["mean_pi"] for row in group], dtype=np.float64)
        aggregates.append(
            {
                **cell_values[idx],
                "replications": len(group),
                "transient_fraction": float(transient.mean()),
                "mean_pi": float(pis.mean()),
                "pi_half_width": _confidence_half_width(pis, 0.95),
            }
        )

    sha = sweep_sha256(spec)
    paths: dict[str, Path] = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stamp = f"# sweep={sha} seed_base={spec.seed_base}\n"

        path = out / "runs.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(stamp)
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([*axes, "replication", "transient"])
            for row in runs:
                writer.writerow(
                    [*(row[a] for a in axes), row["replication"], row["transient"]]
                )
        paths["runs"] = path

        path = out / "cells.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(stamp)
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [*axes, "replications", "transient_fraction", "mean_pi", "pi_half_width"]
            )
            for cell in aggregates:
                writer.writerow(
                    [
                        *(cell[a] for a in axes),
                        cell["replications"],
                        cell["transient_fraction"],
                        cell["mean_pi"],
                        cell["pi_half_width"],
                    ]
                )
        paths["cells"] = path

    return SweepResult(spec=spec, sha256=sha, runs=runs, cells=aggregates, paths=paths)


# -- balance check --------------------------------------------------------


def run_balance(
    config: ExperimentConfig,
    w_E: float | None = None,
    *,
    backend: str | None = None,
) -> tuple[BalanceReport, dict]:
    """Simulate the even-checkerboard subsystem and evaluate the balance
    relation on the recorded window (single segment, so the remaining-time
    reservoir stays untouched by burn-in)."""
    if config.kind != TORUS:
        raise ConfigError("the balance relation applies to torus configs only")
    if w_E is not None and w_E != config.connections.w_E:
        config = with_overrides(config, w_E=float(w_E))
    top = config.build_topology()
    conn = config.build_connections(top)
    lam0 = sublattice_lambda0(top)
    state = init_state(restrict(conn, lam0), config.init, seed=config.run.seed)
    horizon = config.run.horizon
    burn = config.run.burn_in_fraction * horizon
    if burn > 0:
        run(state, burn, backend=backend)
    stats = run(state, horizon, record=True, backend=backend)
    report = balance_report(
        stats, config.connections.w_E, top.geometry.K_E, eta2=config.connections.eta2
    )
    data = {
        "config_sha256": config_sha256(config),
        "seed": config.run.seed,
        "w_E": config.connections.w_E,
        "K_E": top.geometry.K_E,
        "n_events": int(report.n_events),
        "residual": report.residual,
        "lhs": report.lhs,
        "lhs_per_site": [[site, value] for site, value in sorted(report.lhs_per_site.items())],
        "pi_plus": report.pi_plus,
        "pi_plus0": report.pi_plus0,
        "amplification": report.amplification,
        "trigger_prob": [
            [dst, src, value]
            for (dst, src), value in sorted(report.trigger_prob.items())
        ],
        "overshoot_mean": [
            [dst, src, value]
            for (dst, src), value in sorted(report.overshoot_mean.items())
        ],
    }
    return report, data


def write_balance(data: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _write_json(out / "balance.json", data)


# -- trap reports ---------------------------------------------------------


def traps_report(config: ExperimentConfig, *, budget: int = SUBSET_BUDGET) -> dict:
    """Enumerate the limiting patterns of a block config; below the subset
    budget, cross-check the structural family against the exhaustive
    drift-criterion search."""
    if config.kind != BLOCKS:
        raise ConfigError("trap enumeration requires a block config")
    top = config.build_topology()
    blocks: BlockStructure = top.geometry
    conn_cfg = config.connections
    traps = enumerate_traps(blocks, conn_cfg.a, conn_cfg.b, conn_cfg.c)
    entries = []
    for trap in traps:
        pattern = pattern_from_trap(trap, top)
        entries.append(
            {
                "sites": sorted(trap),
                "pattern": pattern.to_json(),
                "ascii": pattern.render(top),
            }
        )
    verified = None
    if top.n_sites <= budget:
        brute = brute_force_traps(config.build_connections(top), budget)
        verified = set(brute) == set(traps)
    return {
        "config_sha256": config_sha256(config),
        "a": conn_cfg.a,
        "b": conn_cfg.b,
        "c": conn_cfg.c,
        "count": len(traps),
        "traps": entries,
        "verified_exhaustively": verified,
    }


def write_traps(data: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _write_json(out / "traps.json", data)


# -- learning flow --------------------------------------------------------


def load_pattern_family(path) -> PatternFamily:
    """Read a family file: a JSON array of equal-length {-1,+1} arrays.

    The block layout is inferred: 2^p patterns of length 2pk, blocks laid
    out contiguously (sites k(b-1)..kb-1 form block b).
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{path}: expected a non-empty JSON array of patterns")
    patterns = tuple(
        Pattern.from_json(row, where=f"{path}: patterns[{idx}]")
        for idx, row in enumerate(data)
    )
    m = len(patterns)
    p = m.bit_length() - 1
    if 2**p != m or p < 1:
        raise ConfigError(
            f"{path}: a stored family has 2^p patterns for some p >= 1, got {m}"
        )
    n = patterns[0].n_sites
    if n % (2 * p) != 0:
        raise ConfigError(
            f"{path}: pattern length {n} is not divisible by 2p = {2 * p}"
        )
    k = n // (2 * p)
    blocks = BlockStructure(p, k, default_pairing(p))
    return PatternFamily(patterns, blocks)


def run_learn(patterns_path, a: float, A: float, B: float, out_dir=None) -> dict:
    """Learn block constants from a pattern family and emit a runnable
    config plus a verification report."""
    family = load_pattern_family(patterns_path)
    learned = hebb_connections(family, a, A, B)
    verified = verify_storage(learned, family)
    config = ExperimentConfig(
        topology=BlockTopologyConfig(
            p=family.blocks.p, k=family.blocks.k, pairing=learned.pairing
        ),
        connections=BlockConnectionsConfig(
            a=learned.a, b=learned.weak, c=learned.strong, magnitude="exponential"
        ),
        y=exponential(learned.a),
        init=exponential(1.0),
        run=RunSection(seed=0, horizon=10000.0, burn_in_fraction=0.2),
        output=OutputSection(dir="results", formats=KNOWN_FORMATS),
    )
    data = {
        "a": a,
        "A": A,
        "B": B,
        "weak": learned.weak,
        "strong": learned.strong,
        "pairing": [list(couple) for couple in learned.pairing],
        "p": family.blocks.p,
        "k": family.blocks.k,
        "stored_traps": [sorted(trap_from_pattern(pat)) for pat in family.patterns],
        "verified": verified,
        "config_sha256": config_sha256(config),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "learned_config.json", render_config(config))
        _write_json(out / "learning.json", data)
    return data
