"""Multi-seed experiment sweeps driven by a TOML config.

A sweep is the cross product instances x k_sub values x solvers x seeds, one
single-V-cycle run per cell. Results land in a CSV (one row per run) and an
optional JSON summary with median/25th/75th percentiles per (instance, k_sub,
solver) group, normalized against the best known or best found value.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graphs import WeightedGraph, bfs_truncate, load_graph, planted_partition
from .harness import RunRecord, VCycleOptions, run_vcycle
from .objective import ProblemKind
from .solvers import SAParams, SolverConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["SweepConfig", "InstanceSpec", "load_sweep_config", "run_sweep",
           "write_csv", "write_summary", "CSV_COLUMNS"]

CSV_COLUMNS = [
    "instance", "problem", "k_sub", "solver", "seed", "n", "hierarchy_depth",
    "total_solver_calls", "level_iterations", "cut", "modularity",
    "imbalance", "objective", "normalized", "balanced", "stalled_coarsening",
    "wall_time_s", "failed", "error",
]

SUMMARY_SCHEMA_VERSION = 1


@dataclass
class InstanceSpec:
    name: str
    path: str | None = None
    format: str = "metis"
    planted: dict | None = None
    truncate: int | None = None
    best_known: float | None = None

    def load(self) -> WeightedGraph:
        if (self.path is None) == (self.planted is None):
            raise ValueError(f"instance {self.name}: need exactly one of "
                             "path or planted")
        if self.path is not None:
            g = load_graph(self.path, self.format)
        else:
            p = self.planted
            g = planted_partition(int(p["n"]), int(p["blocks"]),
                                  float(p["p_in"]), float(p["p_out"]),
                                  int(p.get("seed", 0)))
        if self.truncate is not None:
            g = bfs_truncate(g, int(self.truncate))
        return g


@dataclass
class SweepConfig:
    problem: str
    k_sub: list[int]
    solvers: list[str]
    seeds: list[int]
    instances: list[InstanceSpec]
    workers: int = 1
    options: VCycleOptions = VCycleOptions()
    sa: SAParams = SAParams()
    external_cmd: str | None = None
    external_timeout: float | None = 60.0
    patience: int | None = None


def load_sweep_config(path: str) -> SweepConfig:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    sweep = doc.get("sweep", {})
    sa_doc = doc.get("sa", {})
    ext = doc.get("external", {})
    instances = [
        InstanceSpec(
            name=inst["name"],
            path=inst.get("path"),
            format=inst.get("format", "metis"),
            planted=inst.get("planted"),
            truncate=inst.get("truncate"),
            best_known=inst.get("best_known"),
        )
        for inst in doc.get("instances", [])
    ]
    if not instances:
        raise ValueError(f"{path}: no [[instances]] defined")
    options = VCycleOptions(
        precision_mode=sweep.get("precision", "none"),
        precision_levels=sweep.get("precision_levels") or None,
        patience=sweep.get("patience") or None,
        stochastic_selection=sweep.get("stochastic_selection", False),
    )
    return SweepConfig(
        problem=sweep["problem"],
        k_sub=[int(k) for k in sweep["k_sub"]],
        solvers=list(sweep["solvers"]),
        seeds=[int(s) for s in sweep["seeds"]],
        instances=instances,
        workers=int(sweep.get("workers", 1)),
        options=options,
        sa=SAParams(
            num_samples=int(sa_doc.get("num_samples", 1000)),
            sweeps=int(sa_doc.get("sweeps", 50)),
            t_hot=sa_doc.get("t_hot"),
            t_cold=sa_doc.get("t_cold"),
        ),
        external_cmd=ext.get("cmd"),
        external_timeout=ext.get("timeout", 60.0),
    )


def _solver_config(cfg: SweepConfig, name: str) -> SolverConfig:
    return SolverConfig(name=name, sa=cfg.sa, external_cmd=cfg.external_cmd,
                        external_timeout=cfg.external_timeout)


def _run_cell(task) -> RunRecord:
    g, problem, k_sub, solver_cfg, seed, name, options = task
    return run_vcycle(g, problem, k_sub, solver_cfg, seed, instance=name,
                      options=options)


def run_sweep(cfg: SweepConfig) -> list[RunRecord]:
    """Execute every cell; failures become failed records, not exceptions."""
    kind = ProblemKind(cfg.problem)
    graphs = {inst.name: inst.load() for inst in cfg.instances}
    tasks = []
    for inst in cfg.instances:
        for k_sub in cfg.k_sub:
            for solver_name in cfg.solvers:
                for seed in cfg.seeds:
                    tasks.append((
                        graphs[inst.name], kind, k_sub,
                        _solver_config(cfg, solver_name), seed, inst.name,
                        cfg.options,
                    ))
    if cfg.workers > 1:
        # spawned workers: the compiled solver kernels do not survive fork
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=cfg.workers,
                                 mp_context=ctx) as pool:
            records = list(pool.map(_run_cell, tasks))
    else:
        records = [_run_cell(t) for t in tasks]
    return records


def _best_values(cfg: SweepConfig, records: list[RunRecord]) -> dict[str, float]:
    """Per-instance normalization reference: best known, else best found."""
    kind = ProblemKind(cfg.problem)
    best: dict[str, float] = {}
    for inst in cfg.instances:
        if inst.best_known is not None:
            best[inst.name] = float(inst.best_known)
    for rec in records:
        if rec.failed or rec.instance in best:
            continue
        value = rec.modularity if kind == ProblemKind.MODULARITY else rec.cut
        if value is None:
            continue
        cur = best.get(rec.instance + "\0found")
        if kind == ProblemKind.MODULARITY:
            keep = cur is None or value > cur
        else:
            keep = cur is None or value < cur
        if keep:
            best[rec.instance + "\0found"] = value
    resolved = {}
    for inst in cfg.instances:
        resolved[inst.name] = best.get(
            inst.name, best.get(inst.name + "\0found", float("nan")))
    return resolved


def normalized_value(kind: ProblemKind, rec: RunRecord, best: float) -> float:
    if rec.failed or not best or best != best:
        return float("nan")
    value = rec.modularity if kind == ProblemKind.MODULARITY else rec.cut
    if value is None:
        return float("nan")
    return value / best


def write_csv(cfg: SweepConfig, records: list[RunRecord], path: str) -> None:
    kind = ProblemKind(cfg.problem)
    best = _best_values(cfg, records)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow({
                "instance": rec.instance,
                "problem": rec.problem,
                "k_sub": rec.k_sub,
                "solver": rec.solver,
                "seed": rec.seed,
                "n": rec.n,
                "hierarchy_depth": rec.hierarchy_depth,
                "total_solver_calls": rec.total_solver_calls,
                "level_iterations": "|".join(map(str, rec.level_iterations)),
                "cut": rec.cut,
                "modularity": "" if rec.modularity is None else rec.modularity,
                "imbalance": rec.imbalance,
                "objective": rec.objective,
                "normalized": normalized_value(kind, rec, best[rec.instance]),
                "balanced": "" if rec.balanced is None else rec.balanced,
                "stalled_coarsening": rec.stalled_coarsening,
                "wall_time_s": round(rec.wall_time_s, 6),
                "failed": rec.failed,
                "error": rec.error or "",
            })


def _quartiles(values: list[float]) -> tuple[float, float, float]:
    med = statistics.median(values)
    q = np.percentile(np.asarray(values, dtype=float), [25, 75])
    return float(q[0]), med, float(q[1])


def write_summary(cfg: SweepConfig, records: list[RunRecord], path: str) -> None:
    kind = ProblemKind(cfg.problem)
    best = _best_values(cfg, records)
    metric_name = "modularity" if kind == ProblemKind.MODULARITY else "cut"
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.instance, rec.k_sub, rec.solver), []).append(rec)
    cells = []
    for (instance, k_sub, solver), recs in sorted(groups.items()):
        ok = [r for r in recs if not r.failed]
        cell = {
            "instance": instance,
            "k_sub": k_sub,
            "solver": solver,
            "metric": metric_name,
            "n_runs": len(recs),
            "n_failed": len(recs) - len(ok),
        }
        if ok:
            values = [
                r.modularity if kind == ProblemKind.MODULARITY else r.cut
                for r in ok
            ]
            normed = [normalized_value(kind, r, best[instance]) for r in ok]
            calls = [float(r.total_solver_calls) for r in ok]
            for prefix, series in (("", values), ("normalized_", normed),
                                   ("calls_", calls)):
                p25, med, p75 = _quartiles(series)
                cell[prefix + "median"] = med
                cell[prefix + "p25"] = p25
                cell[prefix + "p75"] = p75
        cells.append(cell)
    doc = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "problem": cfg.problem,
        "cells": cells,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
