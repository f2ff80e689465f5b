"""Configuration-driven experiments with reproducible CSV/JSON outputs.

A TOML config names one experiment kind, a generator source, and the
numeric grid; `run_experiment` evaluates the grid (cells scheduled over a
worker pool, aggregation single-threaded in canonical order), writes CSV
tables with fixed float formatting, and drops a sidecar manifest JSON
recording the config hash, seed, library versions, wall time, and a
checksum per output file.  Identical (config, seed) produce byte-identical
CSVs at any thread count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .escape import EscapeConfig, build_T, escape_curve, fit_escape_exponent
from .gaps import (
    deflated_abs_max,
    delayed_walk_operator,
    expansion_test,
    local_gap_estimate,
    restricted_gap,
    walk_spectrum,
)
from .groups import (
    SL2R,
    SU2,
    GeneratorSet,
    GroupElement,
    load_generator_set,
    lps_p5,
    rational_near_identity_triple,
    sanov_pair,
    su2_from_quaternion,
)
from .measures import SubgroupSpec, convolve, symmetrize
from .nets import IntervalNet, build_net
from .operators import (
    almost_orthogonality_table,
    dyadic_decompose,
    flattening_curve,
    mixing_probe,
)
from .projline import NoCertificate, certify_free
from .rng import stream
from .su2reps import averaging_spectrum, second_gap_census

__all__ = [
    "EXPERIMENT_KINDS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "check_fixtures",
    "fixtures_root",
]

EXPERIMENT_KINDS = (
    "spectrum", "census", "flatten", "escape", "walk", "expand",
    "pingpong", "gap", "lp", "dyadic", "mixing",
)

PRESETS = ("lps_p5", "sanov", "rational_triple", "rotation_pair",
           "free_rotation_pair", "scaled_sanov")


class ConfigError(ValueError):
    """Config file failed to parse or validate."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    group: str
    seed: int
    generators: dict
    params: dict
    escape: Optional[dict]
    output_dir: Optional[str]
    source_path: Optional[str] = None
    raw_bytes: bytes = b""

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.group not in (SU2, SL2R):
            raise ConfigError(f"unknown group {self.group!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        for key in ("cap", "caps", "sample_cap", "atom_cap", "budget"):
            for table in (self.params, self.escape or {}):
                if key in table and not (isinstance(table[key], int)
                                         and table[key] > 0):
                    raise ConfigError(f"cap {key!r} must be a positive integer")


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment config."""
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    exp = data.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigError("missing [experiment] table")
    for key in ("kind", "group"):
        if key not in exp:
            raise ConfigError(f"[experiment] is missing {key!r}")
    gens = data.get("generators", {})
    if gens and "preset" not in gens and "file" not in gens:
        raise ConfigError("[generators] needs either 'preset' or 'file'")
    preset = gens.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown generator preset {preset!r}")
    return ExperimentConfig(
        kind=exp["kind"],
        group=exp["group"],
        seed=int(exp.get("seed", 0)),
        generators=gens,
        params=data.get("params", {}),
        escape=data.get("escape"),
        output_dir=exp.get("output_dir"),
        source_path=str(path),
        raw_bytes=raw,
    )


def _rot(theta: float, axis: int) -> GroupElement:
    q = [math.cos(theta / 2), 0.0, 0.0, 0.0]
    q[axis] = math.sin(theta / 2)
    return GroupElement(SU2, su2_from_quaternion(np.array(q)))


def _rotation_pair(angle: float) -> GeneratorSet:
    return GeneratorSet((_rot(angle, 1), _rot(angle, 2)), freeness="assumed")


def resolve_generators(cfg: ExperimentConfig) -> GeneratorSet:
    gens = cfg.generators
    if "file" in gens:
        out = load_generator_set(gens["file"])
    else:
        preset = gens.get("preset")
        if preset is None:
            raise ConfigError("experiment needs a [generators] table")
        if preset == "lps_p5":
            out = lps_p5()
        elif preset == "sanov":
            out = sanov_pair()
        elif preset == "rational_triple":
            out = rational_near_identity_triple()
        elif preset == "rotation_pair":
            out = _rotation_pair(float(gens.get("angle", 0.2)))
        elif preset == "free_rotation_pair":
            out = GeneratorSet(
                (GroupElement(SU2, su2_from_quaternion(
                    np.array([3 / 5, 4 / 5, 0.0, 0.0]))),
                 GroupElement(SU2, su2_from_quaternion(
                     np.array([3 / 5, 0.0, 4 / 5, 0.0])))),
                freeness="assumed")
        else:  # scaled_sanov
            t = float(gens.get("t", 0.05))
            out = GeneratorSet(
                (GroupElement(SL2R, np.array([[1.0, t], [0.0, 1.0]])),
                 GroupElement(SL2R, np.array([[1.0, 0.0], [t, 1.0]]))),
                freeness="assumed")
    if out.elements[0].kind != cfg.group:
        raise ConfigError(
            f"generators live in {out.elements[0].kind}, config says {cfg.group}")
    return out


def _net_of(cfg: ExperimentConfig, table_key: str = "net"):
    table = cfg.params.get(table_key)
    if not isinstance(table, dict) or "spacing" not in table:
        raise ConfigError(f"[params.{table_key}] needs 'spacing' and 'region'")
    region = table.get("region", {"type": "full"})
    return build_net(cfg.group, float(table["spacing"]), dict(region))


def _region_descriptor(table: dict) -> str:
    region = table.get("region", {"type": "full"})
    kind = region.get("type", "full")
    if kind == "ball":
        return f"ball({region['radius']:g})"
    if kind == "box":
        return f"box({region['half_width']:g})"
    return "full"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    return str(value)


def _write_csv(path: Path, header: list, rows: list) -> dict:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return {"file": path.name, "rows": len(rows), "sha256": digest}


def _pmap(pool, fn, items):
    items = list(items)
    if pool is None or len(items) <= 1:
        return [fn(x) for x in items]
    return list(pool.map(fn, items))


# --- experiment bodies: each returns (csv tables, manifest extras) ------

def _exp_spectrum(cfg, pool):
    gens = resolve_generators(cfg)
    mu = symmetrize(gens, key_mode="word")
    n_max = int(cfg.params.get("n_max", 12))
    if n_max < 1:
        raise ConfigError("spectrum needs n_max >= 1")
    spectra = _pmap(pool, lambda n: averaging_spectrum(mu, n),
                    range(1, n_max + 1))
    rows = []
    for n, eig in zip(range(1, n_max + 1), spectra):
        for idx, val in enumerate(np.sort(eig)):
            rows.append((n, idx, float(val)))
    return [("spectrum.csv", ["n", "eig_index", "eigenvalue"], rows)], {
        "k": gens.k, "n_max": n_max}


def _exp_census(cfg, pool):
    if cfg.group != SU2:
        raise ConfigError("the census experiment runs on SU2")
    eps_grid = [float(e) for e in cfg.params.get("eps", [0.2, 0.1, 0.05])]
    if not eps_grid or any(e <= 0 for e in eps_grid):
        raise ConfigError("census needs a positive eps grid")
    n_max = int(cfg.params.get("n_max", 40))
    per_eps = _pmap(pool, lambda e: second_gap_census(_rotation_pair(e), n_max),
                    eps_grid)
    rows = []
    for eps, census in zip(eps_grid, per_eps):
        for row in census:
            rows.append((eps, row.n, row.count_in_half_one, row.cumulative))
    return [("census.csv", ["eps", "n", "count_in_half_one", "cumulative"],
             rows)], {"n_max": n_max, "eps": eps_grid}


def _exp_flatten(cfg, pool):
    gens = resolve_generators(cfg)
    mu = symmetrize(gens, key_mode="word")
    net = _net_of(cfg)
    delta = float(cfg.params.get("delta", 4 * net.spacing))
    n_max = int(cfg.params.get("n_max", 3))
    cap = int(cfg.params.get("atom_cap", 2_000_000))
    rows, slope = flattening_curve(mu, net, delta, n_max, cap=cap)
    table = [(r.n, r.delta, r.l2_norm) for r in rows]
    return [("flatten.csv", ["n", "delta", "l2_norm"], table)], {
        "fitted_exponent": slope, "cells": net.size}


def _exp_escape(cfg, pool):
    gens = resolve_generators(cfg)
    extras = {}
    if cfg.escape is not None:
        esc = cfg.escape
        ecfg = EscapeConfig(
            base=gens,
            ell=int(esc["ell"]),
            a=int(esc.get("a", 0)),
            b=int(esc.get("b", 1)),
            eta=float(esc.get("eta", 0.1)),
            bucket_resolution=esc.get("bucket_resolution"),
            sample_cap=int(esc.get("caps", 200_000)),
            seed=int(esc.get("seed", cfg.seed)),
        )
        T, report = build_T(ecfg)
        extras["t_size"] = report.t_size
        extras["epsilon_prime"] = report.epsilon_prime
    else:
        T = gens
    deltas = [float(d) for d in cfg.params.get("deltas", [0.05])]
    n_max = int(cfg.params.get("n_max", 5))
    cap = int(cfg.params.get("atom_cap", 2_000_000))
    families = cfg.params.get("subgroups", ["rotation"])
    specs = []
    for fam in families:
        spec = SubgroupSpec(str(fam))
        try:
            spec.validate(cfg.group)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        specs.append(spec)
    blocks = _pmap(pool, lambda s: escape_curve(T, s, deltas, n_max, cap=cap),
                   specs)
    rows = []
    for block in blocks:
        alpha = fit_escape_exponent(block)
        for i, r in enumerate(block):
            last = i == len(block) - 1
            rows.append((r.n, r.delta, r.subgroup, r.mass,
                         alpha if last else None))
    return [("escape.csv",
             ["n", "delta", "subgroup", "mass", "fitted_exponent"], rows)], extras


def _exp_walk(cfg, pool):
    gens = resolve_generators(cfg)
    net = _net_of(cfg)
    op = delayed_walk_operator(gens, net)
    eigs, defect = walk_spectrum(op)
    radius = deflated_abs_max(op, seed=cfg.seed)
    rows = [(i, float(v.real), float(v.imag), float(abs(v)))
            for i, v in enumerate(eigs)]
    return [("walk.csv", ["eig_index", "real_part", "imag_part", "modulus"],
             rows)], {
        "gap": 1.0 - radius,
        "row_sum_defect": op.row_sum_defect,
        "symmetry_defect": defect,
        "displaced_atoms": int(sum(op.disjoint_atoms)),
        "k": op.k,
    }


def _exp_expand(cfg, pool):
    gens = resolve_generators(cfg)
    if cfg.group != SL2R:
        raise ConfigError("expansion runs on the projective line of SL2R")
    net = IntervalNet(int(cfg.params.get("cells", 4096)))
    rep = expansion_test(
        gens, net,
        trials=int(cfg.params.get("trials", 20)),
        adversarial_rounds=int(cfg.params.get("rounds", 200)),
        seed=cfg.seed,
        candidates=int(cfg.params.get("candidates", 32)),
    )
    rows = [(r.trial, r.set_size, r.image_measure, r.ratio) for r in rep.rows]
    return [("expand.csv", ["trial", "set_size", "image_measure", "ratio"],
             rows)], {
        "kappa_hat": rep.kappa_hat,
        "worst_set_size": int(rep.worst_set.size),
        "monotone_ok": rep.monotone_ok,
    }


def _exp_pingpong(cfg, pool):
    gens = resolve_generators(cfg)
    budget = int(cfg.params.get("budget", 1000))
    result = certify_free(gens, budget=budget)
    if isinstance(result, NoCertificate):
        rows = [("no_certificate", None, None, result.reason)]
        return [("pingpong.csv", ["status", "margin", "tangencies", "detail"],
                 rows)], {"certified": False}
    rows = [("certified", result.margin, result.tangencies, None)]
    return [
        ("pingpong.csv", ["status", "margin", "tangencies", "detail"], rows),
        ("certificate.json", None, result.to_json()),
    ], {"certified": True}


def _exp_gap(cfg, pool):
    gens = resolve_generators(cfg)
    mu = symmetrize(gens, key_mode="word")
    windows = cfg.params.get("windows")
    if windows is None:
        windows = [cfg.params.get("net")]
    if not windows or any(not isinstance(wdw, dict) for wdw in windows):
        raise ConfigError("gap needs [params.net] or an array of windows")
    r = float(cfg.params.get("r", 0.5))
    ident = cfg.params.get("id", "gap")

    def cell(table):
        net = build_net(cfg.group, float(table["spacing"]),
                        dict(table.get("region", {"type": "full"})))
        loc = local_gap_estimate(gens, net)
        res = restricted_gap(mu, net, r)
        return (ident, _region_descriptor(table), float(table["spacing"]),
                loc.kappa_estimate, res.dim_v, res.residual)

    rows = _pmap(pool, cell, windows)
    return [("gap.csv",
             ["experiment", "window", "delta_net", "kappa_hat", "dim_v",
              "residual"], rows)], {"r": r}


def _exp_lp(cfg, pool):
    gens = resolve_generators(cfg)
    mu = symmetrize(gens, key_mode="word")
    net = _net_of(cfg)
    i_max = int(cfg.params.get("i_max", 3))
    raw, scaled, c0 = almost_orthogonality_table(mu, net, i_max,
                                                 seed=cfg.seed)
    rows = [(i, j, float(raw[i, j]), float(scaled[i, j]))
            for i in range(i_max + 1) for j in range(i_max + 1)]
    return [("lp.csv", ["i", "j", "norm", "scaled_norm"], rows)], {
        "c0_hat": c0}


def _exp_dyadic(cfg, pool):
    gens = resolve_generators(cfg)
    mu = symmetrize(gens, key_mode="word")
    power = int(cfg.params.get("power", 1))
    cap = int(cfg.params.get("atom_cap", 2_000_000))
    for _ in range(power - 1):
        mu = convolve(mu, symmetrize(gens, key_mode="word"), cap=cap)
    net = _net_of(cfg)
    delta = float(cfg.params.get("delta", 4 * net.spacing))
    decomp, report = dyadic_decompose(mu, net, delta)
    rows = [(i, len(idx)) for i, idx in decomp.levels]
    return [("dyadic.csv", ["level", "cell_count"], rows)], {
        "sandwich_upper": report.sandwich_upper,
        "sandwich_lower": report.sandwich_lower,
        "nonempty_levels": report.nonempty_levels,
        "level_cap": report.level_cap,
        "overlap_multiplicity": report.overlap_multiplicity,
    }


def _exp_mixing(cfg, pool):
    net = _net_of(cfg)
    deltas = [float(d) for d in cfg.params.get("deltas", [4 * net.spacing])]
    f = stream(cfg.seed, "mixing.f").standard_normal(net.size)
    F = stream(cfg.seed, "mixing.F").standard_normal(net.size)
    reports = _pmap(pool, lambda d: mixing_probe(net, f, F, d), deltas)
    rows = [(rep.delta, rep.lhs, rep.p_delta_norm) for rep in reports]
    return [("mixing.csv", ["delta", "lhs", "p_delta_norm"], rows)], {
        "cells": net.size}


_BODIES = {
    "spectrum": _exp_spectrum,
    "census": _exp_census,
    "flatten": _exp_flatten,
    "escape": _exp_escape,
    "walk": _exp_walk,
    "expand": _exp_expand,
    "pingpong": _exp_pingpong,
    "gap": _exp_gap,
    "lp": _exp_lp,
    "dyadic": _exp_dyadic,
    "mixing": _exp_mixing,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str,
                   threads: int = 1) -> dict:
    """Evaluate one config into CSV outputs plus a manifest JSON."""
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    start = time.monotonic()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    body = _BODIES[cfg.kind]
    if threads == 1:
        tables, extras = body(cfg, None)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            tables, extras = body(cfg, pool)
    outputs = []
    for spec in tables:
        name, header, payload = spec
        path = out / name
        if header is None:  # pre-rendered text artifact (e.g. a certificate)
            path.write_text(payload)
            outputs.append({
                "file": name, "rows": None,
                "sha256": hashlib.sha256(path.read_bytes()).hexdigest()})
        else:
            outputs.append(_write_csv(path, header, payload))
    manifest = {
        "experiment": cfg.kind,
        "group": cfg.group,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(cfg.raw_bytes).hexdigest(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "gaplab": __version__,
        },
        "threads": threads,
        "wall_time_s": round(time.monotonic() - start, 3),
        "outputs": outputs,
    }
    manifest.update(extras)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# --- frozen fixture regression checks -----------------------------------

def fixtures_root() -> Path:
    return Path(__file__).resolve().parent / "fixtures"


@dataclass
class FixtureResult:
    name: str
    ok: bool
    detail: str = ""


def _compare_csv(expected: Path, produced: Path, tolerances: dict,
                 ) -> Optional[str]:
    if not produced.exists():
        return f"missing output {produced.name}"
    with open(expected, newline="") as fh:
        want = list(csv.reader(fh))
    with open(produced, newline="") as fh:
        got = list(csv.reader(fh))
    if not want or want[0] != got[0]:
        return f"{produced.name}: header mismatch"
    if len(want) != len(got):
        return f"{produced.name}: {len(got) - 1} rows, expected {len(want) - 1}"
    header = want[0]
    for rix, (wrow, grow) in enumerate(zip(want[1:], got[1:]), start=2):
        for col, wv, gv in zip(header, wrow, grow):
            tol = tolerances.get(col)
            if tol is None:
                if wv != gv:
                    return (f"{produced.name}:{rix} column {col}: "
                            f"{gv!r} != {wv!r}")
            else:
                if (wv == "") != (gv == ""):
                    return f"{produced.name}:{rix} column {col}: emptiness"
                if wv and abs(float(wv) - float(gv)) > tol:
                    return (f"{produced.name}:{rix} column {col}: "
                            f"|{gv} - {wv}| > {tol}")
    return None


def check_fixtures(out_root: Optional[str] = None, threads: int = 1,
                   ) -> list[FixtureResult]:
    """Re-run every frozen fixture config and diff its CSVs."""
    root = fixtures_root()
    results = []
    names = sorted(p.name for p in root.iterdir()
                   if (p / "config.toml").exists())
    if not names:
        return [FixtureResult("(none)", False, "no fixture configs found")]
    import tempfile

    for name in names:
        fdir = root / name
        meta = json.loads((fdir / "manifest.json").read_text()) \
            if (fdir / "manifest.json").exists() else {}
        tolerances = meta.get("tolerances", {})
        if out_root is None:
            scratch = tempfile.mkdtemp(prefix=f"gaplab-{name}-")
        else:
            scratch = str(Path(out_root) / name)
        try:
            cfg = load_config(str(fdir / "config.toml"))
            run_experiment(cfg, scratch, threads=threads)
        except Exception as exc:  # noqa: BLE001 - report, do not crash the sweep
            results.append(FixtureResult(name, False, f"run failed: {exc}"))
            continue
        problem = None
        for exp_csv in sorted((fdir / "expected").glob("*.csv")):
            problem = _compare_csv(exp_csv, Path(scratch) / exp_csv.name,
                                   tolerances)
            if problem:
                break
        results.append(FixtureResult(name, problem is None, problem or ""))
    return results
