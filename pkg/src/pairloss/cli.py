"""Command-line front end for the collision experiments.

Subcommands:
  fig1              relative-density profiles, plain envelope (3 canonical sets)
  fig2              same for the node-excited envelope
  sweep             survival probability over a (k0, gamma) grid
  singularity-scan  boundary-condition residual over a k range + E_ss(K) curve
  eval              pointwise debug evaluation of the core functions
  convergence       grid-oracle refinement ladder on a chosen case

Exit codes: 0 success, 2 config error, 3 numerical-accuracy failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import grid as gridmod
from . import propagate, quadrature
from .eigen import singular_energy, singularity_residual
from .errors import AccuracyError, ConfigError, DomainError
from .params import EnvelopeKind, InteractionParams, PacketParams
from .reports import RunManifest, parse_strict, write_csv

# Canonical profile parameter sets (gamma, k0, alpha = 2 beta); the resonant
# sets are run at k0 = gamma (1 + eps) because k0 = gamma exactly degenerates
# the conventional normalization constants.
_EPS = 5e-3
FIG1_SETS = {"a": (5.0, 5.0 * (1.0 + _EPS), 2.0),
             "b": (5.0, 5.0 * (1.0 + _EPS), 3.0),
             "c": (2.0, 5.0, 2.0)}
FIG2_SETS = {"a": (10.0, 10.0 * (1.0 + _EPS), 1.0),
             "b": (10.0, 10.0 * (1.0 + _EPS), 3.0),
             "c": (4.0, 10.0, 1.0)}

_PACKET_SCHEMA = {
    "gamma": (float, None), "alpha": (float, None), "beta": (float, None),
    "k0": (float, None), "K0": (float, 0.0), "r0": (float, 10.0),
    "R0": (float, 0.0),
}
_GRID_SCHEMA = {
    "L": (float, 30.0), "N": (int, 512), "dt": (float, None),
    "a": (float, None), "boundary": (str, "periodic"),
}
_QUAD_SCHEMA = {
    "n_sigma": (float, 8.0), "abs_tol": (float, 1e-10),
    "rel_tol": (float, 1e-8), "max_subdivisions": (int, 10_000),
}
_TOP_SCHEMA = {
    "experiment": (str, None), "packet": (dict, None), "envelope": (str, "plain"),
    "grid": (dict, None), "quadrature": (dict, None), "output_dir": (str, None),
    "seed": (int, 0), "workers": (int, 1), "with_grid_oracle": (bool, False),
    "r0": (float, 10.0), "frames": (int, 200), "r_points": (int, 601),
    "k0_list": (list, None), "gamma_list": (list, None),
    "k_range": (list, None), "k_points": (int, 401),
    "t_final": (float, None), "sets": (list, None),
}


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _resolve(args, need_packet=False) -> dict:
    cfg = parse_strict(_load_config(args.config), _TOP_SCHEMA)
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.with_grid_oracle:
        cfg["with_grid_oracle"] = True
    if cfg["output_dir"] is None:
        cfg["output_dir"] = "pairloss-out"
    if cfg["packet"] is not None:
        cfg["packet"] = parse_strict(cfg["packet"], _PACKET_SCHEMA, "packet")
    elif need_packet:
        raise ConfigError("this experiment requires a 'packet' section")
    if cfg["grid"] is not None:
        cfg["grid"] = parse_strict(cfg["grid"], _GRID_SCHEMA, "grid")
    if cfg["quadrature"] is not None:
        cfg["quadrature"] = parse_strict(cfg["quadrature"], _QUAD_SCHEMA,
                                         "quadrature")
    return cfg


def _packet_from(cfg_packet: dict) -> PacketParams:
    missing = [k for k in ("gamma", "alpha", "beta", "k0")
               if cfg_packet.get(k) is None]
    if missing:
        raise ConfigError(f"packet section missing required keys {missing}")
    return PacketParams(**cfg_packet)


def _grid_spec_from(cfg) -> gridmod.GridSpec:
    g = cfg["grid"] or {k: d for k, (_, d) in _GRID_SCHEMA.items()}
    return gridmod.GridSpec(L=g["L"], N=g["N"], dt=g["dt"], a=g["a"],
                            boundary=g["boundary"])


# ---------------------------------------------------------------------------
# fig1 / fig2
# ---------------------------------------------------------------------------

def _profile_run(cfg, sets, kind: EnvelopeKind, manifest: RunManifest):
    out = Path(cfg["output_dir"])
    wanted = cfg["sets"] or list(sets)
    unknown = [tag for tag in wanted if tag not in sets]
    if unknown:
        raise ConfigError(f"unknown profile sets {unknown}; "
                          f"available: {sorted(sets)}")
    for tag in wanted:
        gamma, k0, alpha = sets[tag]
        p = PacketParams(gamma=gamma, alpha=alpha, beta=alpha / 2.0, k0=k0,
                         r0=cfg["r0"])
        t_max = cfg["t_final"] or 3.0 * p.r0 / (2.0 * p.k0)
        ts = np.linspace(0.0, t_max, cfg["frames"])
        half_r = p.r0 + 2.0 * p.k0 * t_max + 5.0 * math.sqrt(
            1.0 + 4.0 * p.beta**4 * t_max**2) / p.beta
        rs = np.linspace(-half_r, half_r, cfg["r_points"])
        rows = []
        for t in ts:
            vals = propagate.rel_wave(rs, t, p, kind)
            for r, v in zip(rs, vals):
                rows.append((t, r, v.real, v.imag, abs(v) ** 2))
        meta = {"set": tag, "gamma": gamma, "k0": k0, "alpha": alpha,
                "beta": alpha / 2.0, "r0": cfg["r0"], "kind": kind.value,
                "t_final": t_max}
        path = write_csv(out / f"profile_{tag}.csv",
                         ["t", "r", "re", "im", "density"], rows, meta)
        manifest.register(path)
        report = propagate.residual_probability(p, kind)
        rows = [(report.formula_quoted, report.formula_resolved,
                 report.integrated, report.t_star, report.integration_error,
                 report.tail_contribution)]
        path = write_csv(out / f"residual_{tag}.csv",
                         ["formula_quoted", "formula_resolved", "integrated",
                          "t_star", "integration_error", "tail_contribution"],
                         rows, meta)
        manifest.register(path)
        if cfg["with_grid_oracle"]:
            spec = _grid_spec_from(cfg)
            st = gridmod.build_initial_state(p, spec, kind)
            snap_times = list(np.linspace(t_max / 10.0, t_max, 10))
            snaps = gridmod.evolve_grid(st, p, t_max, snapshot_times=snap_times,
                                        norm_every=50, workers=cfg["workers"])
            rows = []
            for snap in snaps:
                rv, rho = snap.relative_density()
                keep = slice(None, None, max(1, len(rv) // cfg["r_points"]))
                for r, d in zip(rv[keep], rho[keep]):
                    rows.append((snap.time, r, d))
            path = write_csv(out / f"profile_{tag}_grid.csv",
                             ["t", "r", "density"], rows,
                             {**meta, "grid_N": spec.N, "grid_L": spec.L,
                              "grid_a": spec.a})
            manifest.register(path)


def cmd_fig1(args) -> int:
    cfg = _resolve(args)
    cfg["experiment"] = "fig1"
    manifest = RunManifest(cfg["output_dir"], cfg)
    _profile_run(cfg, FIG1_SETS, EnvelopeKind.PLAIN, manifest)
    manifest.finalize()
    return 0


def cmd_fig2(args) -> int:
    cfg = _resolve(args)
    cfg["experiment"] = "fig2"
    manifest = RunManifest(cfg["output_dir"], cfg)
    _profile_run(cfg, FIG2_SETS, EnvelopeKind.NODE_EXCITED, manifest)
    manifest.finalize()
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_point(task):
    idx, gamma, k0, beta, kind_label, with_grid, grid_cfg = task
    kind = EnvelopeKind.from_label(kind_label)
    row = {"idx": idx, "k0": k0, "gamma": gamma, "beta": beta, "error": ""}
    try:
        p = PacketParams(gamma=gamma, alpha=2.0 * beta, beta=beta, k0=k0)
        rep = propagate.residual_probability(p, kind)
        qres, qerr = quadrature.quadrature_residual(p, kind)
        row.update(printed_residual=rep.formula_quoted,
                   resolved_ratio=rep.formula_resolved,
                   analytic_integrated_residual=rep.integrated,
                   analytic_error=rep.integration_error,
                   quadrature_residual=qres, quadrature_error=qerr,
                   tail_contribution=rep.tail_contribution)
        if with_grid:
            spec = gridmod.GridSpec(L=grid_cfg["L"], N=grid_cfg["N"],
                                    dt=grid_cfg["dt"], a=grid_cfg["a"],
                                    boundary=grid_cfg["boundary"])
            st = gridmod.build_initial_state(p, spec, kind)
            t_fin = 2.0 * p.r0 / p.k0
            gridmod.evolve_grid(st, p, t_fin, norm_every=100, workers=1)
            row["grid_residual"] = st.norm_sq()
        else:
            row["grid_residual"] = None
    except (DomainError, ConfigError, AccuracyError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


_SWEEP_COLS = ["idx", "k0", "gamma", "beta", "printed_residual",
               "resolved_ratio", "analytic_integrated_residual",
               "analytic_error", "quadrature_residual", "quadrature_error",
               "grid_residual", "tail_contribution", "error"]


def _require_numbers(values, where):
    bad = [v for v in values if not isinstance(v, (int, float))
           or isinstance(v, bool) or not math.isfinite(float(v))]
    if bad:
        raise ConfigError(f"{where} must be finite numbers, got {bad}")
    return [float(v) for v in values]


def cmd_sweep(args) -> int:
    cfg = _resolve(args, need_packet=True)
    cfg["experiment"] = "sweep"
    p0 = cfg["packet"]
    if p0.get("beta") is None:
        raise ConfigError("sweep needs packet.beta")
    if cfg["k0_list"] is None and p0.get("k0") is None:
        raise ConfigError("sweep needs k0_list or packet.k0")
    if cfg["gamma_list"] is None and p0.get("gamma") is None:
        raise ConfigError("sweep needs gamma_list or packet.gamma")
    k0_list = _require_numbers(cfg["k0_list"] or [p0["k0"]], "k0_list")
    gamma_list = _require_numbers(cfg["gamma_list"] or [p0["gamma"]],
                                  "gamma_list")
    manifest = RunManifest(cfg["output_dir"], cfg)
    grid_cfg = cfg["grid"] or {k: d for k, (_, d) in _GRID_SCHEMA.items()}
    tasks = []
    idx = 0
    for gamma in gamma_list:
        for k0 in k0_list:
            tasks.append((idx, float(gamma), float(k0), p0["beta"],
                          cfg["envelope"], cfg["with_grid_oracle"], grid_cfg))
            idx += 1
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    rows.sort(key=lambda r: r["idx"])    # deterministic assembly
    table = [[r.get(c) for c in _SWEEP_COLS] for r in rows]
    path = write_csv(Path(cfg["output_dir"]) / "sweep.csv", _SWEEP_COLS, table,
                     {"envelope": cfg["envelope"], "beta": p0["beta"]})
    manifest.register(path)
    manifest.finalize({"n_points": len(rows),
                       "n_failed": sum(1 for r in rows if r["error"])})
    return 0


# ---------------------------------------------------------------------------
# singularity scan
# ---------------------------------------------------------------------------

def cmd_singularity_scan(args) -> int:
    cfg = _resolve(args, need_packet=True)
    cfg["experiment"] = "singularity-scan"
    gamma = cfg["packet"].get("gamma")
    if gamma is None:
        raise ConfigError("singularity-scan needs packet.gamma")
    ip = InteractionParams(gamma=gamma)
    k_range = cfg["k_range"] or [-2.0 * gamma, 2.0 * gamma]
    if len(k_range) != 2:
        raise ConfigError(f"k_range must be [lo, hi], got {k_range}")
    lo, hi = _require_numbers(k_range, "k_range")
    if not lo < hi:
        raise ConfigError(f"bad k_range [{lo}, {hi}]")
    manifest = RunManifest(cfg["output_dir"], cfg)
    ks = np.linspace(lo, hi, cfg["k_points"])
    rows = [(k, singularity_residual(float(k), ip, r_probe=10.0)) for k in ks]
    path = write_csv(Path(cfg["output_dir"]) / "singularity_scan.csv",
                     ["k", "residual"], rows, {"gamma": gamma, "r_probe": 10.0})
    manifest.register(path)
    Ks = np.linspace(-10.0, 10.0, 81)
    rows = [(K, singular_energy(float(K), gamma)) for K in Ks]
    path = write_csv(Path(cfg["output_dir"]) / "singular_energies.csv",
                     ["K", "E_ss"], rows, {"gamma": gamma})
    manifest.register(path)
    kmin = min(((k, res) for k, res in
                [(float(k), singularity_residual(float(k), ip, 10.0)) for k in ks]),
               key=lambda kr: kr[1])
    manifest.finalize({"residual_minimum_at_k": kmin[0],
                       "residual_minimum": kmin[1]})
    return 0


# ---------------------------------------------------------------------------
# eval / convergence
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    cfg = _resolve(args, need_packet=True)
    p = _packet_from(cfg["packet"])
    kind = EnvelopeKind.from_label(cfg["envelope"])
    r, t = args.r, args.t
    rel = propagate.rel_wave(r, t, p, kind)
    com = propagate.com_packet(args.R, t, p)
    qv, qe = quadrature.phi_by_quadrature(r, t, p, kind)
    out = {
        "r": r, "t": t, "R": args.R,
        "rel_wave": {"re": rel.real, "im": rel.imag},
        "com_packet": {"re": com.real, "im": com.imag},
        "quadrature": {"re": qv.real, "im": qv.imag, "error": qe},
        "pointwise_mismatch": abs(rel - qv),
    }
    if args.x1 is not None and args.x2 is not None and p.gamma > 0.0:
        from .eigen import psi_antisymmetric_raw, psi_symmetric_raw
        K = args.K if args.K is not None else p.K0
        k = args.k if args.k is not None else p.k0
        sym = psi_symmetric_raw(K, k, args.x1, args.x2, p.gamma)
        anti = psi_antisymmetric_raw(K, k, args.x1, args.x2)
        ip = InteractionParams(gamma=p.gamma)
        out["eigen"] = {
            "K": K, "k": k, "x1": args.x1, "x2": args.x2,
            "psi_symmetric": {"re": sym.real, "im": sym.imag},
            "psi_antisymmetric": {"re": anti.real, "im": anti.imag},
            "singularity_residual": singularity_residual(k, ip, r_probe=10.0),
            "energy": k * k + K * K / 4.0,
        }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_convergence(args) -> int:
    cfg = _resolve(args, need_packet=True)
    cfg["experiment"] = "convergence"
    p = _packet_from(cfg["packet"])
    kind = EnvelopeKind.from_label(cfg["envelope"])
    manifest = RunManifest(cfg["output_dir"], cfg)
    base = _grid_spec_from(cfg)
    t_fin = cfg["t_final"] or 2.0 * p.r0 / p.k0
    rep = gridmod.convergence_report(p, base, t_fin, n_rungs=args.rungs,
                                     kind=kind, workers=cfg["workers"])
    rows = [(r.spec_N, r.h, r.a, r.dt, r.value, r.runtime_s)
            for r in rep["rungs"]]
    path = write_csv(Path(cfg["output_dir"]) / "convergence.csv",
                     ["N", "h", "a", "dt", "value", "runtime_s"], rows,
                     {"observed_order": rep["observed_order"],
                      "extrapolated": rep["extrapolated"],
                      "monotone": rep["monotone"]})
    manifest.register(path)
    manifest.finalize({"observed_order": rep["observed_order"],
                       "extrapolated": rep["extrapolated"]})
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pairloss",
        description="Collision experiments for a particle pair with an "
                    "imaginary contact interaction.")
    ap.add_argument("--config", default=None, help="JSON config file")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--workers", type=int, default=None,
                    help="parallel sweep workers")
    ap.add_argument("--with-grid-oracle", action="store_true",
                    help="also run the (slow) 2D grid oracle")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("fig1", help="plain-envelope collision profiles")
    sub.add_parser("fig2", help="node-excited collision profiles")
    sub.add_parser("sweep", help="survival-probability sweep")
    sub.add_parser("singularity-scan", help="boundary-residual scan over k")
    ev = sub.add_parser("eval", help="pointwise debug evaluation")
    ev.add_argument("--r", type=float, required=True)
    ev.add_argument("--t", type=float, required=True)
    ev.add_argument("--R", type=float, default=0.0)
    ev.add_argument("--x1", type=float, default=None,
                    help="with --x2: also evaluate the eigenfunctions here")
    ev.add_argument("--x2", type=float, default=None)
    ev.add_argument("--K", type=float, default=None,
                    help="eigenfunction momenta (default K0, k0)")
    ev.add_argument("--k", type=float, default=None)
    cv = sub.add_parser("convergence", help="grid refinement ladder")
    cv.add_argument("--rungs", type=int, default=3)
    return ap


_COMMANDS = {
    "fig1": cmd_fig1, "fig2": cmd_fig2, "sweep": cmd_sweep,
    "singularity-scan": cmd_singularity_scan, "eval": cmd_eval,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(f"numerical accuracy failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
