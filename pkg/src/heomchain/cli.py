"""Command-line front end: decompose, spectrum, dynamics, scan, oracle.

Every subcommand reads one YAML configuration, applies any flag
overrides, and writes deterministic files into the output directory:
comma-separated values for series and tables, plus one JSON summary per
run.  Numbers are written with full round-trip precision (``repr``)
and files carry no timestamps, so re-running a configuration produces
byte-identical output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import pathlib
import sys

import numpy as np
import yaml

from .aaa import rwa_correlation_decompose_aaa
from .bath import (
    BathSpec,
    DrudeLorentz,
    Lorentzian,
    lorentzian_zero_t_decompose,
    lorentzian_zero_t_rwa_decompose,
    pade_decompose,
)
from .bmme import build_bmme_generator, markov_rates
from .config import Config, ConfigError, config_hash, parse_config_text, provenance_header
from .dynamics import observables, propagate, two_site_analytic
from .heom import build_heom_generator, build_rwa_heom_generator
from .lattice import LatticeSpec
from .scan import ScanPlan, run_scan
from .spectral import classify_modes, eigendecompose

__all__ = ["main"]


def _fmt(x) -> str:
    """Full round-trip decimal form: float(_fmt(x)) == x."""
    return repr(float(x))


def _bath_spec(cfg: Config) -> BathSpec:
    b = cfg.bath
    if b.kind == "drude-lorentz":
        dens = DrudeLorentz(coupling=b.coupling, cutoff=b.width)
    else:
        dens = Lorentzian(coupling=b.coupling, width=b.width, center=b.center)
    return BathSpec(spectral_density=dens, temperature=b.temperature)


def _decomposition(cfg: Config):
    b = cfg.bath
    if b.scheme == "pade":
        return pade_decompose(b.coupling, b.width, b.temperature, b.l_max)
    if b.scheme == "aaa":
        return rwa_correlation_decompose_aaa(_bath_spec(cfg))
    if cfg.method.name == "rwa-heom":
        return lorentzian_zero_t_rwa_decompose(b.coupling, b.width, b.center)
    return lorentzian_zero_t_decompose(b.coupling, b.width, b.center)


def _generator(cfg: Config):
    lat = LatticeSpec(
        n_sites=cfg.lattice.n_sites,
        spacing=cfg.lattice.spacing,
        coupling_mode=cfg.lattice.coupling_mode,
    )
    name = cfg.method.name
    if name == "bmme":
        rates = markov_rates(_bath_spec(cfg), cfg.lattice.spacing)
        return build_bmme_generator(lat, rates)
    dec = _decomposition(cfg)
    if name == "heom":
        return build_heom_generator(lat, dec, cfg.method.m_max)
    return build_rwa_heom_generator(lat, dec, cfg.method.m_max)


def _initial_state(n_sites: int) -> np.ndarray:
    rho0 = np.zeros((n_sites, n_sites), dtype=complex)
    rho0[-1, -1] = 1.0
    return rho0


def _out_dir(cfg: Config, args) -> pathlib.Path:
    out = pathlib.Path(args.out if args.out is not None else cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path, cfg, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(provenance_header(cfg))
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_json(path, cfg, payload):
    doc = {"config_sha256": config_hash(cfg)}
    doc.update(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_decompose(cfg: Config, args) -> int:
    if cfg.method.name == "bmme":
        raise ValueError(
            "decompose needs a hierarchical method (heom or rwa-heom); "
            "bmme uses the golden-rule rates directly"
        )
    dec = _decomposition(cfg)
    out = _out_dir(cfg, args)
    rows = []
    counts = {}
    for t in dec.terms:
        name = t.channel.name.lower()
        counts[name] = counts.get(name, 0) + 1
        rows.append((
            name,
            _fmt(t.rate.real), _fmt(t.rate.imag),
            _fmt(t.amplitude.real), _fmt(t.amplitude.imag),
        ))
    _write_csv(out / "decompose.csv", cfg,
               ("channel", "rate_re", "rate_im", "amplitude_re", "amplitude_im"),
               rows)
    _write_json(out / "decompose.json", cfg, {
        "scheme": cfg.bath.scheme,
        "kind": dec.kind,
        "n_terms": len(rows),
        "channel_terms": counts,
    })
    print(f"decompose: {len(rows)} terms ({dec.kind}) -> {out / 'decompose.csv'}")
    return 0


def _cmd_spectrum(cfg: Config, args) -> int:
    gen = _generator(cfg)
    es = eigendecompose(gen, method=cfg.run.solver)
    rho0 = _initial_state(cfg.lattice.n_sites)
    report = classify_modes(es, rho0)
    out = _out_dir(cfg, args)

    from .spectral import expansion_coefficients

    coeffs = expansion_coefficients(es, rho0)
    rows = []
    order = np.argsort(-es.eigenvalues.real)
    for i in order:
        lam = es.eigenvalues[i]
        rows.append((
            str(int(i)), _fmt(lam.real), _fmt(lam.imag),
            _fmt(abs(coeffs[i])), report.tags[i],
        ))
    _write_csv(out / "spectrum.csv", cfg,
               ("index", "re", "im", "abs_overlap", "tag"), rows)

    loc = report.localization
    _write_json(out / "spectrum.json", cfg, {
        "dimension": int(gen.matrix.shape[0]),
        "n_modes": int(es.n_modes),
        "lambda_d": {"re": report.dominant_rate.real, "im": report.dominant_rate.imag},
        "tau": report.relaxation_time,
        "already_relaxed": report.already_relaxed,
        "xi": None if loc is None else loc.length,
        "xi_residual": None if loc is None else loc.residual,
        "n_coherent_pairs": len(report.coherent_rates),
    })
    print(f"spectrum: {es.n_modes} modes, tau = {_fmt(report.relaxation_time)} "
          f"-> {out / 'spectrum.csv'}")
    return 0


def _cmd_dynamics(cfg: Config, args) -> int:
    gen = _generator(cfg)
    rho0 = _initial_state(cfg.lattice.n_sites)
    times = np.linspace(0.0, cfg.run.t_max, cfg.run.n_times)
    traj = propagate(gen, rho0, times, rtol=cfg.run.rtol,
                     atol=cfg.run.rtol * 1e-2)
    obs = observables(traj)
    n = cfg.lattice.n_sites
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    columns = (["t"] + [f"pop_{i + 1}" for i in range(n)]
               + [f"abs_coh_{i + 1}_{j + 1}" for i, j in pairs]
               + ["l1_coherence", "gamma", "gamma_bar"])
    rows = []
    for k, t in enumerate(times):
        state = traj.states[k]
        row = [_fmt(t)]
        row += [_fmt(state[i, i].real) for i in range(n)]
        row += [_fmt(abs(state[i, j])) for i, j in pairs]
        row += [_fmt(obs.l1_coherence[k]), _fmt(obs.scaled_rate[k]),
                _fmt(obs.average_rate[k])]
        rows.append(tuple(row))
    out = _out_dir(cfg, args)
    _write_csv(out / "dynamics.csv", cfg, columns, rows)
    _write_json(out / "dynamics.json", cfg, {
        "t_max": cfg.run.t_max,
        "n_times": cfg.run.n_times,
        "max_l1_coherence": float(np.max(obs.l1_coherence)),
        "final_gamma_bar": float(obs.average_rate[-1]),
        "final_populations": [float(traj.states[-1][i, i].real) for i in range(n)],
    })
    print(f"dynamics: {len(times)} steps -> {out / 'dynamics.csv'}")
    return 0


def _cmd_scan(cfg: Config, args) -> int:
    grid = cfg.run.grid
    if grid is None or not grid.methods or not grid.n_values or not grid.couplings:
        raise ValueError(
            "scan needs run.grid with methods, n_values and couplings"
        )
    observables_req = tuple(grid.observables)
    plan = ScanPlan(
        methods=tuple(grid.methods),
        n_values=tuple(grid.n_values),
        couplings=tuple(grid.couplings),
        temperature=cfg.bath.temperature,
        width=cfg.bath.width,
        splitting=cfg.lattice.spacing,
        coupling_mode=cfg.lattice.coupling_mode,
        m_max=cfg.method.m_max,
        l_max=cfg.bath.l_max,
        observables=observables_req,
        convergence=grid.convergence,
        rtol=cfg.run.rtol,
    )
    result = run_scan(plan)
    out = _out_dir(cfg, args)

    def opt(x):
        return "" if x is None else _fmt(x)

    rows = []
    cells_doc = []
    for c in result.cells:
        d = c.deltas
        rows.append((
            c.method, str(c.n_sites), _fmt(c.coupling), str(c.m_max),
            str(c.l_max), str(c.dimension),
            opt(c.tau), opt(None if c.lambda_d is None else c.lambda_d.real),
            opt(None if c.lambda_d is None else c.lambda_d.imag),
            opt(c.xi), opt(c.gamma_bar),
            str(bool(c.converged)).lower(),
            "" if d is None else opt(d.tau_tier),
            "" if d is None else opt(d.tau_terms),
            c.error or "",
        ))
        doc = {
            "method": c.method, "n_sites": c.n_sites, "coupling": c.coupling,
            "m_max": c.m_max, "l_max": c.l_max, "dimension": c.dimension,
            "tau": c.tau, "xi": c.xi, "gamma_bar": c.gamma_bar,
            "lambda_d": (None if c.lambda_d is None
                         else {"re": c.lambda_d.real, "im": c.lambda_d.imag}),
            "converged": bool(c.converged),
            "error": c.error,
        }
        if d is not None:
            doc["deltas"] = {
                "tau_tier": d.tau_tier, "lambda_tier": d.lambda_tier,
                "tau_terms": d.tau_terms, "lambda_terms": d.lambda_terms,
                "note": d.note,
            }
        if c.steady_profile is not None and "profile" in observables_req:
            doc["steady_profile"] = [float(p) for p in c.steady_profile]
        cells_doc.append(doc)

    _write_csv(out / "scan.csv", cfg,
               ("method", "n_sites", "coupling", "m_max", "l_max", "dimension",
                "tau", "lambda_d_re", "lambda_d_im", "xi", "gamma_bar",
                "converged", "delta_tau_tier", "delta_tau_terms", "error"),
               rows)
    _write_json(out / "scan.json", cfg, {"cells": cells_doc})
    n_fail = len(result.failures())
    print(f"scan: {len(result.cells)} cells ({n_fail} failed) -> {out / 'scan.csv'}")
    return 0


def _cmd_oracle(cfg: Config, args) -> int:
    if cfg.lattice.n_sites != 2:
        raise ValueError(
            "oracle compares against the two-site closed form; "
            f"set lattice.n_sites = 2 (got {cfg.lattice.n_sites})"
        )
    if cfg.bath.kind != "lorentzian" or cfg.bath.temperature != 0:
        raise ValueError(
            "oracle needs the zero-temperature Lorentzian bath "
            "(bath.kind = lorentzian, bath.temperature = 0)"
        )
    lat = LatticeSpec(n_sites=2, spacing=cfg.lattice.spacing,
                      coupling_mode=cfg.lattice.coupling_mode)
    dec = lorentzian_zero_t_rwa_decompose(cfg.bath.coupling, cfg.bath.width,
                                          cfg.bath.center)
    gen = build_rwa_heom_generator(lat, dec, cfg.method.m_max)
    alpha, beta = 1.0, 0.0
    rho0 = np.array([[1 - alpha, beta], [np.conj(beta), alpha]], dtype=complex)
    times = np.linspace(0.0, cfg.run.t_max, cfg.run.n_times)
    traj = propagate(gen, rho0, times, rtol=cfg.run.rtol,
                     atol=cfg.run.rtol * 1e-2)
    pop_ref, coh_ref = two_site_analytic(alpha, beta, cfg.bath.coupling,
                                         cfg.bath.width, cfg.bath.center,
                                         times)
    pop_num = traj.states[:, 1, 1].real
    coh_num = traj.states[:, 0, 1]
    dev_pop = float(np.max(np.abs(traj.states[:, 1, 1] - pop_ref)))
    dev_coh = float(np.max(np.abs(coh_num - coh_ref)))

    out = _out_dir(cfg, args)
    rows = [
        (_fmt(t), _fmt(pop_num[k]), _fmt(pop_ref[k].real),
         _fmt(coh_num[k].real), _fmt(coh_num[k].imag),
         _fmt(coh_ref[k].real), _fmt(coh_ref[k].imag))
        for k, t in enumerate(times)
    ]
    _write_csv(out / "oracle.csv", cfg,
               ("t", "pop_numeric", "pop_closed_form",
                "coh_re_numeric", "coh_im_numeric",
                "coh_re_closed_form", "coh_im_closed_form"), rows)
    _write_json(out / "oracle.json", cfg, {
        "max_population_deviation": dev_pop,
        "max_coherence_deviation": dev_coh,
    })
    print(f"oracle: max population deviation {_fmt(dev_pop)}, "
          f"max coherence deviation {_fmt(dev_coh)}")
    return 0


_COMMANDS = {
    "decompose": _cmd_decompose,
    "spectrum": _cmd_spectrum,
    "dynamics": _cmd_dynamics,
    "scan": _cmd_scan,
    "oracle": _cmd_oracle,
}


# ---------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heomchain",
        description="Dissipative-chain generators: build, diagonalize, "
                    "propagate and sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("decompose", "emit the bath-correlation exponential decomposition"),
        ("spectrum", "diagonalize the configured generator and tag modes"),
        ("dynamics", "propagate the configured generator and emit series"),
        ("scan", "run the (method, N, coupling) grid from run.grid"),
        ("oracle", "compare the two-site closed form against the hierarchy"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML configuration path")
        p.add_argument("--out", default=None, help="output directory (overrides run.out_dir)")
        p.add_argument("--m-max", type=int, default=None, help="override method.m_max")
        p.add_argument("--l-max", type=int, default=None, help="override bath.l_max")
        p.add_argument("--rtol", type=float, default=None, help="override run.rtol")
        solver = p.add_mutually_exclusive_group()
        solver.add_argument("--dense", dest="solver", action="store_const",
                            const="dense", help="dense eigensolver")
        solver.add_argument("--iterative", dest="solver", action="store_const",
                            const="iterative", help="sparse shift-invert eigensolver")
        p.set_defaults(solver=None)
        p.add_argument("--full-scale", action="store_true",
                       help="lift the desk-scale guard on hierarchy sizes")
    return parser


def _load_config(args) -> Config:
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh.read())
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"top level must be a mapping, got {type(doc).__name__}")
    # flag overrides are applied to the raw document so that validation
    # (including the full-scale gate) sees the final values
    if args.m_max is not None:
        doc.setdefault("method", {})["m_max"] = args.m_max
    if args.l_max is not None:
        doc.setdefault("bath", {})["l_max"] = args.l_max
    if args.rtol is not None:
        doc.setdefault("run", {})["rtol"] = args.rtol
    if args.solver is not None:
        doc.setdefault("run", {})["solver"] = args.solver
    if args.full_scale:
        doc.setdefault("run", {})["full_scale"] = True
    if args.out is not None:
        doc.setdefault("run", {})["out_dir"] = str(args.out)
    return parse_config_text(yaml.safe_dump(doc))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg, args)
    except Exception as exc:  # structured report, nonzero exit
        print(json.dumps({
            "error": type(exc).__name__,
            "command": args.command,
            "message": str(exc),
        }), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
