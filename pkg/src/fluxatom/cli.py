"""Command-line entry point.

    fluxatom <command> --config <path> [--out <path>] [--format csv|json] [--seed N] [--quiet]

Data goes to ``--out`` (or stdout), diagnostics to stderr. Exit status is 0 on
success, 2 when the input is rejected and 3 when an internal identity check
fails.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Callable

import numpy as np

from .corpus import random_corpus, random_spherical_corpus
from .dynamics import BlochState, evolve, flux_ratio, photon_count, steady_state
from .errors import ConfigError, IdentityMismatch, ModelError, NumericalError, SchemaError
from .io import COMMANDS, ResultTable, RunConfig, load_config, provenance, write_tables
from .jumps import compare_with_rk4
from .model import g_system
from .spherical import (
    angular_integral,
    differential_cross_section,
    differential_cross_section_trace,
    lamp_shift,
    lineshape_scan,
    spherical_scalars,
    steady_state_spherical,
    total_cross_section,
)

log = logging.getLogger("fluxatom")

EXIT_OK, EXIT_INVALID, EXIT_IDENTITY = 0, 2, 3


class CheckFailed(Exception):
    """A report-style command found a residual above its tolerance."""


def _initial(cfg: RunConfig) -> BlochState:
    init = cfg.run.initial
    if init == "ground":
        return BlochState.ground()
    if init == "excited":
        return BlochState.excited()
    try:
        return BlochState(init["u"], init.get("v", 0.0))
    except ModelError as exc:
        raise SchemaError(f"run.initial: {exc}") from exc


def _t_end(cfg: RunConfig, default_rates: float) -> float:
    if cfg.run.t_end is not None:
        return cfg.run.t_end
    return 20.0 / default_rates


# -- commands ---------------------------------------------------------------


def cmd_steady(cfg: RunConfig, seed):
    if cfg.model_kind == "generic":
        model, drive = cfg.build_generic()
        ss = steady_state(model, drive)
        u, v = ss.u_inf, ss.v_inf
        extra = {"closed_form_residual": ("1", ss.closed_form_residual)}
    else:
        sm = cfg.build_spherical()
        u, v = steady_state_spherical(sm)
        extra = {}
    rho = np.array([[u, v], [np.conj(v), 1 - u]])
    cols = {
        "u_inf": ("1", u), "v_inf_re": ("1", v.real), "v_inf_im": ("1", v.imag),
        "rho_pp": ("1", rho[0, 0].real), "rho_pm_re": ("1", rho[0, 1].real),
        "rho_pm_im": ("1", rho[0, 1].imag), "rho_mm": ("1", rho[1, 1].real),
    }
    cols.update(extra)
    return [ResultTable.from_columns("steady", cols)]


def cmd_evolve(cfg: RunConfig, seed):
    model, drive = cfg.build_generic()
    traj = evolve(model, drive, _initial(cfg), _t_end(cfg, model.alpha_norm2), cfg.run.h)
    return [ResultTable.from_columns("trajectory", {
        "t": ("time", traj.times), "u": ("1", traj.u),
        "v_re": ("1", traj.v.real), "v_im": ("1", traj.v.imag),
    })]


def cmd_count(cfg: RunConfig, seed):
    model, drive = cfg.build_generic()
    rec = photon_count(model, drive, _initial(cfg), _t_end(cfg, model.alpha_norm2), cfg.run.h)
    return [ResultTable.from_columns("counting", {
        "t": ("time", rec.times), "u": ("1", rec.u),
        "v_re": ("1", rec.v.real), "v_im": ("1", rec.v.imag),
        "N_mean": ("photons", rec.N_mean), "emission_rate": ("photons/time", rec.emission_rate),
        "scattered_rate": ("photons/time", rec.scattered_rate), "Y": ("photons", rec.Y),
    })]


def cmd_flux(cfg: RunConfig, seed):
    model, drive = cfg.build_generic()
    t_end = _t_end(cfg, model.alpha_norm2)
    times, ratio = flux_ratio(model, drive, _initial(cfg), t_end, cfg.run.h)
    bound = 2 / (drive.flux * times)
    return [ResultTable.from_columns("flux", {
        "t": ("time", times), "ratio": ("1", ratio),
        "deviation": ("1", ratio - 1), "bound": ("1", bound),
    })]


def _scan_grid(cfg: RunConfig, sm) -> tuple[float, float, int]:
    scan = cfg.drive.omega_scan
    if scan is None:
        raise SchemaError("lineshape needs drive.omega_scan")
    if scan.mode == "omega":
        return scan.min, scan.max, scan.points
    sc = spherical_scalars(sm)
    centre = sm.omega0 + sc.epsilon
    lo, hi = centre + scan.min * sc.Gamma / 2, centre + scan.max * sc.Gamma / 2
    if lo <= 0:
        raise SchemaError("drive.omega_scan: x-range reaches omega <= 0")
    return lo, hi, scan.points


def cmd_lineshape(cfg: RunConfig, seed):
    sm = cfg.build_spherical(omega=cfg.spherical.omega0)
    lo, hi, n = _scan_grid(cfg, sm)
    scan = lineshape_scan(sm, lo, hi, n)
    table = ResultTable.from_columns("lineshape", {
        "omega": ("rad/time", scan.omega), "delta_omega": ("rad/time", scan.delta_omega),
        "x": ("1", scan.x), "sigma_hat": ("1", scan.sigma_hat), "sigma_tot": ("area", scan.sigma_tot),
        "u_inf": ("1", scan.u_inf), "v_inf_re": ("1", scan.v_inf.real), "v_inf_im": ("1", scan.v_inf.imag),
    })
    line = scan.line
    summary = ResultTable.from_columns("summary", {
        "A": ("1", line.A), "B": ("1", line.B), "C": ("1", line.C),
        "Gamma": ("rate", line.Gamma), "epsilon": ("rad/time", line.epsilon),
        "resonance_omega": ("rad/time", line.resonance_omega),
        "peak_omega": ("rad/time", scan.peak_omega), "steepest_omega": ("rad/time", scan.steepest_omega),
        "positive": ("bool", float(scan.positive)), "max_fano_residual": ("1", scan.max_fano_residual),
    })
    if not scan.positive:
        log.warning("positivity certificate fails: sigma_hat may become negative for some x")
    return [table, summary]


def cmd_diffxs(cfg: RunConfig, seed):
    sm = cfg.build_spherical()
    grid = cfg.run.theta
    if grid.points < 1 or not 0 < grid.min <= grid.max <= np.pi:
        raise SchemaError("run.theta must satisfy 0 < min <= max <= pi")
    theta = np.linspace(grid.min, grid.max, grid.points)
    try:
        sigma = np.atleast_1d(differential_cross_section(sm, theta))
    except ModelError as exc:
        raise SchemaError(f"run.theta: {exc}") from exc
    prefactor = (2 * np.pi / 3) * (sm.omega / (2 * np.pi * sm.c_light)) ** 2
    return [ResultTable.from_columns("diffxs", {
        "theta": ("rad", theta), "sigma": ("area/sr", sigma), "sigma_hat": ("1/sr", prefactor * sigma),
    })]


def cmd_oracle(cfg: RunConfig, seed):
    model, drive = cfg.build_generic()
    t_end = cfg.run.t_end if cfg.run.t_end is not None else 3.0 / model.alpha_norm2
    rep = compare_with_rk4(
        model, drive, _initial(cfg), t_end, cfg.run.n_traj, 0 if seed is None else seed,
        cfg.run.dt, cfg.run.n_samples,
    )
    table = ResultTable.from_columns("oracle", {
        "t": ("time", rep.times), "u_rk4": ("1", rep.u_rk4), "u_mc": ("1", rep.u_mc),
        "trace_distance": ("1", rep.trace_distance), "N_rk4": ("photons", rep.N_rk4),
        "N_mc": ("photons", rep.N_mc), "bound": ("1", rep.bound),
    })
    log.info("oracle: max trace distance %.3e, max count error %.3e, bound %.3e",
             rep.trace_distance.max(), rep.count_error.max(), rep.bound)
    if not rep.passed:
        return [table], CheckFailed("jump Monte Carlo and RK4 disagree beyond 4/sqrt(n_traj)")
    return [table]


def _generic_identities(model, drive) -> dict[str, float]:
    gs = g_system(model, drive, check=False)
    det = np.linalg.det(gs.G).real
    ss = steady_state(model, drive)
    rec = photon_count(model, drive, BlochState.excited(), 20 / model.alpha_norm2)
    return {
        "det_G": abs(det - gs.det_G_closed) / abs(gs.det_G_closed),
        "gamma2_forms": abs(gs.Gamma2 - gs.Gamma2_alt) / gs.Gamma2,
        "steady_closed_form": ss.closed_form_residual,
        "balance_Y": float(np.abs(rec.Y).max()),
        "det_G_sign": float(det >= 0 or gs.Gamma2 <= 0),
    }


def _spherical_identities(sm) -> dict[str, float]:
    tcs = total_cross_section(sm)
    theta = np.linspace(0.05, np.pi, 25)
    direct = differential_cross_section(sm, theta)
    trace = np.array([differential_cross_section_trace(sm, t) for t in theta])
    integ = angular_integral(sm)
    eps2 = lamp_shift(replace(sm, eta=2 * sm.eta))
    return {
        "fano_reduction": tcs.fano_residual,
        "diffxs_trace_form": float(np.max(np.abs(direct - trace)) / max(np.max(np.abs(trace)), 1e-300)),
        "angular_integral": abs(integ - tcs.sigma_tot) / tcs.sigma_tot,
        "lamp_shift_scaling": abs(eps2 - 4 * lamp_shift(sm)),
    }


GENERIC_TOL = {"det_G": 1e-10, "gamma2_forms": 1e-10, "steady_closed_form": 1e-10, "balance_Y": 1e-6, "det_G_sign": 0.5}
SPHERICAL_TOL = {"fano_reduction": 1e-10, "diffxs_trace_form": 1e-10, "angular_integral": 1e-10, "lamp_shift_scaling": 1e-12}


def cmd_validate(cfg: RunConfig, seed):
    if cfg.model_kind == "generic":
        cases = [cfg.build_generic()] + random_corpus(cfg.run.corpus_size, 0 if seed is None else seed)
        residuals = [_generic_identities(m, d) for m, d in cases]
        tol = GENERIC_TOL
    else:
        cases = [cfg.build_spherical()] + random_spherical_corpus(cfg.run.corpus_size, 0 if seed is None else seed)
        residuals = [_spherical_identities(sm) for sm in cases]
        tol = SPHERICAL_TOL
    names = list(tol)
    worst = np.array([max(r[k] for r in residuals) for k in names])
    limits = np.array([tol[k] for k in names])
    table = ResultTable(
        "validate",
        ("identity_index", "max_residual", "tolerance", "passed"),
        ("1", "1", "1", "bool"),
        np.column_stack([np.arange(len(names)), worst, limits, worst <= limits]),
    )
    for k, w, lim in zip(names, worst, limits):
        log.info("validate %-20s max residual %.3e (tolerance %.0e) over %d models", k, w, lim, len(cases))
    log.info("identity_index: %s", ", ".join(f"{i}={k}" for i, k in enumerate(names)))
    if np.any(worst > limits):
        return [table], CheckFailed("identity residual above tolerance")
    return [table]


HANDLERS: dict[str, Callable] = {
    "steady": cmd_steady, "evolve": cmd_evolve, "count": cmd_count, "flux": cmd_flux,
    "lineshape": cmd_lineshape, "diffxs": cmd_diffxs, "oracle": cmd_oracle, "validate": cmd_validate,
}


def _resolve_seed(cli_seed: int | None, cfg: RunConfig) -> int | None:
    if cli_seed is not None:
        return cli_seed
    if cfg.run.seed is not None:
        return cfg.run.seed
    env = os.environ.get("FLUXATOM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SchemaError(f"FLUXATOM_SEED must be an integer, got {env!r}") from None
    return None


def dispatch(command: str, cfg: RunConfig, out=None, fmt=None, seed=None, stream=None) -> int:
    """Run ``command`` on a parsed config and write its tables. Returns the exit code."""
    stream = stream or sys.stdout
    try:
        seed = _resolve_seed(seed, cfg)
        result = HANDLERS[command](cfg, seed)
    except (ConfigError, ModelError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID
    except (IdentityMismatch, NumericalError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_IDENTITY
    failure = None
    if isinstance(result, tuple):
        result, failure = result
    write_tables(result, provenance(cfg, command, seed), fmt or cfg.run.format, out or cfg.run.output, stream)
    if failure is not None:
        log.error("%s", failure)
        return EXIT_IDENTITY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluxatom", description="Two-level photoemissive source laboratory")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output path (default: run.output or stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default=None)
    ap.add_argument("--seed", type=int, default=None, help="overrides run.seed and FLUXATOM_SEED")
    ap.add_argument("--quiet", action="store_true", help="only report errors")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="fluxatom: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID
    if cfg.run.command is not None and cfg.run.command != args.command:
        log.warning("run.command is %r; running %r as requested on the command line", cfg.run.command, args.command)
    return dispatch(args.command, cfg, args.out, args.format, args.seed)


if __name__ == "__main__":
    sys.exit(main())
