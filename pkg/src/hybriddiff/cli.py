import logging
import logging.config
logger = logging.getLogger(__name__)

#########################################################################################################
# Command line front end
#
# hybriddiff run      <scenario>      simulate every family, write CSVs + reports + comparison table
# hybriddiff certify  <params>        certificate matrices, bounds and linearization tables
# hybriddiff freq     <params>        frequency response and describing-function tables
# hybriddiff sweep    <scenario>      one run per value of --axis, aggregated into sweep.csv
#########################################################################################################
from typing import Optional, List, IO
import argparse
import csv
import os
import sys
from copy import deepcopy

import numpy as np

from .analysis import build_hybrid_matrices, build_second_order_certificate, lambda_min_sym, \
    theorem1_report, theorem2_report, linear_decay, linear_freq_response, linearize_levant, \
    linearize_linear, linearize_hybrid, BoundReport
from .common_utils import num2str, parse_grid
from .differentiators import Family
from .errors import ScenarioError, NonFiniteState, WindowOutOfRange, PreconditionError
from .runner import run_scenario, write_comparison
from .scenario import AnalysisConfig, Scenario, load_scenario, load_analysis_config, default_scenario, validate_model
from .sweep import run_sweep, write_sweep, scaling_from_rows

EXIT_OK             = 0
EXIT_VALIDATION     = 2
EXIT_NON_FINITE     = 3
EXIT_IO             = 4
EXIT_HYPOTHESIS     = 5

FREQ_COLUMNS = ["omega", "mag_track", "mag_deriv", "L_track_dB", "L_deriv_dB"]
LINEARIZATION_COLUMNS = ["family", "amplitude", "omega_n", "zeta"]

LOG_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s - %(process)d - %(name)s - %(levelname)s - %(message)s"
        }
    },
    "handlers": {
        "consoleHandler": {
            "class": "logging.StreamHandler",
            "level": "WARNING",     # will override
            "formatter": "standard",
            "stream": "ext://sys.stderr"
        }
    },
    "root": {
        "handlers": ["consoleHandler"],
        "level": "DEBUG",
    }
}

FILE_HANDLER = {
    "class": "logging.handlers.TimedRotatingFileHandler",
    "level": "DEBUG",
    "formatter": "standard",
    "filename": None,    # will override
    "interval": 1,
    "when": "midnight"
}

def get_logging_config(log_level:str, log_filename:Optional[str])->dict:
    logging_config = deepcopy(LOG_CONFIG)
    logging_config["handlers"]["consoleHandler"]["level"] = log_level
    if log_filename is not None:
        logging_config["handlers"]["fileHandler"] = deepcopy(FILE_HANDLER)
        logging_config["handlers"]["fileHandler"]["filename"] = log_filename
        logging_config["root"]["handlers"].append("fileHandler")
    return logging_config

####################################################################
# Entry
####################################################################
def cli_main(argv:Optional[List[str]]=None)->int:
    parser = argparse.ArgumentParser(
        description='Simulate, certify and compare differentiators.'
    )
    parser.add_argument(
        "action", type=str, help="Specify action",
        choices=['run', 'certify', 'freq', 'sweep'],
        nargs=1
    )
    parser.add_argument(
        "target", type=str, nargs="?", default=None,
        help="scenario / parameter file, or the name of a bundled one"
    )
    parser.add_argument("-o", "--out-dir", type=str, default="out", help="output directory")
    parser.add_argument("--seed-override", type=int, default=None, help="replace noise.seed")
    parser.add_argument("--dt-override", type=float, default=None, help="replace sim.dt")
    parser.add_argument("--print-defaults", action="store_true", help="print a complete default scenario and exit")
    parser.add_argument("--family", type=str, choices=[family.value for family in Family], default=None, help="run only families of this kind")
    parser.add_argument("--format", type=str, choices=['csv', 'kv'], default="kv", help="stdout report format")
    parser.add_argument("--axis", type=str, default=None, help="sweep: dotted parameter path, e.g. noise.epsilon")
    parser.add_argument("--values", type=str, default=None, help="sweep: value grid, e.g. 0.2,0.1,0.05 or logspace:1e-3:1e-1:5")
    parser.add_argument("--grid", type=str, default=None, help="freq: omega grid, default 0.01..100 x omega_n")
    parser.add_argument("--amplitudes", type=str, default=None, help="certify/freq: amplitude grid for linearization tables")
    parser.add_argument("--workers", type=int, default=None, help="sweep: number of worker processes, default min(cpu count, values), 1 runs inline")
    parser.add_argument("--log-level", type=str, default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-file", type=str, default=None, help="also log to a daily rotated file")
    args = parser.parse_args(argv)
    logging_config = get_logging_config(args.log_level, args.log_file)
    logging.config.dictConfig(logging_config)

    action = args.action[0]
    try:
        if args.print_defaults:
            sys.stdout.write(default_scenario().to_yaml())
            return EXIT_OK
        if args.target is None:
            raise ScenarioError("missing scenario or parameter file", path="target")
        if action == "run":
            return cli_run(args)
        elif action == "certify":
            return cli_certify(args)
        elif action == "freq":
            return cli_freq(args)
        elif action == "sweep":
            return cli_sweep(args, logging_config)
    except (ScenarioError, WindowOutOfRange, PreconditionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonFiniteState as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NON_FINITE
    except OSError as e:
        print(f"error: {e.filename}: {e.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK

def _parse_grid(option:str, grid_str:str)->List[float]:
    try:
        return parse_grid(grid_str)
    except ValueError:
        raise ScenarioError(f"cannot parse grid \"{grid_str}\"", path=option)

def _load_scenario(args:argparse.Namespace)->Scenario:
    scenario = load_scenario(args.target)
    if args.seed_override is not None or args.dt_override is not None:
        scenario = scenario.with_overrides(seed=args.seed_override, dt=args.dt_override)
    if args.family is not None:
        scenario = scenario.select_family(Family(args.family))
    return scenario

def _load_analysis_config(args:argparse.Namespace)->AnalysisConfig:
    cfg = load_analysis_config(args.target)
    if args.amplitudes is not None:
        cfg = validate_model(AnalysisConfig, {**cfg.model_dump(), "amplitudes": _parse_grid("amplitudes", args.amplitudes)})
    return cfg

####################################################################
# run
####################################################################
def cli_run(args:argparse.Namespace)->int:
    scenario = _load_scenario(args)
    runs = run_scenario(scenario, args.out_dir)
    reports = [run.report for run in runs]
    if args.format == "csv":
        write_comparison(sys.stdout, reports)
    else:
        for report in reports:
            print(f"[{report.name}]")
            sys.stdout.write(report.to_kv())
    return EXIT_OK

####################################################################
# sweep
####################################################################
def cli_sweep(args:argparse.Namespace, logging_config:dict)->int:
    scenario = _load_scenario(args)
    if args.axis is None:
        raise ScenarioError("sweep needs --axis", path="axis")
    values = _parse_grid("values", args.values or "")
    rows = run_sweep(scenario, args.axis, values, max_workers=args.workers, logging_config=logging_config)

    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "sweep.csv"), "wt", newline="") as f:
        write_sweep(f, rows)
    write_sweep(sys.stdout, rows)

    if args.axis.endswith("epsilon"):
        for entry in scenario.families:
            try:
                scaling = scaling_from_rows(rows, entry.label)
            except PreconditionError as e:
                logger.warning(f"[cli] sweep: {entry.label}: no exponent fit: {e}")
                continue
            print(f"exponents[{entry.label}]: e1={scaling.exponent_e1:.4f} e2={scaling.exponent_e2:.4f}")
    return EXIT_OK

####################################################################
# certify
####################################################################
def format_matrix(name:str, m:np.ndarray)->str:
    rows = ["[" + ", ".join(f"{v:12.6g}" for v in row) + "]" for row in np.atleast_2d(m)]
    return f"{name} =\n" + "\n".join(f"    {row}" for row in rows)

def format_vector(name:str, v:np.ndarray)->str:
    return f"{name} = [" + ", ".join(num2str(x) for x in v) + "]"

def print_bound(f:IO[str], report:BoundReport):
    print(f"{report.name}: bound={num2str(report.value)} flag={report.flag}", file=f)
    for failed in report.failed:
        print(f"    failed: {failed}", file=f)
    if report.psi1 is not None:
        print(f"    psi1={num2str(report.psi1)} psi2={num2str(report.psi2)}", file=f)

def cli_certify(args:argparse.Namespace)->int:
    cfg = _load_analysis_config(args)
    if cfg.hybrid is None:
        raise ScenarioError("certify needs hybrid params", path="hybrid")
    out = sys.stdout
    ok = True
    p = cfg.hybrid

    print(f"hybrid: k1={num2str(p.k1)} k2={num2str(p.k2)} k3={num2str(p.k3)} k4={num2str(p.k4)} alpha={num2str(p.alpha)}", file=out)
    print(f"L2={num2str(cfg.L2)} epsilon={num2str(cfg.epsilon)}", file=out)
    mats = build_hybrid_matrices(p)
    for name in ("Pi", "Omega1", "Omega2"):
        print(format_matrix(name, getattr(mats, name)), file=out)
    print(format_vector("Gamma1", mats.Gamma1), file=out)
    print(format_vector("Gamma2", mats.Gamma2), file=out)
    print(f"lambda_min(Pi)={num2str(mats.lambda_min_Pi)}", file=out)
    print(f"lambda_max(Pi)={num2str(mats.lambda_max_Pi)}", file=out)
    print(f"lambda_min(Omega1)={num2str(mats.lambda_min_Omega1)}", file=out)
    print(f"lambda_min(Omega2)={num2str(mats.lambda_min_Omega2)}", file=out)
    if not mats.positive:
        ok = False
        print("certificate: FAILED-HYPOTHESIS (matrices not positive definite)", file=out)

    t1 = theorem1_report(p, cfg.L2)
    t2 = theorem2_report(p, cfg.L2, cfg.epsilon)
    print_bound(out, t1)
    print_bound(out, t2)
    ok = ok and t1.hypothesis_ok and t2.hypothesis_ok

    if cfg.second_order is not None:
        so = cfg.second_order
        cert = build_second_order_certificate(so.k1, so.k2, so.alpha)
        print(f"second_order: k1={num2str(so.k1)} k2={num2str(so.k2)} alpha={num2str(so.alpha)} theta={num2str(cert.theta)}", file=out)
        print(format_matrix("P", cert.P), file=out)
        print(format_matrix("Q", cert.Q), file=out)
        print(f"lambda_min(P)={num2str(lambda_min_sym(cert.P))} lambda_min(Q)={num2str(lambda_min_sym(cert.Q))}", file=out)
        ok = ok and cert.positive

    if cfg.linear is not None:
        decay = linear_decay(cfg.linear)
        print(f"linear: a1={num2str(cfg.linear.a1)} a2={num2str(cfg.linear.a2)} tau={num2str(cfg.linear.tau)}", file=out)
        print(f"    lambda={num2str(decay.lambda_)} sigma1={num2str(decay.sigma1)} (grid estimate)", file=out)
        print(f"    bound_linear={num2str(decay.steady_bound(cfg.L2))}", file=out)

    print_linearization(out, cfg)
    print(f"result: {'OK' if ok else 'FAILED-HYPOTHESIS'}", file=out)
    return EXIT_OK if ok else EXIT_HYPOTHESIS

####################################################################
# freq
####################################################################
def linearization_rows(cfg:AnalysisConfig)->List[dict]:
    rows = []
    for amplitude in cfg.amplitudes:
        if cfg.levant is not None:
            r = linearize_levant(cfg.levant, amplitude)
            rows.append({"family": "levant", "amplitude": amplitude, "omega_n": r.omega_n, "zeta": r.zeta})
        if cfg.hybrid is not None:
            r = linearize_hybrid(cfg.hybrid, amplitude)
            rows.append({"family": "hybrid", "amplitude": amplitude, "omega_n": r.omega_n, "zeta": r.zeta})
    if cfg.linear is not None:
        r = linearize_linear(cfg.linear)
        rows.append({"family": "linear", "amplitude": None, "omega_n": r.omega_n, "zeta": r.zeta})
    return rows

def write_rows(f:IO[str], columns:List[str], rows:List[dict]):
    writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: v if isinstance(v, str) else num2str(v) for k, v in row.items()})

def print_linearization(f:IO[str], cfg:AnalysisConfig):
    rows = linearization_rows(cfg)
    if rows:
        print("linearization:", file=f)
        write_rows(f, LINEARIZATION_COLUMNS, rows)

def cli_freq(args:argparse.Namespace)->int:
    cfg = _load_analysis_config(args)
    os.makedirs(args.out_dir, exist_ok=True)

    if cfg.linear is not None:
        omega_n = linearize_linear(cfg.linear).omega_n
        grid_str = args.grid if args.grid is not None else f"logspace:{0.01 * omega_n!r}:{100.0 * omega_n!r}:41"
        grid = _parse_grid("grid", grid_str)
        if len(grid) < 2:
            raise ScenarioError("frequency grid needs at least 2 points", path="grid")
        if any(not omega > 0 for omega in grid):
            raise ScenarioError("frequencies must be positive", path="grid")
        rows = [{"omega": omega, **linear_freq_response(cfg.linear, omega)._asdict()} for omega in grid]
        with open(os.path.join(args.out_dir, "freq_linear.csv"), "wt", newline="") as f:
            write_rows(f, FREQ_COLUMNS, rows)
        write_rows(sys.stdout, FREQ_COLUMNS, rows)

    rows = linearization_rows(cfg)
    with open(os.path.join(args.out_dir, "linearization.csv"), "wt", newline="") as f:
        write_rows(f, LINEARIZATION_COLUMNS, rows)
    write_rows(sys.stdout, LINEARIZATION_COLUMNS, rows)
    return EXIT_OK
