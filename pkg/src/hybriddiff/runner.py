import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Scenario execution
#
# run_family        simulate one family of a scenario and build its RunReport
# run_scenario      every family of a scenario, written to an output directory
#########################################################################################################
from typing import List, Tuple, IO
import csv
import os

from pydantic import BaseModel

from .analysis import build_hybrid_matrices
from .differentiators import Family
from .integrator import TimeSeries, simulate
from .metrics import RunReport, REPORT_COLUMNS, build_report
from .scenario import Scenario

COMPARISON_FILENAME = "comparison.csv"
REPORT_HEADER = "# noise is indexed by integration step: changing dt changes the noise path"

class FamilyRun:
    name: str
    ts: TimeSeries
    report: RunReport

    def __init__(self, *, name:str, ts:TimeSeries, report:RunReport):
        self.name = name
        self.ts = ts
        self.report = report

    def __repr__(self):
        return f"FamilyRun(name=\"{self.name}\", ts={self.ts!r})"

def certificate_gate(name:str, family:Family, schedule:List[Tuple[float, BaseModel]])->bool:
    if family != Family.HYBRID:
        return True
    ok = True
    for t, params in schedule:
        matrices = build_hybrid_matrices(params)
        if not matrices.positive:
            ok = False
            logger.warning(f"[runner] certificate_gate: {name}: gains active from t={t} fail the certificate: {matrices!r}")
    return ok

def run_family(scenario:Scenario, index:int)->FamilyRun:
    entry = scenario.families[index]
    schedule = scenario.params_at(index)
    certificate_gate(entry.label, entry.family, schedule)

    ts = simulate(entry.family, schedule[0][1], scenario.signal, scenario.noise, scenario.sim_config(index))
    report = build_report(
        entry.label, ts, scenario.metrics,
        params=schedule[-1][1], L2=scenario.signal.L2, eps=scenario.noise.epsilon
    )
    logger.info(f"[runner] run_family: {scenario.name}/{entry.label}: steady e1={report.steady_e1_sup:.4g}, e2={report.steady_e2_sup:.4g}")
    return FamilyRun(name=entry.label, ts=ts, report=report)

def write_report(f:IO[str], scenario:Scenario, report:RunReport):
    print(REPORT_HEADER, file=f)
    print(f"scenario={scenario.name}", file=f)
    f.write(report.to_kv())

def write_comparison(f:IO[str], reports:List[RunReport]):
    writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow(report.to_row())

def run_scenario(scenario:Scenario, out_dir:str)->List[FamilyRun]:
    """
    Writes <name>.csv and <name>.report.txt per family plus comparison.csv into out_dir.
    """
    log_prefix = "[runner] run_scenario"
    os.makedirs(out_dir, exist_ok=True)

    runs = []
    for index in range(len(scenario.families)):
        run = run_family(scenario, index)
        run.ts.save_csv(os.path.join(out_dir, f"{run.name}.csv"))
        with open(os.path.join(out_dir, f"{run.name}.report.txt"), "wt", newline="") as f:
            write_report(f, scenario, run.report)
        runs.append(run)

    with open(os.path.join(out_dir, COMPARISON_FILENAME), "wt", newline="") as f:
        write_comparison(f, [run.report for run in runs])
    logger.info(f"{log_prefix}: {scenario.name}: {len(runs)} families written to {out_dir}")
    return runs
