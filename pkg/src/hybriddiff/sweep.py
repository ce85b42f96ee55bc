import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Parameter sweeps: one scenario run per value of a numeric field, fanned out over the job pool
#########################################################################################################
from typing import List, Dict, Any, Optional, IO
import csv

from .common_utils import num2str
from .errors import ScenarioError
from .metrics import REPORT_COLUMNS, RunReport, ScalingResult, fit_exponents
from .pool import JobStartInfo, run_jobs, default_workers
from .runner import run_family
from .scenario import Scenario, scenario_from_dict

SWEEP_COLUMNS = ["value"] + REPORT_COLUMNS + ["status", "exception_type", "exception_message"]

class SweepRow:
    value: float
    report: Optional[RunReport]
    exception_type: Optional[str]
    exception_message: Optional[str]

    def __init__(
        self,
        *,
        value:float,
        report:Optional[RunReport]=None,
        exception_type:Optional[str]=None,
        exception_message:Optional[str]=None
    ):
        self.value = value
        self.report = report
        self.exception_type = exception_type
        self.exception_message = exception_message

    @property
    def failed(self)->bool:
        return self.exception_type is not None

    def __repr__(self):
        return f"SweepRow(value={self.value}, report={self.report!r}, exception_type={self.exception_type})"

    def to_row(self)->Dict[str, str]:
        row = {column: "" for column in SWEEP_COLUMNS}
        row["value"] = num2str(self.value)
        if self.report is not None:
            row.update(self.report.to_row())
        row["status"] = "failed" if self.failed else "ok"
        row["exception_type"] = self.exception_type or ""
        row["exception_message"] = self.exception_message or ""
        return row

def sweep_point(*, scenario:Dict[str, Any], axis:str, value:float)->List[Dict[str, Any]]:
    """
    Pool entry: run every family of the scenario with axis set to value.
    """
    point = scenario_from_dict(scenario).with_value(axis, value)
    return [run_family(point, index).report.model_dump() for index in range(len(point.families))]

def run_sweep(
    scenario:Scenario,
    axis:str,
    values:List[float],
    *,
    max_workers:Optional[int]=None,
    logging_config:Optional[dict]=None
)->List[SweepRow]:
    """
    Run the scenario once per value. max_workers defaults to one process per value, capped at the CPU count.
    """
    log_prefix = "[sweep] run_sweep"
    if len(values) == 0:
        raise ScenarioError("empty value list", path="values")
    # resolve the axis up front so a bad path fails before any job starts
    for value in values:
        scenario.with_value(axis, value)

    payload = scenario.to_dict()
    job_start_infos = [
        JobStartInfo(
            entry="hybriddiff.sweep:sweep_point",
            name=f"{axis}={value!r}#{i}",
            args={"scenario": payload, "axis": axis, "value": value}
        )
        for i, value in enumerate(values)
    ]
    if max_workers is None:
        max_workers = default_workers(len(values))
    results = run_jobs(job_start_infos, max_workers=max_workers, logging_config=logging_config)

    rows = []
    for value, result in zip(values, results):
        if not result.succeeded:
            logger.warning(f"{log_prefix}: {axis}={value} failed: {result.exception_type}: {result.exception_message}")
            rows.append(SweepRow(value=value, exception_type=result.exception_type, exception_message=result.exception_message))
            continue
        for report_payload in result.value:
            rows.append(SweepRow(value=value, report=RunReport.model_validate(report_payload)))
    logger.info(f"{log_prefix}: {scenario.name}: {len(values)} values, {sum(1 for row in rows if row.failed)} failed")
    return rows

def write_sweep(f:IO[str], rows:List[SweepRow]):
    writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.to_row())

def scaling_from_rows(rows:List[SweepRow], name:str)->ScalingResult:
    """
    Fit accuracy exponents from a noise.epsilon sweep, for the family named `name`.
    """
    points = [row for row in rows if not row.failed and row.report.name == name]
    return fit_exponents(
        [row.value for row in points],
        [row.report.steady_e1_sup for row in points],
        [row.report.steady_e2_sup for row in points],
    )
