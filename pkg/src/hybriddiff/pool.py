import logging
import logging.config
logger = logging.getLogger(__name__)

#########################################################################################################
# Fixed-size process pool for independent jobs
#
# A job names its entry point as "module:function" plus keyword args. Jobs never raise into the
# collector: a failed job comes back as a JobResult carrying exception_type / exception_message.
# Results are returned in submission order; max_workers <= 1 runs every job inline.
#########################################################################################################
from typing import List, Optional, Any
from datetime import datetime
import importlib
import multiprocessing
import os

class JobStartInfo:
    entry: str
    name: str
    args: dict

    def __init__(self, *, entry:str, name:str, args:dict=dict()):
        self.entry = entry
        self.name = name
        self.args = args

    def __repr__(self):
        return f"JobStartInfo(entry=\"{self.entry}\", name=\"{self.name}\")"

class JobResult:
    name: str
    value: Any                              # return value of the entry, None on failure
    duration: float                         # seconds
    exception_message: Optional[str]        # exception message
    exception_type: Optional[str]           # exception class name

    def __init__(
        self,
        *,
        name:str,
        value:Any=None,
        duration:float=0.0,
        exception_message:Optional[str]=None,
        exception_type:Optional[str]=None
    ):
        self.name = name
        self.value = value
        self.duration = duration
        self.exception_message = exception_message
        self.exception_type = exception_type

    @property
    def succeeded(self)->bool:
        return self.exception_type is None

    def __repr__(self):
        return f"JobResult(name=\"{self.name}\", duration={self.duration:.3f}, exception_type={self.exception_type}, exception_message={self.exception_message})"

def get_method(method_name:str):
    module_name, entry_name = method_name.split(":")
    module = importlib.import_module(module_name)
    entry = getattr(module, entry_name)
    return entry

def job_main(job_start_info:JobStartInfo)->JobResult:
    log_prefix = f"[pool] {job_start_info.name}"
    begin_time = datetime.utcnow()
    try:
        job_method = get_method(job_start_info.entry)
        value = job_method(**job_start_info.args)
        duration = (datetime.utcnow() - begin_time).total_seconds()
        logger.debug(f"{log_prefix}: {job_start_info.entry} succeeded in {duration:.3f}s")
        return JobResult(name=job_start_info.name, value=value, duration=duration)
    except Exception as e:
        logger.exception(f"{log_prefix}: {job_start_info.entry} failed")
        return JobResult(
            name=job_start_info.name,
            duration=(datetime.utcnow() - begin_time).total_seconds(),
            exception_message=str(e),
            exception_type=type(e).__name__
        )

def default_workers(n_jobs:int)->int:
    return max(1, min(os.cpu_count() or 1, n_jobs))

def _worker_init(logging_config:Optional[dict]):
    if logging_config is not None:
        logging.config.dictConfig(logging_config)

def run_jobs(
    job_start_infos:List[JobStartInfo],
    *,
    max_workers:int=1,
    logging_config:Optional[dict]=None
)->List[JobResult]:
    log_prefix = "[pool] run_jobs"

    # make sure job names are unique
    if len(set([job_start_info.name for job_start_info in job_start_infos])) < len(job_start_infos):
        raise ValueError("Duplicate job names detected")

    if max_workers <= 1 or len(job_start_infos) <= 1:
        logger.debug(f"{log_prefix}: running {len(job_start_infos)} jobs inline")
        return [job_main(job_start_info) for job_start_info in job_start_infos]

    processes = min(max_workers, len(job_start_infos))
    logger.debug(f"{log_prefix}: running {len(job_start_infos)} jobs on {processes} processes")
    with multiprocessing.Pool(processes=processes, initializer=_worker_init, initargs=(logging_config,)) as pool:
        return pool.map(job_main, job_start_infos)
