#####################################################
# Common Utilities
#####################################################

from typing import Optional, List
import math

import numpy as np

NUM_FORMAT              = "%.12g"

# Data Conversion tools
def num2str(value:Optional[float])->str:
    if value is None:
        return "n/a"
    return NUM_FORMAT % value

def parse_grid(grid_str:str)->List[float]:
    """
    Parse a grid spec.
    :param grid_str:
        either a comma separated list, e.g. "0.2,0.1,0.05", or
        "logspace:<lo>:<hi>:<count>" / "linspace:<lo>:<hi>:<count>"
    """
    grid_str = grid_str.strip()
    if grid_str == "":
        return []
    for kind, space in (("logspace", np.geomspace), ("linspace", np.linspace)):
        if grid_str.startswith(f"{kind}:"):
            lo, hi, count = grid_str[len(kind) + 1:].split(":")
            return [float(v) for v in space(float(lo), float(hi), int(count))]
    return [float(item) for item in grid_str.split(",") if item.strip() != ""]

def grid_size(t_end:float, dt:float)->int:
    # number of samples on [0, t_end] with spacing dt, endpoint included when on the grid
    return int(math.floor(t_end / dt + 1e-9)) + 1
