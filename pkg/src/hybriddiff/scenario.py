import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Scenario and parameter files
#
# Files are jinja2 templates rendering to YAML. Rendering keeps line structure, so validation
# errors are reported against the line of the offending node in the file the user wrote.
#########################################################################################################
from typing import Optional, Any, Dict, List, Tuple, Type, TypeVar, Sequence
import os
import math
from copy import copy, deepcopy

import yaml
import jinja2
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .differentiators import Family, FAMILY_PARAMS, HybridParams, LevantParams, LinearParams
from .errors import ScenarioError
from .integrator import Method, SimConfig, ScheduleEntry
from .metrics import MetricsConfig
from .signals import SignalSpec, NoiseSpec

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")
PARAMS_DIR = os.path.join(SCENARIO_DIR, "params")
SECTIONS = ("signal", "noise", "sim", "metrics")

M = TypeVar("M", bound=BaseModel)

####################################################################
# Models
####################################################################
class ScheduleSwitch(BaseModel):
    model_config = ConfigDict(extra="forbid")

    at: float = Field(gt=0.0)                                       # switch time, seconds
    params: Dict[str, Any] = Field(default_factory=dict)            # partial, merged over the previous params

class FamilyEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Family
    name: Optional[str] = None                                      # output stem, defaults to the family
    params: Dict[str, Any] = Field(default_factory=dict)
    schedule: List[ScheduleSwitch] = Field(default_factory=list)
    method: Optional[Method] = None                                 # overrides sim.method
    x0: Optional[List[float]] = None                                # overrides sim.x0

    @property
    def label(self)->str:
        return self.family.value if self.name is None else self.name

class SimSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt: float = Field(default=1e-4, gt=0.0)
    t_end: float = Field(default=10.0, gt=0.0)
    method: Method = Method.RK4
    x0: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    hold_input: bool = True

    @model_validator(mode="after")
    def _check(self)->"SimSection":
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        return self

class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    description: str = ""
    signal: SignalSpec = Field(default_factory=SignalSpec)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    sim: SimSection = Field(default_factory=SimSection)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    families: List[FamilyEntry] = Field(min_length=1)

    @model_validator(mode="after")
    def _check(self)->"Scenario":
        labels = [entry.label for entry in self.families]
        if len(set(labels)) < len(labels):
            raise ValueError(f"family names must be unique, got {labels}")
        return self

    def __repr__(self):
        return f"Scenario(name=\"{self.name}\", families={[entry.label for entry in self.families]})"

    def params_at(self, index:int)->List[Tuple[float, BaseModel]]:
        """
        Typed params of family `index`: [(0, params), (switch time, params), ...].
        """
        entry = self.families[index]
        model_cls = FAMILY_PARAMS[entry.family]
        raw = deepcopy(entry.params)
        result = [(0.0, validate_model(model_cls, raw, prefix=("families", index, "params")))]
        for j, switch in enumerate(entry.schedule):
            raw = _merge(raw, switch.params)
            result.append((switch.at, validate_model(model_cls, raw, prefix=("families", index, "schedule", j, "params"))))
        return result

    def sim_config(self, index:int)->SimConfig:
        entry = self.families[index]
        schedule = self.params_at(index)
        return SimConfig(
            dt=self.sim.dt,
            t_end=self.sim.t_end,
            method=self.sim.method if entry.method is None else entry.method,
            x0=self.sim.x0 if entry.x0 is None else entry.x0,
            hold_input=self.sim.hold_input,
            param_schedule=[ScheduleEntry(t=t, params=params) for t, params in schedule[1:]],
        )

    def validate_families(self):
        for index in range(len(self.families)):
            self.params_at(index)

    def to_dict(self)->Dict[str, Any]:
        return self.model_dump(mode="json")

    def to_yaml(self)->str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_overrides(self, *, seed:Optional[int]=None, dt:Optional[float]=None)->"Scenario":
        payload = self.to_dict()
        if seed is not None:
            payload["noise"]["seed"] = seed
        if dt is not None:
            payload["sim"]["dt"] = dt
        return scenario_from_dict(payload)

    def select_family(self, family:Family)->"Scenario":
        payload = self.to_dict()
        payload["families"] = [item for item in payload["families"] if item["family"] == family.value]
        if not payload["families"]:
            raise ScenarioError(f"scenario has no {family.value} family", path="families")
        return scenario_from_dict(payload)

    def with_value(self, path:str, value:float)->"Scenario":
        """
        Return a copy with the numeric field at `path` replaced. Accepted paths:
            signal.omega, noise.epsilon, sim.dt, metrics.tol_e2     scenario sections
            families.<i>.params.<field>                             by position
            <family name or family>.<field>                         e.g. linear.tau, gred.linear.tau
        """
        payload = self.to_dict()
        segments = path.split(".")
        if segments[0] in SECTIONS:
            current = _lookup(payload, segments)
            target, rest = payload, segments
        else:
            indexes, rest = self._resolve_family_path(path, segments)
            current = None
            for index in indexes:
                typed = self.params_at(index)[0][1].model_dump(mode="json")
                current = _lookup(typed, rest)
                if current is None:
                    break
            target = None

        if isinstance(current, bool) or not isinstance(current, (int, float)):
            raise ScenarioError("does not resolve to a numeric field", path=path)

        if target is not None:
            _assign(target, rest, value)
        else:
            for index in indexes:
                _assign(payload["families"][index]["params"], rest, value)
        return scenario_from_dict(payload)

    def _resolve_family_path(self, path:str, segments:List[str])->Tuple[List[int], List[str]]:
        if segments[0] == "families":
            if len(segments) < 4 or segments[2] != "params" or not segments[1].isdigit():
                raise ScenarioError("expected families.<index>.params.<field>", path=path)
            index = int(segments[1])
            if index >= len(self.families):
                raise ScenarioError(f"no family at index {index}", path=path)
            return [index], segments[3:]

        indexes = [i for i, entry in enumerate(self.families) if entry.name == segments[0]]
        if not indexes:
            indexes = [i for i, entry in enumerate(self.families) if entry.family.value == segments[0]]
        if not indexes or len(segments) < 2:
            raise ScenarioError("does not name a scenario section or family", path=path)
        return indexes, segments[1:]


class SecondOrderSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k1: float = Field(default=6.0, gt=0.0)
    k2: float = Field(default=9.0, gt=0.0)
    alpha: float = Field(default=0.2, gt=0.0, lt=1.0)

class AnalysisConfig(BaseModel):
    """
    Parameter file for the certify and freq actions.
    """
    model_config = ConfigDict(extra="forbid")

    hybrid: Optional[HybridParams] = None
    levant: Optional[LevantParams] = None
    linear: Optional[LinearParams] = None
    second_order: Optional[SecondOrderSpec] = None
    L2: float = Field(default=0.0, ge=0.0)
    epsilon: float = Field(default=0.0, ge=0.0)
    amplitudes: List[float] = Field(default_factory=lambda: [0.01, 0.1, 1.0, 10.0])

    @model_validator(mode="after")
    def _check(self)->"AnalysisConfig":
        if any(not a > 0 for a in self.amplitudes):
            raise ValueError("amplitudes must be positive")
        return self


####################################################################
# Template loading
####################################################################
class ConfigLoader:
    _ctx:Dict[str, Any]

    def __init__(self, context:Optional[Dict[str, Any]]=None):
        self._ctx = {"pi": math.pi}
        if context is not None:
            self._ctx.update(context)

    def __repr__(self):
        return f"ConfigLoader(context={sorted(self._ctx.keys())})"

    def render(self, text:str, context:dict={})->str:
        environment = jinja2.Environment(keep_trailing_newline=True)
        ctx = copy(self._ctx)
        ctx.update(context)
        try:
            return environment.from_string(text).render(**ctx)
        except jinja2.TemplateSyntaxError as e:
            raise ScenarioError(f"template error: {e.message}", line=e.lineno)
        except jinja2.TemplateError as e:
            raise ScenarioError(f"template error: {e}")

    def load_template(self, filename:str, context:dict={})->str:
        with open(filename, "rt") as f:
            return self.render(f.read(), context=context)

    def get_yaml(self, filename:str, context:dict={})->Tuple[Any, str]:
        text = self.load_template(filename, context=context)
        return parse_yaml(text), text


def parse_yaml(text:str)->Any:
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = None if e.problem_mark is None else e.problem_mark.line + 1
        raise ScenarioError(f"invalid YAML: {e.problem}", line=line)
    except yaml.YAMLError as e:
        raise ScenarioError(f"invalid YAML: {e}")

def node_line(text:Optional[str], loc:Sequence[Any])->Optional[int]:
    """
    1-based line of the deepest YAML node reachable along loc.
    """
    if text is None:
        return None
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    if node is None:
        return None
    line = node.start_mark.line + 1
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                if key_node.value == str(key):
                    line = key_node.start_mark.line + 1
                    node = value_node
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line

def validate_model(model_cls:Type[M], raw:Any, *, text:Optional[str]=None, prefix:Tuple[Any, ...]=())->M:
    try:
        return model_cls.model_validate(raw)
    except ValidationError as e:
        error = e.errors()[0]
        loc = prefix + tuple(error["loc"])
        path = ".".join(str(item) for item in loc) or "<root>"
        raise ScenarioError(error["msg"], path=path, line=node_line(text, loc))


####################################################################
# Public API
####################################################################
def scenario_from_dict(payload:Any, *, text:Optional[str]=None)->Scenario:
    if not isinstance(payload, dict):
        raise ScenarioError("scenario must be a mapping", line=1 if text is not None else None)
    scenario = validate_model(Scenario, payload, text=text)
    try:
        scenario.validate_families()
    except ScenarioError as e:
        if text is None or e.path is None:
            raise
        loc = tuple(int(item) if item.isdigit() else item for item in e.path.split("."))
        raise ScenarioError(e.reason, path=e.path, line=node_line(text, loc))
    return scenario

def parse_scenario(text:str, context:dict={})->Scenario:
    rendered = ConfigLoader().render(text, context=context)
    return scenario_from_dict(parse_yaml(rendered), text=rendered)

def resolve_config_path(name_or_path:str)->str:
    """
    A path to an existing file, or the name of a bundled scenario / parameter file.
    """
    if os.path.isfile(name_or_path):
        return name_or_path
    for directory in (SCENARIO_DIR, PARAMS_DIR):
        for candidate in (name_or_path, f"{name_or_path}.yaml"):
            filename = os.path.join(directory, candidate)
            if os.path.isfile(filename):
                return filename
    return name_or_path

def bundled_scenarios()->List[str]:
    return sorted(
        filename[:-len(".yaml")] for filename in os.listdir(SCENARIO_DIR)
        if filename.endswith(".yaml")
    )

def load_scenario(name_or_path:str, context:dict={})->Scenario:
    filename = resolve_config_path(name_or_path)
    raw, text = ConfigLoader().get_yaml(filename, context=context)
    logger.debug(f"[scenario] load_scenario: {filename}")
    return scenario_from_dict(raw, text=text)

def load_analysis_config(name_or_path:str, context:dict={})->AnalysisConfig:
    filename = resolve_config_path(name_or_path)
    raw, text = ConfigLoader().get_yaml(filename, context=context)
    if not isinstance(raw, dict):
        raise ScenarioError("parameter file must be a mapping", line=1)
    return validate_model(AnalysisConfig, raw, text=text)

def default_scenario()->Scenario:
    return Scenario(
        name="default",
        families=[FamilyEntry(family=Family.HYBRID, params=HybridParams().model_dump(mode="json"))],
    )

####################################################################
# dict helpers
####################################################################
def _merge(base:Dict[str, Any], update:Dict[str, Any])->Dict[str, Any]:
    result = deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = _merge(result[key], value)
        else:
            result[key] = deepcopy(value)
    return result

def _lookup(payload:Any, segments:List[str])->Any:
    for segment in segments:
        if not isinstance(payload, dict) or segment not in payload:
            return None
        payload = payload[segment]
    return payload

def _assign(payload:Dict[str, Any], segments:List[str], value:Any):
    for segment in segments[:-1]:
        payload = payload.setdefault(segment, {})
    payload[segments[-1]] = value
