from typing import Optional, Tuple

class HybridDiffError(Exception):
    pass

class ScenarioError(HybridDiffError):
    """
    A scenario or parameter file failed to parse or validate.
    :param path: dotted field path, e.g. "families.0.params.k1"
    :param line: 1-based line in the source file, None if unknown
    """
    reason: str
    path: Optional[str]
    line: Optional[int]

    def __init__(self, message:str, *, path:Optional[str]=None, line:Optional[int]=None):
        self.reason = message
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}: "
        if line is not None:
            location = f"line {line}: {location}"
        super().__init__(f"{location}{message}")

class NonFiniteState(HybridDiffError):
    t: float
    last_state: Tuple[float, ...]
    last_t: float

    def __init__(self, *, t:float, last_t:float, last_state:Tuple[float, ...]):
        self.t = t
        self.last_t = last_t
        self.last_state = last_state
        super().__init__(
            f"state became non-finite at t={t:.9g} (last finite state {last_state} at t={last_t:.9g})"
        )

class AsymmetricInput(HybridDiffError):
    pass

class NonPositiveLambdaMin(HybridDiffError):
    pass

class HypothesisViolated(HybridDiffError):
    inequality: str

    def __init__(self, inequality:str):
        self.inequality = inequality
        super().__init__(f"hypothesis violated: {inequality}")

class WindowOutOfRange(HybridDiffError):
    pass

class PreconditionError(HybridDiffError):
    pass
