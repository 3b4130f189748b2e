from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from config.settings import parse_config_line, settings

Command = Literal["kernel", "converge", "diverge", "norms"]

DIVERGE_TARGETS = ("kernel-growth", "lemma-gg", "op-bound", "est1", "xi", "search", "cond1", "regions")
NORMS_TARGETS = ("theorem", "types")
# diverge targets driven by a single order n rather than a sweep up to nmax
SINGLE_ORDER_TARGETS = ("lemma-gg", "xi", "search", "regions")
# targets whose mean of order p_n runs on every axis: K_i >= 2n+1 on all of them
FULL_GRID_TARGETS = ("est1", "search")
BUILTIN_FUNCTIONS = ("constant", "rect", "walsh", "random-step", "borderline", "file")


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    if isinstance(value, int):
        return [value]
    return value


class ExperimentConfig(BaseModel):
    command: Command
    d: int = Field(default=1, ge=1)
    K: List[int] = Field(default_factory=list)
    B: List[int] = Field(default_factory=lambda: [1])
    sweep: List[int] = Field(default_factory=list)
    n: Optional[int] = None
    nmax: Optional[int] = None
    kind: Optional[Literal["D", "F", "G"]] = None
    function: str = "rect"
    params: Dict[str, str] = Field(default_factory=dict)
    beta: Optional[float] = None
    what: Optional[str] = None
    tilde: Optional[int] = None
    faithful: bool = False
    count: int = Field(default=100, ge=1)
    trials: int = Field(default=16, ge=0)
    r: Optional[int] = None
    c: Optional[float] = None
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    seed: int = Field(default_factory=lambda: settings.seed)
    quiet_header: bool = False
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)

    @field_validator("K", "B", "sweep", mode="before")
    def split_lists(cls, value):  # noqa: N805
        return _split_list(value)

    @field_validator("params", mode="before")
    def split_params(cls, value):  # noqa: N805
        if isinstance(value, str):
            pairs = [item.split("=", 1) for item in value.split(";") if item.strip()]
            if any(len(pair) != 2 for pair in pairs):
                raise ValueError(f"params: expected key=value items separated by ';', got {value!r}")
            return {k.strip(): v.strip() for k, v in pairs}
        if isinstance(value, list):
            return dict(item.split("=", 1) for item in value)
        return value

    @model_validator(mode="after")
    def check_command(self) -> "ExperimentConfig":
        if len(self.K) == 1 and self.d > 1:
            self.K = self.K * self.d
        if not self.K and self.command in ("converge", "norms"):
            self.K = [6] * self.d
        if self.K and len(self.K) != self.d:
            raise ValueError(f"K: expected {self.d} values, got {len(self.K)}")
        if any(k < 0 or k > 30 for k in self.K):
            raise ValueError(f"K: resolutions must lie in 0..30, got {self.K}")
        if any(not 1 <= b <= self.d for b in self.B) or len(set(self.B)) != len(self.B):
            raise ValueError(f"B: axis labels must be distinct and lie in 1..{self.d}, got {self.B}")
        self.B = sorted(self.B)
        if self.beta is not None and self.beta < 0:
            raise ValueError(f"beta: must be non-negative, got {self.beta}")

        if self.command == "kernel":
            self._check_kernel()
        elif self.command in ("converge", "norms"):
            self._check_sweep()
        else:
            self._check_diverge()
        return self

    def _check_kernel(self) -> None:
        if self.kind is None:
            raise ValueError("kind: required by the kernel command (D, F or G)")
        if self.n is None:
            raise ValueError("n: required by the kernel command")
        if not self.K:
            raise ValueError("K: required by the kernel command")
        if self.d != 1:
            raise ValueError("d: kernels are one-dimensional")
        low = 0 if self.kind == "D" else 2
        if self.n < low:
            raise ValueError(f"n: must be at least {low} for kind {self.kind}, got {self.n}")
        if self.n > (1 << self.K[0]):
            raise ValueError(f"n: order {self.n} exceeds 2^{self.K[0]}")

    def _check_sweep(self) -> None:
        if not self.sweep:
            self.sweep = list(settings.sweep_orders)
        if any(n < 2 for n in self.sweep):
            raise ValueError(f"sweep: orders must be at least 2, got {self.sweep}")
        limit = 1 << min(self.K)
        if max(self.sweep) > limit:
            raise ValueError(f"sweep: order {max(self.sweep)} exceeds the resolution 2^{min(self.K)}")
        if self.command == "norms":
            what = self.what or "theorem"
            if what not in NORMS_TARGETS:
                raise ValueError(f"what: expected one of {', '.join(NORMS_TARGETS)}, got {what!r}")
            self.what = what
        elif self.function.split(":", 1)[0] not in BUILTIN_FUNCTIONS:
            raise ValueError(f"function: expected one of {', '.join(BUILTIN_FUNCTIONS)}, got {self.function!r}")

    def _check_diverge(self) -> None:
        if self.what not in DIVERGE_TARGETS:
            raise ValueError(f"what: expected one of {', '.join(DIVERGE_TARGETS)}, got {self.what!r}")
        if self.what in SINGLE_ORDER_TARGETS:
            if self.n is None:
                raise ValueError(f"n: required by diverge --what {self.what}")
            if not 1 <= self.n <= 12:
                raise ValueError(f"n: must lie in 1..12, got {self.n}")
        else:
            nmax = 6 if self.nmax is None else self.nmax
            if not 2 <= nmax <= 12:
                raise ValueError(f"nmax: must lie in 2..12, got {nmax}")
            self.nmax = nmax
        if self.tilde is not None and self.tilde < 1:
            raise ValueError(f"tilde: override must be a positive integer, got {self.tilde}")
        if self.r is not None and self.r < 1:
            raise ValueError(f"r: needs at least one translate, got {self.r}")
        if self.K:
            order = self.n if self.what in SINGLE_ORDER_TARGETS else self.nmax
            needed = 2 * order + 1
            if self.what in FULL_GRID_TARGETS:
                members = list(range(1, self.d + 1))
            elif self.what in ("xi", "op-bound", "cond1"):
                members = self.B
            else:
                members = [1]
            for label in members:
                if self.K[label - 1] < needed:
                    raise ValueError(f"K: axis {label} needs resolution {needed}, got {self.K[label - 1]}")

    def to_key_value(self) -> str:
        lines = []
        for key, value in self.model_dump().items():
            if value is None or value == {} and key == "params":
                continue
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, dict):
                value = ";".join(f"{k}={v}" for k, v in value.items())
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_key_value(cls, text: str) -> "ExperimentConfig":
        values: Dict[str, str] = {}
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#") or "=" not in stripped:
                continue
            key, value = parse_config_line(stripped)
            values[key] = value
        return cls.model_validate(values)


class BandScan(BaseModel):
    m: int
    start: float
    end: float
    points: int
    min: Optional[float] = None
    argmin: Optional[float] = None


class LemmaScanReport(BaseModel):
    n: int
    K: int
    mode: Literal["faithful", "override"]
    tilde: Optional[int] = None
    empty: bool = False
    min: Optional[float] = None
    argmin: Optional[float] = None
    argmin_index: Optional[int] = None
    per_band: List[BandScan] = Field(default_factory=list)


class IntervalReport(BaseModel):
    m: int
    tilde: Optional[int]
    start: str
    end: str
    empty: bool


class RegionReport(BaseModel):
    n: int
    mode: Literal["faithful", "override"]
    omega: List[IntervalReport]
    exceptional: List[IntervalReport]
    exceptional_start: Optional[int] = None
    threshold: Dict[str, float] = Field(default_factory=dict)


class GrowthRow(BaseModel):
    n: int
    p: int
    l1_norm: float
    ratio: float
    increment: Optional[float] = None


class OperatorBoundRow(BaseModel):
    n: int
    young: str
    mean_l1: float
    test_norm: float
    ratio: float
    formula: float


class Est1Row(BaseModel):
    n: int
    c: float
    threshold: float
    measure: float
    ratio: float
    bound_applies: bool


class Cond1Row(BaseModel):
    n: int
    decay: float
    scale: float
    holds: bool


class XiReport(BaseModel):
    n: int
    B: List[int]
    r: int
    nu: float
    sup_M: float
    sup_bound: float
    l1_M: float
    luxemburg_xi: float
    half_doubling: float
    cond1_scale: float
    sup_ok: bool
    l1_ok: bool
    luxemburg_ok: bool
    cond1_holds: bool


class SearchReport(BaseModel):
    n: int
    B: List[int]
    r: int
    trials: int
    seed: int
    threshold: float
    measure: float
    translations: List[List[int]] = Field(default_factory=list)
    signs: List[int] = Field(default_factory=list)
