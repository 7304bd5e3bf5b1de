"""Run configuration and named tolerances."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .entropy import ALPHA_ONE_EXCLUSION
from .errors import InvalidAlpha, InvalidParameter
from .operators import DEFAULT_CLUSTER_TOL, max_total_dim

COMMANDS = ("entropy", "channel-classify", "preservation-test", "verify-suite",
            "convergence-demo", "generate", "replay")
FORMATS = ("json", "text")
DEFAULT_DIMS = ((2,), (3,), (2, 2), (4,))
DEFAULT_ALPHA_GRID = (0.5, 2.0, 3.0)


@dataclass(frozen=True)
class Tolerances:
    entropy: float = 1e-10          # |delta S| deciding "preserved"
    structural: float = 1e-7        # multiplicativity / operator-equality defects
    jensen: float = 1e-8            # Loewner comparisons in the Jensen suites
    resolvent_identity: float = 1e-9  # algebraic resolvent identity
    relative_entropy: float = 1e-9
    reduction: float = 1e-9         # alpha >= 2 chain
    cluster: float = DEFAULT_CLUSTER_TOL

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = 0
    dims: tuple[tuple[int, ...], ...] = DEFAULT_DIMS
    weights: tuple[tuple[float, ...] | None, ...] | None = None
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_path: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidParameter(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise InvalidParameter(f"format must be one of {FORMATS}")
        for a in self.alpha_grid:
            if not a > 0 or abs(a - 1.0) <= ALPHA_ONE_EXCLUSION:
                raise InvalidAlpha(f"alpha grid entry {a} is not allowed")
        cap = max_total_dim()
        for d in self.dims:
            if not d or any(n < 1 for n in d) or sum(d) > cap:
                raise InvalidParameter(f"block dimensions {list(d)} invalid (cap {cap})")
        if self.weights is not None and len(self.weights) != len(self.dims):
            raise InvalidParameter("one weight list (or None) per dims entry")

    def to_json(self) -> dict:
        return {"command": self.command, "seed": self.seed,
                "dims": [list(d) for d in self.dims],
                "weights": None if self.weights is None else
                [None if w is None else list(w) for w in self.weights],
                "alpha_grid": list(self.alpha_grid), "tolerances": self.tolerances.to_json(),
                "output_path": self.output_path, "format": self.format}
