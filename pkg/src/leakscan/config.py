"""Analysis knobs shared by the summary fixpoint and the detection phase."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class AnalysisConfig:
    loop_bound: int = 3
    inline_bb_limit: int = 100
    max_call_depth: int = 4
    path_budget: int = 4096
    solver_timeout_atoms: int = 256
    summary_path_budget: int = 256
    summary_block_budget: int = 10_000
    max_rounds: int = 64

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"{f.name} must be an integer, got {v!r}")
            floor = 0 if f.name == "max_call_depth" else 1
            if v < floor:
                raise ValueError(f"{f.name} must be >= {floor}, got {v}")

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_json(self) -> dict:
        return asdict(self)
