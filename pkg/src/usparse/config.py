"""Run configuration shared by the CLI and the manifests it writes."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

METHODS = ("gdb", "emd", "lp", "ni", "ss")
BACKBONES = ("spanning", "random")
MODES = ("abs", "rel")


@dataclass
class RunConfig:
    """Everything needed to reproduce one sparsification run byte-for-byte."""

    input: str
    output: str
    method: str
    alpha: float
    alpha_prime: float | None = None
    backbone: str = "spanning"
    mode: str = "abs"
    rule: str = "1"  # cut cardinality as an integer string, or "all"
    h: float = 0.05
    tau: float | None = None
    theta: float | None = None
    seed: int = 0
    max_sweeps: int = 100
    max_iters: int = 50

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone kind {self.backbone!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown discrepancy mode {self.mode!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if self.alpha_prime is not None and not 0.0 <= self.alpha_prime <= self.alpha:
            raise ValueError("alpha_prime must lie in [0, alpha]")
        if not 0.0 <= self.h <= 1.0:
            raise ValueError("h must lie in [0, 1]")
        if self.tau is not None and self.tau <= 0.0:
            raise ValueError("tau must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")
        if self.rule != "all":
            try:
                k = int(self.rule)
            except ValueError:
                raise ValueError(f"rule must be an integer or 'all', got {self.rule!r}")
            if k < 1:
                raise ValueError("rule cardinality must be at least 1")
        if self.method == "emd" and self.rule != "1":
            raise ValueError("the emd method only preserves degrees: rule k>1 is not allowed")
        if self.method in ("lp", "ni", "ss") and self.rule != "1":
            raise ValueError(f"method {self.method!r} does not take a cut rule")
        if self.theta is not None and self.method != "ni":
            raise ValueError("theta only applies to the ni method")
        if self.method in ("ni", "ss") and self.mode != "abs":
            raise ValueError(f"method {self.method!r} does not take a discrepancy mode")

    def rule_cardinality(self) -> int | None:
        """k as an integer, or None for the all-cuts rule."""
        return None if self.rule == "all" else int(self.rule)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)
