"""Run configuration: one flat key=value file covering every tunable."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .solver import SolverConfig

__all__ = ["RunConfig", "parse_config", "format_config", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    patch_h: int = 50
    patch_w: int = 50
    step: int = 40
    lambda_scale: float = 2.3
    f: float = 1.1
    z1_init: float = 0.15
    z2_init: float = 0.02
    rho: float = 1.2
    zeta: float = 1e-3
    max_iter: int = 200
    sk_window: int = 5
    sk_gamma_exponent: float = 0.5
    eps: float = 0.01
    eps_prior: float = 1e-6
    phi: float = 0.01
    c: int = 65
    k_sigma: float = 3.0
    v_min: float = 0.0
    match_radius: float = 4.0
    psi_mode: str = "mean"

    def __post_init__(self):
        if self.patch_h < 2 or self.patch_w < 2:
            raise ValueError("patch dimensions must be >= 2")
        if not 1 <= self.step <= min(self.patch_h, self.patch_w):
            raise ValueError("step must be in [1, min(patch_h, patch_w)]")
        if self.sk_window % 2 == 0 or self.sk_window < 3:
            raise ValueError("sk_window must be odd and >= 3")
        if self.phi <= 0 or self.c < 1 or self.match_radius <= 0:
            raise ValueError("phi, c and match_radius must be positive")
        self.solver_config()  # delegates validation of the solver knobs

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            lambda_scale=self.lambda_scale,
            f=self.f,
            z1_init=self.z1_init,
            z2_init=self.z2_init,
            rho=self.rho,
            zeta=self.zeta,
            max_iter=self.max_iter,
            psi_mode=self.psi_mode,
            eps=self.eps,
            eps_prior=self.eps_prior,
        )


def _field_types() -> dict[str, type]:
    return {f.name: f.type for f in fields(RunConfig)}


_PARSERS = {"int": int, "float": float, "str": str}


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; `#` starts a comment. Unknown keys reject."""
    types = _field_types()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in types:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate config key {key!r}")
        try:
            values[key] = _PARSERS[types[key]](val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {val!r}") from exc
    return RunConfig(**values)


def format_config(cfg: RunConfig) -> str:
    """Render a config as the same key=value text `parse_config` reads."""
    lines = []
    for f in fields(RunConfig):
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
