"""Run configuration: JSON schema, validation and stable hashing.

The config document is strict JSON; unknown keys are rejected so typos
fail loudly.  Defaults follow the reduced model convention nu = gamma =
L = 1 with the flow-alignment ratio pinned to zero.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import DomainSpec
from .tensor_algebra import ModelParams

__all__ = ["PicardConfig", "RunConfig", "parse_config", "config_hash", "config_to_dict"]

_DOMAIN_KEYS = {"nx", "ny", "nz", "lx", "ly", "lz", "bc_kind"}
_PARAM_KEYS = {"a", "b", "c", "L", "nu", "gamma", "xi", "p_exp", "q_exp", "r_exp"}
_PICARD_KEYS = {"window", "tol", "max_iters"}
_IC_KEYS = {
    "zero": set(),
    "sine_mode": {"k", "amplitude", "axis"},
    "random_smooth": {"seed", "amplitude", "cutoff_mode", "u_amplitude"},
}
_TOP_KEYS = {
    "domain",
    "params",
    "dt",
    "t_end",
    "mode",
    "picard",
    "initial_condition",
    "snapshot_stride",
    "record_stride",
    "monitor_stride",
    "output_dir",
}


@dataclass(frozen=True)
class PicardConfig:
    window: float
    tol: float = 1e-10
    max_iters: int = 20


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    params: ModelParams
    dt: float
    t_end: float
    mode: str = "direct"
    picard: PicardConfig | None = None
    initial_condition: dict = field(default_factory=lambda: {"kind": "zero"})
    snapshot_stride: int = 0
    record_stride: int = 1
    monitor_stride: int = 1
    output_dir: str | None = None


def _reject_unknown(d, allowed, where):
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _validate_ic(ic) -> dict:
    if not isinstance(ic, dict) or "kind" not in ic:
        raise ConfigError("initial_condition must be an object with a 'kind' key")
    kind = ic["kind"]
    if kind not in _IC_KEYS:
        raise ConfigError(f"unknown key {kind!r} in initial_condition.kind")
    _reject_unknown({k: v for k, v in ic.items() if k != "kind"}, _IC_KEYS[kind],
                    "initial_condition")
    out = {"kind": kind}
    if kind == "sine_mode":
        out["k"] = int(ic.get("k", 1))
        out["amplitude"] = float(ic.get("amplitude", 0.1))
        out["axis"] = int(ic.get("axis", 0))
        if out["axis"] not in (0, 1, 2):
            raise ConfigError("initial_condition.axis must be 0, 1 or 2")
    elif kind == "random_smooth":
        seed = int(ic.get("seed", 0))
        if seed < 0 or seed >= 2**64:
            raise ConfigError("initial_condition.seed must be a 64-bit unsigned integer")
        out["seed"] = seed
        out["amplitude"] = float(ic.get("amplitude", 0.1))
        if out["amplitude"] < 0:
            raise ConfigError("initial_condition.amplitude must be >= 0")
        out["cutoff_mode"] = int(ic.get("cutoff_mode", 3))
        out["u_amplitude"] = float(ic.get("u_amplitude", 0.0))
        if out["u_amplitude"] < 0:
            raise ConfigError("initial_condition.u_amplitude must be >= 0")
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document into a RunConfig."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")

    if "domain" not in doc:
        raise ConfigError("missing required key 'domain'")
    _reject_unknown(doc["domain"], _DOMAIN_KEYS, "domain")
    try:
        domain = DomainSpec(**doc["domain"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid domain: {exc}") from exc

    pdoc = doc.get("params", {})
    _reject_unknown(pdoc, _PARAM_KEYS, "params")
    try:
        params = ModelParams(**pdoc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc

    for key in ("dt", "t_end"):
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}")
    dt = float(doc["dt"])
    t_end = float(doc["t_end"])
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if t_end < dt:
        raise ConfigError("t_end must be >= dt")

    mode = doc.get("mode", "direct")
    if mode not in ("direct", "picard"):
        raise ConfigError("mode must be 'direct' or 'picard'")
    picard = None
    if "picard" in doc:
        _reject_unknown(doc["picard"], _PICARD_KEYS, "picard")
        if "window" not in doc["picard"]:
            raise ConfigError("missing required key 'picard.window'")
        picard = PicardConfig(
            window=float(doc["picard"]["window"]),
            tol=float(doc["picard"].get("tol", 1e-10)),
            max_iters=int(doc["picard"].get("max_iters", 20)),
        )
    if mode == "picard" and picard is None:
        raise ConfigError("mode 'picard' requires a 'picard' section")

    ic = _validate_ic(doc.get("initial_condition", {"kind": "zero"}))

    strides = {}
    for key, default in (("snapshot_stride", 0), ("record_stride", 1), ("monitor_stride", 1)):
        val = int(doc.get(key, default))
        if val < 0 or (key != "snapshot_stride" and val < 1):
            raise ConfigError(f"{key} must be a positive integer")
        strides[key] = val

    return RunConfig(
        domain=domain,
        params=params,
        dt=dt,
        t_end=t_end,
        mode=mode,
        picard=picard,
        initial_condition=ic,
        output_dir=doc.get("output_dir"),
        **strides,
    )


def config_to_dict(config: RunConfig) -> dict:
    """Fully resolved, JSON-ready view of a config (stable key order)."""
    p = config.params
    out = {
        "domain": config.domain.to_dict(),
        "params": {
            "a": p.a, "b": p.b, "c": p.c, "L": p.L, "nu": p.nu,
            "gamma": p.gamma, "xi": p.xi,
            "p_exp": p.p_exp, "q_exp": p.q_exp, "r_exp": p.r_exp,
        },
        "dt": config.dt,
        "t_end": config.t_end,
        "mode": config.mode,
        "initial_condition": config.initial_condition,
        "snapshot_stride": config.snapshot_stride,
        "record_stride": config.record_stride,
        "monitor_stride": config.monitor_stride,
    }
    if config.picard is not None:
        out["picard"] = {
            "window": config.picard.window,
            "tol": config.picard.tol,
            "max_iters": config.picard.max_iters,
        }
    return out


def config_hash(config: RunConfig) -> str:
    """Stable digest of the fully resolved config (output paths excluded)."""
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
