"""Deterministic synthetic workloads: ten benchmark kernels and two sweep families."""

from __future__ import annotations

from typing import Any

from ..errors import InvalidParam
from .base import Builder, GeneratedCase, KernelSpec
from .kernels import DESK_DIVISORS, KERNELS, PARAMS, _RANGES
from .sweep import (
    FAMILIES,
    SWEEP_PARAMS,
    evaluate_case,
    sweep_compute,
    sweep_document,
    sweep_granularity,
    sweep_memory,
)

KINDS = tuple(KERNELS) + FAMILIES
SCALES = ("paper", "desk")
_UPPER = {("GEOIP", "max_prefix"): 31, ("FRAUD", "burst"): 1.0, ("BVH", "leaf_size"): 16}


def default_params(kind: str, scale: str = "desk") -> dict[str, Any]:
    table = PARAMS.get(kind) or SWEEP_PARAMS.get(kind)
    if table is None:
        raise InvalidParam(f"unknown kernel kind {kind!r}")
    if scale not in SCALES:
        raise InvalidParam(f"unknown scale {scale!r}")
    col = 0 if scale == "paper" else 1
    return {name: spec[col] for name, spec in table.items()}


def resolve_params(spec: KernelSpec) -> dict[str, Any]:
    params = default_params(spec.kind, spec.scale)
    table = PARAMS.get(spec.kind) or SWEEP_PARAMS[spec.kind]
    for name, value in spec.params.items():
        if name not in table:
            raise InvalidParam(f"{spec.kind} has no parameter {name!r}")
        lo = table[name][2]
        if isinstance(lo, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParam(f"{name} must be an integer")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidParam(f"{name} must be a number")
        if value < lo:
            raise InvalidParam(f"{name}={value} is below the minimum {lo}")
        hi = _UPPER.get((spec.kind, name))
        if hi is not None and value > hi:
            raise InvalidParam(f"{name}={value} is above the maximum {hi}")
        params[name] = value
    for low, high in _RANGES.get(spec.kind, ()):
        if params[low] > params[high]:
            raise InvalidParam(f"{low} must not exceed {high}")
    return params


def generate_kernel(spec: KernelSpec) -> GeneratedCase:
    if spec.kind not in KINDS:
        raise InvalidParam(f"unknown kernel kind {spec.kind!r}")
    if isinstance(spec.seed, bool) or not isinstance(spec.seed, int) or not 0 <= spec.seed < 2**64:
        raise InvalidParam("seed must be an unsigned 64-bit integer")
    params = resolve_params(spec)
    if spec.kind in KERNELS:
        build, block_len = KERNELS[spec.kind]
    else:
        build = sweep_compute if spec.kind == "SWEEP_COMPUTE" else sweep_memory
        block_len = None
    b = Builder(spec.kind.lower(), spec.seed, block_len)
    build(b, params)
    manifest = {
        "kind": spec.kind,
        "scale": spec.scale,
        "seed": spec.seed,
        "params": params,
        "desk_divisors": DESK_DIVISORS.get(spec.kind, {}),
        "block_length": block_len,
    }
    return b.finish(manifest)


__all__ = [
    "DESK_DIVISORS", "FAMILIES", "GeneratedCase", "KINDS", "KernelSpec", "PARAMS",
    "SCALES", "default_params", "evaluate_case", "generate_kernel", "resolve_params",
    "sweep_document", "sweep_granularity",
]
