"""Write-policy deciders consulted when a store needs a bus signal."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import CoherenceState, SchemeConfig, SchemeVariant


class PolicyDecision(enum.IntEnum):
    INVALIDATE = 1
    UPDATE = 2


@dataclass(frozen=True)
class WriteContext:
    writer_state: CoherenceState
    counter: int = 0
    remote_sharers: int = 0


_S_OWNED = int(CoherenceState.O)


def decide_raw(variant: int, param: int, writer_state: int, counter: int, remote_sharers: int) -> bool:
    """Integer-coded decision used by the kernels; True means update."""
    if variant == 0:
        return False
    if variant == 1:
        return True
    if variant == 2:
        return counter >= param
    if variant == 3:
        return writer_state == _S_OWNED
    return remote_sharers >= param


def decide(scheme: SchemeConfig, ctx: WriteContext) -> PolicyDecision:
    v = scheme.variant
    if v is SchemeVariant.INVALIDATE_ONLY:
        upd = False
    elif v is SchemeVariant.UPDATE_ONLY:
        upd = True
    elif v is SchemeVariant.THRESHOLD:
        upd = ctx.counter >= scheme.threshold_T
    elif v is SchemeVariant.ADAPTED_MOESI:
        upd = ctx.writer_state is CoherenceState.O
    else:
        upd = ctx.remote_sharers >= scheme.min_sharers_K
    return PolicyDecision.UPDATE if upd else PolicyDecision.INVALIDATE


_BY_NAME = {
    "inv": SchemeVariant.INVALIDATE_ONLY,
    "upd": SchemeVariant.UPDATE_ONLY,
    "threshold": SchemeVariant.THRESHOLD,
    "adapted": SchemeVariant.ADAPTED_MOESI,
    "sharers": SchemeVariant.NUM_SHARERS,
}


def parse_scheme(text: str, counter_ceiling: int = 15) -> SchemeConfig:
    """Parse ``inv``, ``upd``, ``threshold:<T>``, ``adapted`` or ``sharers:<K>``."""
    name, sep, arg = text.strip().partition(":")
    variant = _BY_NAME.get(name)
    if variant is None:
        raise ValueError(f"unknown scheme {text!r}; expected one of inv, upd, threshold:<T>, adapted, sharers:<K>")
    takes_param = variant in (SchemeVariant.THRESHOLD, SchemeVariant.NUM_SHARERS)
    if not takes_param:
        if sep:
            raise ValueError(f"scheme {name!r} takes no parameter")
        return SchemeConfig(variant, counter_ceiling=counter_ceiling)
    if not arg.isdigit() or not arg.isascii():
        raise ValueError(f"scheme {name!r} needs a non-negative integer parameter, got {text!r}")
    if variant is SchemeVariant.THRESHOLD:
        return SchemeConfig(variant, threshold_T=int(arg), counter_ceiling=counter_ceiling)
    return SchemeConfig(variant, min_sharers_K=int(arg), counter_ceiling=counter_ceiling)
