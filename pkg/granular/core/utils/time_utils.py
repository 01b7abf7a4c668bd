import math
PS_PER_NS = 1_000
PS_PER_US = 1_000_000


def ns(value: float) -> int:
    return int(round(value * PS_PER_NS))


def us(value: float) -> int:
    return int(round(value * PS_PER_US))


def to_ns(simtime: int) -> float:
    return simtime / PS_PER_NS


def to_us(simtime: int) -> float:
    return simtime / PS_PER_US


def cycles(count: float, clock_ghz: float) -> int:
    return int(math.ceil(count * PS_PER_NS / clock_ghz))
