"""Shared fixtures-in-spirit: reference structures, samplers, naive oracles.

The naive fold path here enumerates all partial matchings directly and
filters with validate_target, sharing nothing with the package's
stack-placement enumerator, so the two can check each other.
"""

from __future__ import annotations

from functools import lru_cache
from random import Random

from pkinv import (
    Structure,
    ValidationPolicy,
    crossing_number,
    energy_of,
    is_compatible,
    validate_target,
)
from pkinv.oracle import EnergyModel

# A crossing two-stack structure used all over the suite.
PSEUDOKNOT_18 = "(((..[[[..)))..]]]"
# A sequence whose unique mfe under the default model is PSEUDOKNOT_18.
PSEUDOKNOT_18_SEQ = "GGGAACCCAACCCAAGGG"

# Structure behind the seven-component ordering figure: a crossing triple
# of stacks flanked by two hairpins, all inside a multiloop stack.
ORDERED_COMPONENTS_65 = Structure.from_pairs(
    65,
    [
        (1, 63), (2, 62), (3, 61), (4, 60),
        (7, 37), (8, 36), (9, 35),
        (11, 19), (12, 18), (13, 17),
        (21, 42), (22, 41), (23, 40),
        (25, 47), (26, 46), (27, 45),
        (49, 57), (50, 56), (51, 55),
    ],
)

# Hairpin nested in a two-arc pseudoknot; drives the interval ladder.
TWO_LOOP_10 = Structure.from_pairs(10, [(2, 8), (3, 5), (7, 9)])


def random_sequence(rng: Random, n: int) -> str:
    return "".join(rng.choice("ACGU") for _ in range(n))


def random_valid_structure(
    rng: Random,
    n: int | None = None,
    policy: ValidationPolicy | None = None,
    max_stacks: int = 4,
) -> Structure:
    """Random structure passing validate_target, by rejection stack placement."""
    policy = policy or ValidationPolicy()
    if n is None:
        n = rng.randint(10, 30)
    taken: set[int] = set()
    arcs: list[tuple[int, int]] = []
    goal = rng.randint(0, max_stacks)
    for _ in range(40):
        if len(arcs) >= goal * policy.sigma:
            break
        size = rng.choice((policy.sigma, policy.sigma, policy.sigma + 1))
        span = policy.min_arc_length + 2 * (size - 1)
        if n - 1 < span:
            break
        i = rng.randint(1, n - span)
        j = rng.randint(i + span, n)
        new = [(i + t, j - t) for t in range(size)]
        if any(p in taken or q in taken for p, q in new):
            continue
        candidate = Structure.from_pairs(n, arcs + new)
        if crossing_number(candidate) > policy.k - 1:
            continue
        if validate_target(candidate, policy):
            continue
        arcs += new
        taken.update(p for pair in new for p in pair)
    return Structure.from_pairs(n, arcs)


@lru_cache(maxsize=None)
def naive_valid_structures(
    n: int, policy: ValidationPolicy = ValidationPolicy()
) -> tuple[Structure, ...]:
    """Every valid structure of length n via matching enumeration + filter."""
    results: list[Structure] = []
    pairs: list[tuple[int, int]] = []
    used: set[int] = set()

    def extend(pos: int):
        if pos > n:
            s = Structure.from_pairs(n, tuple(pairs))
            if not validate_target(s, policy):
                results.append(s)
            return
        if pos in used:
            extend(pos + 1)
            return
        extend(pos + 1)  # leave pos unpaired
        for q in range(pos + policy.min_arc_length, n + 1):
            if q not in used:
                pairs.append((pos, q))
                used.update((pos, q))
                extend(pos + 1)
                pairs.pop()
                used.difference_update((pos, q))

    extend(1)
    return tuple(results)


def naive_min_energy(
    seq: str,
    policy: ValidationPolicy = ValidationPolicy(),
    model: EnergyModel | None = None,
) -> float:
    """Brute-force mfe over the naive structure list; 0 is the empty floor."""
    model = model or EnergyModel()
    best = 0.0
    for s in naive_valid_structures(len(seq), policy):
        if s.arcs and is_compatible(seq, s):
            best = min(best, energy_of(seq, s, model))
    return best
