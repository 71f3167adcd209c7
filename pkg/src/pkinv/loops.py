"""Loop decomposition of crossing arc diagrams and the interval ladder.

Every diagram splits uniquely into hairpin, interior, multi, and
pseudoknot loops.  Arcs that cross are grouped stack-wise into pseudoknot
loops; every remaining arc closes exactly one standard loop, namely the
one formed by the maximal arcs directly nested beneath it.  Unpaired
positions inside a pseudoknot span that no standard loop claims belong to
the pseudoknot loop.

On top of the decomposition this module builds the ordered loop
components and the growing interval sequence that drives the local
search: each component contributes its own span, the span padded by
adjacent unpaired runs, and the running union of everything seen so far.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .structure import Arc, Stack, Structure, stacks

HAIRPIN = "hairpin"
INTERIOR = "interior"
MULTI = "multi"
PSEUDOKNOT = "pseudoknot"
HELIX = "helix"


class ArcNotInStructure(ValueError):
    """The given arc is not part of the structure."""


class InvalidStructure(ValueError):
    """The decomposition did not partition the structure (internal check)."""


@dataclass(frozen=True)
class Loop:
    """One loop of the decomposition.

    arcs lists the constituent arcs: the closing arc plus the boundary
    arcs of directly nested blocks for standard loops, or the full
    crossing arc set for pseudoknots.  intervals are the maximal runs of
    unpaired positions the loop claims.  Ownership for the arc partition
    is the closing arc alone for standard loops and all arcs for
    pseudoknot loops.
    """

    kind: str
    arcs: tuple[Arc, ...]
    intervals: tuple[tuple[int, int], ...]
    closing_arc: Arc | None

    @property
    def owned_arcs(self) -> tuple[Arc, ...]:
        if self.kind == PSEUDOKNOT:
            return self.arcs
        return (self.closing_arc,)

    @property
    def is_stacked_pair(self) -> bool:
        """Interior loop with both gaps empty (two consecutive stack arcs)."""
        if self.kind != INTERIOR:
            return False
        outer, inner = self.arcs
        return inner.i == outer.i + 1 and inner.j == outer.j - 1

    @property
    def span(self) -> tuple[int, int]:
        lo = min(a.i for a in self.arcs)
        hi = max(a.j for a in self.arcs)
        if self.intervals:
            lo = min(lo, self.intervals[0][0])
            hi = max(hi, self.intervals[-1][1])
        return lo, hi


@dataclass(frozen=True)
class LoopComponent:
    """A loop dressed with its stem arcs, the unit the local search orders.

    Standard loops carry the full stack of their closing arc (the
    stacked-pair loops of that stack are absorbed here).  A pseudoknot
    loop is one component; each of its stacks of size at least two also
    stands alone as a helix component, since its stacked pairs form a
    ladder worth optimizing on its own.
    """

    kind: str
    span: tuple[int, int]
    padded_span: tuple[int, int]
    loops: tuple[Loop, ...]
    arcs: tuple[Arc, ...]


@dataclass(frozen=True)
class IntervalPlan:
    """Ordered components plus the flattened interval sequence I_1..I_m.

    Every interval is contained in the final one, which always covers
    [1, n].
    """

    components: tuple[LoopComponent, ...]
    intervals: tuple[tuple[int, int], ...]


def crossing_set(s: Structure, arc: Arc) -> tuple[Arc, ...]:
    """All arcs of s that cross the given arc."""
    arc = Arc(*arc)
    if arc not in set(s.arcs):
        raise ArcNotInStructure(f"{tuple(arc)} not in structure")
    return tuple(other for other in s.arcs if other.crosses(arc))


def minimal_crossing_arcs(s: Structure, arc: Arc) -> tuple[Arc, ...]:
    """Nesting-minimal elements among the arcs crossing the given arc.

    An arc is minimal here when no other crossing arc nests strictly
    inside it.  The relation is not symmetric: a can be minimal among the
    arcs crossing b while b is not minimal among those crossing a.
    """
    crossing = crossing_set(s, arc)
    return tuple(
        a
        for a in crossing
        if not any(other.nests_inside(a) for other in crossing if other != a)
    )


def _stack_crossing_graph(sts: tuple[Stack, ...]) -> list[set[int]]:
    # All arcs of one stack relate identically to any other arc, so the
    # outer arcs decide stack-level crossing.
    graph: list[set[int]] = [set() for _ in sts]
    for a in range(len(sts)):
        for b in range(a + 1, len(sts)):
            if sts[a].outer.crosses(sts[b].outer):
                graph[a].add(b)
                graph[b].add(a)
    return graph


def _pseudoknot_stack_groups(sts: tuple[Stack, ...]) -> list[list[int]]:
    """Group stacks into pseudoknot arc sets.

    A stack joins a pseudoknot when it is a nesting-minimal element of
    the crossing set of some stack; stacks whose crossing partners are
    all witnessed by a strictly nested stack close standard loops
    instead.  The kept stacks split into connected components of the
    crossing graph, one pseudoknot loop each.
    """
    graph = _stack_crossing_graph(sts)
    witnessed: set[int] = set()
    for beta, crossing in enumerate(graph):
        for x in crossing:
            if not any(
                sts[y].outer.nests_inside(sts[x].outer) for y in crossing if y != x
            ):
                witnessed.add(x)
    groups: list[list[int]] = []
    seen: set[int] = set()
    for start in sorted(witnessed):
        if start in seen:
            continue
        component = [start]
        seen.add(start)
        todo = [start]
        while todo:
            for neigh in graph[todo.pop()]:
                if neigh in witnessed and neigh not in seen:
                    seen.add(neigh)
                    component.append(neigh)
                    todo.append(neigh)
        groups.append(sorted(component))
    return groups


def _unpaired_runs(positions: list[int]) -> tuple[tuple[int, int], ...]:
    runs: list[tuple[int, int]] = []
    for pos in positions:
        if runs and pos == runs[-1][1] + 1:
            runs[-1] = (runs[-1][0], pos)
        else:
            runs.append((pos, pos))
    return tuple(runs)


def decompose_loops(s: Structure) -> tuple[Loop, ...]:
    """Split a structure into its hairpin, interior, multi, and pseudoknot loops.

    Every arc belongs to exactly one loop and every unpaired position
    inside an arc is claimed by exactly one loop.  The result is sorted
    by leftmost position and is independent of the arc input order.
    """
    if not s.arcs:
        return ()
    sts = stacks(s)
    groups = _pseudoknot_stack_groups(sts)
    pk_arcs: set[Arc] = set()
    for group in groups:
        for idx in group:
            pk_arcs.update(sts[idx].arcs)

    partner = s.partner
    arcs = s.arcs
    loops: list[Loop] = []
    claimed: set[int] = set()

    for arc in arcs:
        if arc in pk_arcs:
            continue
        inside = [c for c in arcs if c.nests_inside(arc)]
        children = sorted(
            c
            for c in inside
            if not any(c.nests_inside(other) for other in inside if other != c)
        )
        gap_positions = [
            w
            for w in range(arc.i + 1, arc.j)
            if partner[w] == 0 and not any(c.i <= w <= c.j for c in children)
        ]
        intervals = _unpaired_runs(gap_positions)
        claimed.update(gap_positions)
        if not children:
            loops.append(Loop(HAIRPIN, (arc,), intervals, arc))
        elif len(children) == 1:
            loops.append(Loop(INTERIOR, (arc, children[0]), intervals, arc))
        else:
            loops.append(Loop(MULTI, (arc, *children), intervals, arc))

    # Pseudoknot loops claim the leftover unpaired positions inside their
    # span; with nested pseudoknots the innermost span wins.
    group_arcs = [
        tuple(sorted(a for idx in group for a in sts[idx].arcs)) for group in groups
    ]
    spans = [
        (min(a.i for a in p_arcs), max(a.j for a in p_arcs))
        for p_arcs in group_arcs
    ]
    order = sorted(
        range(len(group_arcs)),
        key=lambda g: (spans[g][1] - spans[g][0], spans[g][0]),
    )
    for g in order:
        p_arcs = group_arcs[g]
        lo, hi = spans[g]
        mine = [
            w
            for w in range(lo + 1, hi)
            if partner[w] == 0 and w not in claimed
        ]
        claimed.update(mine)
        loops.append(Loop(PSEUDOKNOT, p_arcs, _unpaired_runs(mine), None))

    owned = sorted(a for lp in loops for a in lp.owned_arcs)
    if owned != list(arcs):
        raise InvalidStructure(
            f"loop decomposition does not partition the {len(arcs)} arcs"
        )
    loops.sort(key=lambda lp: lp.span)
    return tuple(loops)


def _padded(span: tuple[int, int], s: Structure) -> tuple[int, int]:
    lo, hi = span
    partner = s.partner
    while lo > 1 and partner[lo - 1] == 0:
        lo -= 1
    while hi < s.n and partner[hi + 1] == 0:
        hi += 1
    return lo, hi


def _component_order(a: LoopComponent, b: LoopComponent) -> int:
    (al, ar), (bl, br) = a.span, b.span
    if (al, ar) != (bl, br):
        if bl <= al and ar <= br:
            return -1  # a nested in b
        if al <= bl and br <= ar:
            return 1
    if al != bl:
        return al - bl
    return ar - br


def order_loops(loops: tuple[Loop, ...], s: Structure) -> tuple[LoopComponent, ...]:
    """Group loops with their stems and put the components in search order.

    Nested components come first; otherwise the one starting further left
    does.  Stacked-pair loops travel with the content loop closed by the
    innermost arc of their stack.
    """
    sts = stacks(s)
    stack_by_arc = {arc: st for st in sts for arc in st.arcs}

    stem_links: dict[Stack, list[Loop]] = {}
    content: list[Loop] = []
    pk_loops: list[Loop] = []
    for loop in loops:
        if loop.kind == PSEUDOKNOT:
            pk_loops.append(loop)
        elif loop.is_stacked_pair:
            stem_links.setdefault(stack_by_arc[loop.closing_arc], []).append(loop)
        else:
            content.append(loop)

    components: list[LoopComponent] = []
    for loop in content:
        stem = stack_by_arc[loop.closing_arc]
        absorbed = tuple(sorted(stem_links.get(stem, []), key=lambda lp: lp.span))
        span = (stem.outer.i, stem.outer.j)
        components.append(
            LoopComponent(
                loop.kind, span, _padded(span, s), (*absorbed, loop), stem.arcs
            )
        )
    for loop in pk_loops:
        span = (loop.arcs[0].i, max(a.j for a in loop.arcs))
        components.append(
            LoopComponent(PSEUDOKNOT, span, _padded(span, s), (loop,), loop.arcs)
        )
        pk_stacks = sorted(
            {stack_by_arc[a] for a in loop.arcs}, key=lambda st: st.outer
        )
        for stack in pk_stacks:
            if stack.size >= 2:
                span = (stack.outer.i, stack.outer.j)
                components.append(
                    LoopComponent(HELIX, span, _padded(span, s), (), stack.arcs)
                )

    components.sort(key=functools.cmp_to_key(_component_order))
    return tuple(components)


def build_intervals(target: Structure) -> IntervalPlan:
    """Derive the interval ladder the local search walks.

    Each ordered component emits its span, its padded span when the
    padding added anything, and the running hull of all padded spans;
    consecutive duplicates are dropped.  The final interval always covers
    [1, n].
    """
    components = order_loops(decompose_loops(target), target)
    emitted: list[tuple[int, int]] = []

    def emit(interval: tuple[int, int]) -> None:
        if not emitted or emitted[-1] != interval:
            emitted.append(interval)

    hull: tuple[int, int] | None = None
    for comp in components:
        emit(comp.span)
        if comp.padded_span != comp.span:
            emit(comp.padded_span)
        if hull is None:
            hull = comp.padded_span
        else:
            hull = (
                min(hull[0], comp.padded_span[0]),
                max(hull[1], comp.padded_span[1]),
            )
        emit(hull)
    whole = (1, max(target.n, 1))
    if not emitted or emitted[-1] != whole:
        emit(whole)
    return IntervalPlan(components, tuple(emitted))
