"""Edge/consumer matching and multiset membership for shape expressions.

A node's neighbourhood satisfies a shape definition when every edge can be
assigned a triple consumer (a specific constraint occurrence, an EXTRA slot,
or the open slot) such that the constraint-consumed edges, read as a bag of
constraint ids, belong to the expression's language. Bag membership is
decided by an interval computation on single-occurrence expressions and by
exhaustive search otherwise.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping

from .errors import BagTooLargeError, NotSingleOccurrenceError
from .rdf_graph import BlankValue, Edge, Graph, Iri, Literal, Value
from .schema_model import (
    VALUE_SET_KINDS,
    AtomicConstr,
    ByConstraint,
    DatatypeSet,
    Empty,
    ExplicitSet,
    ExtraSlot,
    Group,
    NodeKind,
    OpenSlot,
    Repetition,
    Schema,
    ShapeDefinition,
    ShapeExpr,
    ShapeRef,
    SomeOf,
    TripleConstraint,
    iter_triple_constraints,
)

DEFAULT_BAG_BOUND = 16

LocalWitness = Mapping[str, object]  # edge id -> TripleConsumer
ConsumerBag = Counter  # ByConstraint id -> multiplicity


# --- atomic value checks ----------------------------------------------------

def value_satisfies(value: Value, atomic: AtomicConstr) -> bool:
    """Does a node value belong to a value-set constraint?"""
    if isinstance(atomic, ShapeRef):
        raise TypeError("shape constraints are checked by propagation, not here")
    if isinstance(atomic, NodeKind):
        if atomic.kind == "IRI":
            return isinstance(value, Iri)
        if atomic.kind == "BNode":
            return isinstance(value, BlankValue)
        if atomic.kind == "Literal":
            return isinstance(value, Literal)
        return isinstance(value, (Iri, BlankValue))  # NonLiteral
    if isinstance(atomic, DatatypeSet):
        return isinstance(value, Literal) and value.datatype == atomic.datatype
    members = atomic.values
    if isinstance(value, BlankValue):
        return any(isinstance(m, BlankValue) for m in members)
    return value in members


@lru_cache(maxsize=None)
def _tc_by_id(shape_def: ShapeDefinition) -> dict[int, TripleConstraint]:
    return {tc.tc_id: tc for tc in iter_triple_constraints(shape_def.expr)}


def edge_matches(edge: Edge, consumer, shape_def: ShapeDefinition, graph: Graph) -> bool:
    """Can this edge be consumed by the given constraint or EXTRA slot?

    Shape-constraint conjuncts are deliberately ignored: they are enforced
    globally through propagation.
    """
    if isinstance(consumer, OpenSlot):
        raise TypeError("the open slot is never matched edge-wise")
    if isinstance(consumer, ExtraSlot):
        return edge.dprop == consumer.dprop
    tc = _tc_by_id(shape_def).get(consumer.tc_id)
    if tc is None or tc.dprop != edge.dprop:
        return False
    target_value = graph.val(edge.target)
    return all(
        value_satisfies(target_value, conj)
        for conj in tc.value_class
        if isinstance(conj, VALUE_SET_KINDS)
    )


# --- candidate enumeration --------------------------------------------------

def matching_consumers(
    edge: Edge,
    shape_def: ShapeDefinition,
    graph: Graph,
    *,
    schema: Schema | None = None,
    lookahead: bool = False,
) -> list:
    """Consumers this edge may be assigned: constraints by ascending id, then
    the EXTRA slot; just the open slot when the property is unmentioned."""
    tcs = iter_triple_constraints(shape_def.expr)
    mentioned = any(tc.dprop == edge.dprop for tc in tcs)
    is_extra = edge.dprop in shape_def.extra
    if not mentioned and not is_extra:
        return [OpenSlot()]
    out: list = [
        ByConstraint(tc.tc_id)
        for tc in sorted(tcs, key=lambda t: t.tc_id)
        if edge_matches(edge, ByConstraint(tc.tc_id), shape_def, graph)
    ]
    if is_extra:
        out.append(ExtraSlot(edge.dprop))
    if lookahead and schema is not None:
        out = lookahead_prune(out, edge, shape_def, schema, graph)
    return out


def candidate_witnesses(
    node: str,
    shape_def: ShapeDefinition,
    graph: Graph,
    *,
    schema: Schema | None = None,
    lookahead: bool = False,
) -> Iterator[dict]:
    """Lazily enumerate total edge-to-consumer assignments.

    Candidates come out in lexicographic order over the canonical edge
    ordering, so the whole engine is deterministic.
    """
    edges = graph.neighbourhood(node)
    lists = [
        matching_consumers(e, shape_def, graph, schema=schema, lookahead=lookahead)
        for e in edges
    ]
    ids = [e.id for e in edges]
    for combo in itertools.product(*lists):
        yield dict(zip(ids, combo))


def candidate_count(
    node: str,
    shape_def: ShapeDefinition,
    graph: Graph,
    *,
    schema: Schema | None = None,
    lookahead: bool = False,
) -> int:
    count = 1
    for e in graph.neighbourhood(node):
        count *= len(matching_consumers(e, shape_def, graph, schema=schema, lookahead=lookahead))
    return count


# --- look-ahead pruning -----------------------------------------------------

def required_dprops(schema: Schema, label: str):
    """Directed properties that every satisfying neighbourhood must exhibit."""

    def req(expr: ShapeExpr) -> frozenset:
        if isinstance(expr, TripleConstraint):
            return frozenset((expr.dprop,))
        if isinstance(expr, Group):
            return frozenset().union(*(req(c) for c in expr.children))
        if isinstance(expr, SomeOf):
            parts = [req(c) for c in expr.children]
            return frozenset.intersection(*parts)
        if isinstance(expr, Repetition):
            return req(expr.child) if expr.lo >= 1 else frozenset()
        return frozenset()

    return req(schema.shapes[label].expr)


def lookahead_prune(
    consumers: list, edge: Edge, shape_def: ShapeDefinition, schema: Schema, graph: Graph
) -> list:
    """Drop constraints whose positively referenced shapes visibly cannot hold
    at the opposite node (a required property is absent from its
    neighbourhood). Never drops anything a valid witness could use."""
    tc_index = _tc_by_id(shape_def)
    target_props = {e.dprop for e in graph.neighbourhood(edge.target)}
    out = []
    for consumer in consumers:
        if isinstance(consumer, ByConstraint):
            tc = tc_index[consumer.tc_id]
            if _tc_visibly_impossible(tc, target_props, schema):
                continue
        out.append(consumer)
    return out


def _tc_visibly_impossible(tc: TripleConstraint, target_props: set, schema: Schema) -> bool:
    for conj in tc.value_class:
        if isinstance(conj, ShapeRef) and not conj.negated:
            if required_dprops(schema, conj.label) - target_props:
                return True
    return False


# --- repetition unfolding ---------------------------------------------------

_ALLOWED_COMPOUND_CARDS = {(0, 1), (0, None), (1, None)}


@lru_cache(maxsize=None)
def unfold_repetitions(expr: ShapeExpr) -> ShapeExpr:
    """Rewrite compound repetitions into the three supported interval forms.

    ``E[m;n]`` on a non-constraint ``E`` becomes m mandatory copies followed
    by optional copies (``E[0;1]`` tails, or one ``E[0;∞]`` tail for an
    unbounded maximum). Repetitions directly on triple constraints are kept.
    """
    if isinstance(expr, (Empty, TripleConstraint)):
        return expr
    if isinstance(expr, SomeOf):
        return SomeOf(tuple(unfold_repetitions(c) for c in expr.children))
    if isinstance(expr, Group):
        return Group(tuple(unfold_repetitions(c) for c in expr.children))
    child = unfold_repetitions(expr.child)
    if isinstance(child, TripleConstraint) or (expr.lo, expr.hi) in _ALLOWED_COMPOUND_CARDS:
        return Repetition(child, expr.lo, expr.hi)
    copies: list[ShapeExpr] = [child] * expr.lo
    if expr.hi is None:
        copies.append(Repetition(child, 0, None))
    else:
        copies.extend([Repetition(child, 0, 1)] * (expr.hi - expr.lo))
    if not copies:
        return Empty()
    if len(copies) == 1:
        return copies[0]
    return Group(tuple(copies))


def is_single_occurrence(expr: ShapeExpr) -> bool:
    counts = Counter(tc.tc_id for tc in iter_triple_constraints(expr))
    return all(c == 1 for c in counts.values())


# --- the interval computation -----------------------------------------------

@dataclass(frozen=True)
class Interval:
    """A possibly empty, possibly right-unbounded interval of naturals."""

    lo: int = 1
    hi: int | None = 0  # the default (1, 0) is the canonical empty interval

    @property
    def is_empty(self) -> bool:
        return self.hi is not None and self.lo > self.hi

    def contains(self, n: int) -> bool:
        return not self.is_empty and self.lo <= n and (self.hi is None or n <= self.hi)

    def intersect(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return EMPTY_INTERVAL
        lo = max(self.lo, other.lo)
        if self.hi is None:
            hi = other.hi
        elif other.hi is None:
            hi = self.hi
        else:
            hi = min(self.hi, other.hi)
        return Interval(lo, hi)

    def shift_sum(self, other: "Interval") -> "Interval":
        """Minkowski sum."""
        if self.is_empty or other.is_empty:
            return EMPTY_INTERVAL
        hi = None if self.hi is None or other.hi is None else self.hi + other.hi
        return Interval(self.lo + other.lo, hi)


EMPTY_INTERVAL = Interval(1, 0)
FULL_INTERVAL = Interval(0, None)


def _alphabet(expr: ShapeExpr) -> frozenset[int]:
    return frozenset(tc.tc_id for tc in iter_triple_constraints(expr))


def _repetition_counts(child: Interval, lo: int, hi: int | None) -> Interval:
    """Numbers n of repetitions such that some m in ``child`` fits n*lo <= m <= n*hi."""
    if child.is_empty:
        return EMPTY_INTERVAL
    a, b = child.lo, child.hi
    if a == 0:
        out_lo = 0
    elif hi is None:
        out_lo = 1
    elif hi == 0:
        return EMPTY_INTERVAL  # n*0 can never reach a positive m
    else:
        out_lo = -(-a // hi)
    out_hi = None if lo == 0 or b is None else b // lo
    if out_hi is not None and out_lo > out_hi:
        return EMPTY_INTERVAL
    return Interval(out_lo, out_hi)


def interval(expr: ShapeExpr, bag: Mapping[int, int]) -> Interval:
    """All n with bag ∈ L(expr)^n, for single-occurrence unfolded expressions.

    Raises :class:`NotSingleOccurrenceError` when a constraint id occurs more
    than once; callers then fall back to :func:`brute_match`.
    """
    if not is_single_occurrence(expr):
        raise NotSingleOccurrenceError("expression repeats a constraint id")
    counts = {sym: c for sym, c in bag.items() if c > 0}
    if set(counts) - _alphabet(expr):
        return EMPTY_INTERVAL
    return _interval(expr, counts)


def _interval(expr: ShapeExpr, bag: dict[int, int]) -> Interval:
    if isinstance(expr, Empty):
        return FULL_INTERVAL  # its restricted bag is always empty
    if isinstance(expr, TripleConstraint):
        c = bag.get(expr.tc_id, 0)
        return Interval(c, c)
    if isinstance(expr, Repetition):
        return _repetition_counts(_interval(expr.child, bag), expr.lo, expr.hi)
    restricted = [
        (child, {s: c for s, c in bag.items() if s in _alphabet(child)})
        for child in expr.children
    ]
    if isinstance(expr, Group):
        out = FULL_INTERVAL
        for child, sub in restricted:
            out = out.intersect(_interval(child, sub))
        return out
    out = Interval(0, 0)
    for child, sub in restricted:
        out = out.shift_sum(_interval(child, sub))
    return out


# --- exhaustive bag matching ------------------------------------------------

def brute_match(expr: ShapeExpr, bag: Mapping[int, int], bound: int = DEFAULT_BAG_BOUND) -> bool:
    """Exact bag membership by exhaustive search; the independent oracle.

    Handles arbitrary cardinalities and duplicated constraint ids. Bags
    larger than ``bound`` raise :class:`BagTooLargeError`.
    """
    items = tuple(sorted((s, c) for s, c in bag.items() if c > 0))
    total = sum(c for _, c in items)
    if total > bound:
        raise BagTooLargeError(f"bag of {total} exceeds the bound of {bound}")
    memo: dict = {}
    part_memo: dict = {}

    def match(e: ShapeExpr, b: tuple) -> bool:
        key = (e, b)
        hit = memo.get(key)
        if hit is not None:
            return hit
        memo[key] = result = _match(e, b)
        return result

    def _match(e: ShapeExpr, b: tuple) -> bool:
        if isinstance(e, Empty):
            return b == ()
        if isinstance(e, TripleConstraint):
            return b == ((e.tc_id, 1),)
        if isinstance(e, SomeOf):
            return any(match(c, b) for c in e.children)
        if isinstance(e, Group):
            return _match_group(e, b)
        return _match_repetition(e, b)

    def _match_group(e: Group, b: tuple) -> bool:
        alphabets = [_alphabet(c) for c in e.children]
        forced: list[dict[int, int]] = [dict() for _ in e.children]
        shared: list[tuple[int, int, list[int]]] = []
        for sym, cnt in b:
            owners = [i for i, alpha in enumerate(alphabets) if sym in alpha]
            if not owners:
                return False
            if len(owners) == 1:
                forced[owners[0]][sym] = cnt
            else:
                shared.append((sym, cnt, owners))

        def assign(idx: int, parts: list[dict[int, int]]) -> bool:
            if idx == len(shared):
                return all(
                    match(child, tuple(sorted(part.items())))
                    for child, part in zip(e.children, parts)
                )
            sym, cnt, owners = shared[idx]
            for split in _compositions(cnt, len(owners)):
                for owner, amount in zip(owners, split):
                    if amount:
                        parts[owner][sym] = amount
                if assign(idx + 1, parts):
                    return True
                for owner in owners:
                    parts[owner].pop(sym, None)
            return False

        return assign(0, forced)

    def _match_repetition(e: Repetition, b: tuple) -> bool:
        if not b:
            return e.lo == 0 or match(e.child, ())
        total_b = sum(c for _, c in b)
        empty_ok = match(e.child, ())
        max_k = total_b if e.hi is None else min(e.hi, total_b)
        for k in range(1, max_k + 1):
            if e.lo <= k or empty_ok:  # pad with empty parts up to lo when allowed
                if _nonempty_partition(e.child, b, k):
                    return True
        return False

    def _nonempty_partition(child: ShapeExpr, b: tuple, k: int) -> bool:
        key = (child, b, k)
        hit = part_memo.get(key)
        if hit is not None:
            return hit
        part_memo[key] = result = _nonempty_partition_search(child, b, k)
        return result

    def _nonempty_partition_search(child: ShapeExpr, b: tuple, k: int) -> bool:
        if k == 0:
            return b == ()
        if not b:
            return False
        anchor = b[0][0]
        for sub in _sub_bags(b, anchor):
            if match(child, sub):
                rest = _bag_minus(b, sub)
                if _nonempty_partition(child, rest, k - 1):
                    return True
        return False

    return match(expr, items)


def _compositions(total: int, parts: int):
    """All ways to split ``total`` into ``parts`` ordered non-negative summands."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _sub_bags(b: tuple, anchor: int):
    """Sub-bags of ``b`` that contain the anchor symbol at least once."""
    syms = [s for s, _ in b]
    counts = [c for _, c in b]
    ranges = [
        range(1, c + 1) if s == anchor else range(0, c + 1)
        for s, c in zip(syms, counts)
    ]
    for chosen in itertools.product(*ranges):
        yield tuple((s, c) for s, c in zip(syms, chosen) if c > 0)


def _bag_minus(b: tuple, sub: tuple) -> tuple:
    taken = dict(sub)
    return tuple((s, c - taken.get(s, 0)) for s, c in b if c - taken.get(s, 0) > 0)


def bag_matches(
    shape_expr: ShapeExpr, bag: Mapping[int, int], bound: int = DEFAULT_BAG_BOUND
) -> bool:
    """Decide bag membership: interval fast path, exhaustive fallback."""
    unfolded = unfold_repetitions(shape_expr)
    if is_single_occurrence(unfolded):
        return interval(unfolded, bag).contains(1)
    return brute_match(shape_expr, bag, bound)


# --- the local witness check ------------------------------------------------

def check_local_witness(
    witness: LocalWitness,
    node: str,
    shape_def: ShapeDefinition,
    graph: Graph,
    *,
    bag_bound: int = DEFAULT_BAG_BOUND,
) -> bool:
    """Is this total assignment a local witness for node vs. shape?

    Checks, in order: assigned consumers actually match their edges; EXTRA
    consumption is not hiding a fully satisfied value-only constraint; open
    edges carry genuinely unmentioned properties; CLOSED / ^CLOSED exclude
    open forward / inverse edges; and the constraint-consumed restriction
    satisfies the shape expression as a bag.
    """
    edges = graph.neighbourhood(node)
    if set(witness.keys()) != {e.id for e in edges}:
        return False
    tcs = iter_triple_constraints(shape_def.expr)
    bag: Counter = Counter()
    for edge in edges:
        consumer = witness[edge.id]
        if isinstance(consumer, OpenSlot):
            if any(tc.dprop == edge.dprop for tc in tcs) or edge.dprop in shape_def.extra:
                return False
            if shape_def.closed_fwd and not edge.dprop.inverse:
                return False
            if shape_def.closed_inv and edge.dprop.inverse:
                return False
            continue
        if not edge_matches(edge, consumer, shape_def, graph):
            return False
        if isinstance(consumer, ExtraSlot):
            for tc in tcs:
                if all(isinstance(c, VALUE_SET_KINDS) for c in tc.value_class) and edge_matches(
                    edge, ByConstraint(tc.tc_id), shape_def, graph
                ):
                    return False
        else:
            bag[consumer.tc_id] += 1
    return bag_matches(shape_def.expr, bag, bag_bound)


def propagation(witness: LocalWitness, graph: Graph, shape_def: ShapeDefinition) -> frozenset:
    """Typing requirements a witness imposes on the opposite nodes."""
    tc_index = _tc_by_id(shape_def)
    out = set()
    for edge_id, consumer in witness.items():
        if not isinstance(consumer, ByConstraint):
            continue
        edge = graph.edge_by_id[edge_id]
        for conj in tc_index[consumer.tc_id].value_class:
            if isinstance(conj, ShapeRef):
                out.add((edge.target, conj.label, "-" if conj.negated else "+"))
    return frozenset(out)
