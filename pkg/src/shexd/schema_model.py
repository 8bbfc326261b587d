"""Abstract syntax for shape schemas and the derived structural indices."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .errors import UndefinedShapeReferenceError
from .rdf_graph import DirectedProperty, Value


# --- value classes ----------------------------------------------------------

@dataclass(frozen=True)
class NodeKind:
    """One of the built-in node categories: IRI, BNode, Literal, NonLiteral."""

    kind: str


@dataclass(frozen=True)
class DatatypeSet:
    """All literals carrying the given datatype IRI (lexical check only)."""

    datatype: str


@dataclass(frozen=True)
class ExplicitSet:
    """An enumerated set of admissible values."""

    values: tuple[Value, ...]


@dataclass(frozen=True)
class ShapeRef:
    label: str
    negated: bool = False


AtomicConstr = NodeKind | DatatypeSet | ExplicitSet | ShapeRef
VALUE_SET_KINDS = (NodeKind, DatatypeSet, ExplicitSet)


# --- shape expressions ------------------------------------------------------

@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class TripleConstraint:
    tc_id: int
    dprop: DirectedProperty
    value_class: tuple[AtomicConstr, ...]


@dataclass(frozen=True)
class SomeOf:
    children: tuple["ShapeExpr", ...]


@dataclass(frozen=True)
class Group:
    children: tuple["ShapeExpr", ...]


@dataclass(frozen=True)
class Repetition:
    child: "ShapeExpr"
    lo: int
    hi: int | None  # None stands for an unbounded maximum

    def __post_init__(self):
        if self.hi is not None and self.lo > self.hi:
            raise ValueError(f"repetition [{self.lo};{self.hi}] has lo > hi")


ShapeExpr = Empty | TripleConstraint | SomeOf | Group | Repetition


@dataclass(frozen=True)
class ShapeDefinition:
    closed_fwd: bool = False
    closed_inv: bool = False
    extra: tuple[DirectedProperty, ...] = ()
    expr: ShapeExpr = Empty()


@dataclass
class Schema:
    shapes: dict[str, ShapeDefinition]
    prefixes: dict[str, str] = field(default_factory=dict)


# --- triple consumers -------------------------------------------------------

@dataclass(frozen=True)
class ByConstraint:
    tc_id: int


@dataclass(frozen=True)
class ExtraSlot:
    dprop: DirectedProperty


@dataclass(frozen=True)
class OpenSlot:
    pass


TripleConsumer = ByConstraint | ExtraSlot | OpenSlot
OPEN = OpenSlot()


def consumer_key(consumer: TripleConsumer) -> str:
    """Stable serialization of a consumer, used in witness documents."""
    if isinstance(consumer, ByConstraint):
        return f"C{consumer.tc_id}"
    if isinstance(consumer, ExtraSlot):
        return f"extra:{consumer.dprop.display()}"
    return "open"


@lru_cache(maxsize=None)
def iter_triple_constraints(expr: ShapeExpr) -> tuple[TripleConstraint, ...]:
    """All triple-constraint occurrences of ``expr`` in source order."""
    out: list[TripleConstraint] = []

    def walk(e: ShapeExpr) -> None:
        if isinstance(e, TripleConstraint):
            out.append(e)
        elif isinstance(e, (SomeOf, Group)):
            for child in e.children:
                walk(child)
        elif isinstance(e, Repetition):
            walk(e.child)

    walk(expr)
    return tuple(out)


def triple_consumers(shape_def: ShapeDefinition) -> tuple[TripleConsumer, ...]:
    """Consumers usable by a witness: one per constraint, per extra, plus open."""
    out: list[TripleConsumer] = [
        ByConstraint(tc.tc_id) for tc in iter_triple_constraints(shape_def.expr)
    ]
    out.extend(ExtraSlot(p) for p in sorted(shape_def.extra, key=DirectedProperty.display))
    out.append(OPEN)
    return tuple(out)


# --- dependency structure ---------------------------------------------------

def shape_refs(expr: ShapeExpr) -> tuple[ShapeRef, ...]:
    return tuple(
        ref
        for tc in iter_triple_constraints(expr)
        for ref in tc.value_class
        if isinstance(ref, ShapeRef)
    )


def dependency_graph(schema: Schema) -> dict[str, set[str]]:
    """Label -> labels referenced anywhere in its expression (any polarity)."""
    return {
        label: {ref.label for ref in shape_refs(sd.expr)}
        for label, sd in schema.shapes.items()
    }


def negated_shapes(schema: Schema, label: str) -> set[str]:
    """Labels that occur negated in one definition.

    A label counts as negated when it appears under ``!``, or when it is a
    conjunct of a triple constraint whose property is declared EXTRA (extra
    edges may consume such triples only by violating the constraint).
    """
    sd = schema.shapes[label]
    out: set[str] = set()
    extra = set(sd.extra)
    for tc in iter_triple_constraints(sd.expr):
        for conj in tc.value_class:
            if not isinstance(conj, ShapeRef):
                continue
            if conj.negated or tc.dprop in extra:
                out.add(conj.label)
    return out


def negated_shape_labels(schema: Schema) -> set[str]:
    out: set[str] = set()
    for label in schema.shapes:
        out |= negated_shapes(schema, label)
    return out


def reachable_labels(deps: dict[str, set[str]], start: set[str]) -> set[str]:
    seen = set()
    stack = sorted(start)
    while stack:
        label = stack.pop()
        if label in seen:
            continue
        seen.add(label)
        stack.extend(sorted(deps.get(label, ())))
    return seen


@dataclass(frozen=True)
class CycleReport:
    """A negated label together with one dependency cycle it can reach."""

    label: str
    cycle: tuple[str, ...]


def _find_cycle(deps: dict[str, set[str]], start: str) -> tuple[str, ...] | None:
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    path: list[str] = []

    def visit(label: str) -> tuple[str, ...] | None:
        state[label] = 1
        path.append(label)
        for nxt in sorted(deps.get(label, ())):
            mark = state.get(nxt)
            if mark == 1:
                return tuple(path[path.index(nxt):]) + (nxt,)
            if mark is None:
                found = visit(nxt)
                if found:
                    return found
        path.pop()
        state[label] = 2
        return None

    return visit(start)


def check_well_defined(schema: Schema) -> CycleReport | None:
    """None when every negated label reaches only acyclic dependencies."""
    deps = dependency_graph(schema)
    for label in sorted(negated_shape_labels(schema)):
        cycle = _find_cycle(deps, label)
        if cycle:
            return CycleReport(label, cycle)
    return None


def validate_references(schema: Schema) -> None:
    for label, sd in schema.shapes.items():
        for ref in shape_refs(sd.expr):
            if ref.label not in schema.shapes:
                raise UndefinedShapeReferenceError(
                    f"<{label}> references undefined shape <{ref.label}>"
                )


def lint_schema(schema: Schema) -> list[str]:
    """Non-fatal oddities: contradictions and idle EXTRA declarations."""
    warnings: list[str] = []
    for label, sd in sorted(schema.shapes.items()):
        tc_props = {tc.dprop for tc in iter_triple_constraints(sd.expr)}
        for p in sd.extra:
            if p not in tc_props:
                warnings.append(
                    f"<{label}>: EXTRA {p.display()} matches no triple constraint;"
                    " such edges are consumed freely"
                )
        for tc in iter_triple_constraints(sd.expr):
            refs = [c for c in tc.value_class if isinstance(c, ShapeRef)]
            by_label: dict[str, set[bool]] = {}
            for r in refs:
                by_label.setdefault(r.label, set()).add(r.negated)
            for ref_label, polarities in sorted(by_label.items()):
                if len(polarities) == 2:
                    warnings.append(
                        f"<{label}>: constraint C{tc.tc_id} conjoins @<{ref_label}>"
                        f" with !@<{ref_label}>; it can never be satisfied"
                    )
    return warnings
