"""Validation engine: certain typing, flooding with backtracking, a witness
verifier, and an exhaustive reference validator used as the oracle.

A run answers "can the requested typing be extended to a global typing
witness?", i.e. a consistent set of signed (node, shape) facts plus one local
witness per positive fact, closed under propagation, with negative facts
certified and EXTRA consumption genuinely violating the bypassed constraints.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    IncompatibleInitialTypingError,
    SearchBudgetExceededError,
    UnknownNodeError,
    ValidationError,
    WellDefinednessError,
)
from .matching import (
    DEFAULT_BAG_BOUND,
    candidate_count,
    candidate_witnesses,
    check_local_witness,
    propagation,
    value_satisfies,
)
from .rdf_graph import Graph
from .schema_model import (
    VALUE_SET_KINDS,
    ByConstraint,
    ExtraSlot,
    Schema,
    ShapeRef,
    check_well_defined,
    consumer_key,
    dependency_graph,
    iter_triple_constraints,
    negated_shape_labels,
    reachable_labels,
)

TypingEntry = tuple[str, str, str]  # (node id, shape label, '+' | '-')
Hypothesis = tuple[str, str]


def ensure_well_defined(schema: Schema) -> None:
    report = check_well_defined(schema)
    if report is not None:
        raise WellDefinednessError(report.label, list(report.cycle))


def check_compatible(t1: Iterable[TypingEntry], t2: Iterable[TypingEntry]) -> bool:
    """False iff some (node, shape) carries opposite signs across the typings."""
    signs1: dict[Hypothesis, set[str]] = {}
    for n, s, sign in t1:
        signs1.setdefault((n, s), set()).add(sign)
    for n, s, sign in t2:
        other = signs1.get((n, s))
        if other and ("+" if sign == "-" else "-") in other:
            return False
    return True


@dataclass(frozen=True)
class GlobalTypingWitness:
    typing: frozenset[TypingEntry]
    lw: Mapping[Hypothesis, Mapping[str, object]]

    def positives(self) -> tuple[Hypothesis, ...]:
        return tuple(sorted((n, s) for n, s, sign in self.typing if sign == "+"))


def witness_to_json(gtw: GlobalTypingWitness) -> str:
    """Bit-stable JSON rendering of a global typing witness."""
    typing_doc = [
        {"node": n, "shape": s, "sign": sign}
        for n, s, sign in sorted(gtw.typing)
    ]
    witnesses_doc = {
        f"{n}|{s}": {
            edge_id: consumer_key(consumer)
            for edge_id, consumer in sorted(lw.items())
        }
        for (n, s), lw in sorted(gtw.lw.items())
    }
    return json.dumps(
        {"typing": typing_doc, "witnesses": witnesses_doc}, indent=2, sort_keys=True
    ) + "\n"


# --- certain typing ----------------------------------------------------------

class CertainTyping:
    """Schema-forced decisions for every shape reachable from a negated one.

    Those shapes sit on an acyclic dependency region, so each (node, shape)
    question has a unique answer, decided recursively and memoized. Only the
    decisions on labels that actually occur negated are exposed as the
    certain typing; the rest of the region backs them internally.
    """

    def __init__(
        self,
        schema: Schema,
        graph: Graph,
        *,
        bag_bound: int = DEFAULT_BAG_BOUND,
        lookahead: bool = False,
    ):
        ensure_well_defined(schema)
        self.schema = schema
        self.graph = graph
        self.bag_bound = bag_bound
        self.lookahead = lookahead
        self.negated = frozenset(negated_shape_labels(schema))
        self.region = frozenset(reachable_labels(dependency_graph(schema), set(self.negated)))
        self._memo: dict[Hypothesis, tuple[bool, dict | None]] = {}

    def is_negated_label(self, label: str) -> bool:
        return label in self.negated

    def sign(self, node: str, label: str) -> bool:
        """True when (node, label) certainly holds; label must be in the region."""
        if label not in self.region:
            raise ValueError(f"<{label}> is not decided by the certain typing")
        key = (node, label)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._decide(node, label)
            self._memo[key] = hit
        return hit[0]

    def witness(self, node: str, label: str) -> dict:
        if not self.sign(node, label):
            raise KeyError(f"({node}, {label}) is certainly unsatisfied")
        return self._memo[(node, label)][1]

    def _decide(self, node: str, label: str) -> tuple[bool, dict | None]:
        shape_def = self.schema.shapes[label]
        for cand in candidate_witnesses(
            node, shape_def, self.graph, schema=self.schema, lookahead=self.lookahead
        ):
            if not check_local_witness(
                cand, node, shape_def, self.graph, bag_bound=self.bag_bound
            ):
                continue
            prop = propagation(cand, self.graph, shape_def)
            if all(self.sign(n2, l2) == (s2 == "+") for n2, l2, s2 in prop) and check_gtw_extra(
                self.schema, label, cand, self, self.graph
            ):
                return (True, cand)
        return (False, None)

    def decided_entries(self) -> frozenset[TypingEntry]:
        """The certain typing: every node decided against every negated label."""
        out = set()
        for label in sorted(self.negated):
            for node in self.graph.nodes:
                out.add((node, label, "+" if self.sign(node, label) else "-"))
        return frozenset(out)


def compute_certain_typing(graph: Graph, schema: Schema, **kwargs) -> CertainTyping:
    """Eagerly decide every node against every negated-occurring shape."""
    certain = CertainTyping(schema, graph, **kwargs)
    certain.decided_entries()
    return certain


def check_gtw_extra(
    schema: Schema, label: str, witness: Mapping[str, object], certain: CertainTyping, graph: Graph
) -> bool:
    """Every EXTRA-consumed edge must genuinely violate each same-property
    constraint: some value-set conjunct fails, or some shape conjunct is
    certainly decided the opposite way."""
    shape_def = schema.shapes[label]
    tcs = iter_triple_constraints(shape_def.expr)
    for edge_id, consumer in witness.items():
        if not isinstance(consumer, ExtraSlot):
            continue
        edge = graph.edge_by_id[edge_id]
        target_value = graph.val(edge.target)
        for tc in tcs:
            if tc.dprop != edge.dprop:
                continue
            violated = False
            for conj in tc.value_class:
                if isinstance(conj, VALUE_SET_KINDS):
                    if not value_satisfies(target_value, conj):
                        violated = True
                        break
                elif isinstance(conj, ShapeRef):
                    # need the flipped fact to be certain
                    if certain.sign(edge.target, conj.label) == conj.negated:
                        violated = True
                        break
            if not violated:
                return False
    return True


def _compatible_with_certain(prop: Iterable[TypingEntry], certain: CertainTyping) -> bool:
    for n, s, sign in prop:
        if certain.is_negated_label(s) and certain.sign(n, s) != (sign == "+"):
            return False
    return True


# --- the flooding engine -----------------------------------------------------

@dataclass
class TUC:
    """Typing witness under construction."""

    typing_hyp: set[TypingEntry] = field(default_factory=set)
    lw_hyp: dict[Hypothesis, dict] = field(default_factory=dict)
    requires: set[tuple[Hypothesis, Hypothesis]] = field(default_factory=set)
    to_check: deque[Hypothesis] = field(default_factory=deque)
    positions: dict[Hypothesis, int] = field(default_factory=dict)
    choice_log: list = field(default_factory=list)
    failures: list[tuple[str, str, int]] = field(default_factory=list)

    def positive_keys(self) -> set[Hypothesis]:
        return {(n, s) for n, s, sign in self.typing_hyp if sign == "+"}

    def snapshot(self, front: Hypothesis) -> dict:
        return {
            "typing_hyp": set(self.typing_hyp),
            "lw_hyp": dict(self.lw_hyp),
            "requires": set(self.requires),
            "to_check": [front, *self.to_check],
            "positions": dict(self.positions),
            "failures": list(self.failures),
        }

    def restore(self, snap: dict) -> None:
        self.typing_hyp = set(snap["typing_hyp"])
        self.lw_hyp = dict(snap["lw_hyp"])
        self.requires = set(snap["requires"])
        self.to_check = deque(snap["to_check"])
        self.positions = dict(snap["positions"])
        self.failures = list(snap["failures"])


def backtrack(failed: Hypothesis, tuc: TUC, protected: frozenset = frozenset()) -> None:
    """Retract the requirers of an unprovable hypothesis.

    Direct requirers are removed and re-enqueued with their next candidate;
    hypotheses whose every requirer got removed are dropped as orphans
    (except protected ones, i.e. the requested entries themselves); outside
    hypotheses that pointed into the removed set lose their witness and go
    back on the queue so their requirements get re-established.
    """
    direct = {a for (a, b) in tuc.requires if b == failed}
    removal = set(direct) | {failed}
    changed = True
    while changed:
        changed = False
        targets = {b for (_, b) in tuc.requires}
        for h in targets:
            if h in removal or h in protected:
                continue
            requirers = {a for (a, b) in tuc.requires if b == h}
            if requirers and requirers <= removal:
                removal.add(h)
                changed = True
    invalidated = sorted(
        {a for (a, b) in tuc.requires if b in removal and a not in removal}
    )
    for h in removal:
        tuc.typing_hyp.discard((h[0], h[1], "+"))
        tuc.lw_hyp.pop(h, None)
    tuc.requires = {
        (a, b) for (a, b) in tuc.requires if a not in removal and b not in removal
    }
    for h in sorted(direct):
        tuc.positions[h] = tuc.positions.get(h, 0) + 1
        tuc.typing_hyp.add((h[0], h[1], "+"))
        tuc.to_check.append(h)
    for h in invalidated:
        tuc.lw_hyp.pop(h, None)
        tuc.to_check.append(h)


def copy_proof(
    node: str,
    label: str,
    certain: CertainTyping,
    tuc: TUC,
    graph: Graph,
    schema: Schema,
) -> None:
    """Copy the stored proof of a certain fact, recursively."""
    key = (node, label)
    if key in tuc.lw_hyp:
        return
    witness = certain.witness(node, label)
    tuc.lw_hyp[key] = witness
    tuc.typing_hyp.add((node, label, "+"))
    for n2, l2, sign in sorted(propagation(witness, graph, schema.shapes[label])):
        tuc.typing_hyp.add((n2, l2, sign))
        if sign == "+":
            copy_proof(n2, l2, certain, tuc, graph, schema)


class _WitnessSource:
    """Lazily extended list of the local witnesses of one (node, shape) pair.

    The underlying candidate stream and the local-witness check do not depend
    on engine state, so one source can back every search branch.
    """

    def __init__(self, node, label, schema, graph, bag_bound, lookahead):
        shape_def = schema.shapes[label]
        self._iter = (
            cand
            for cand in candidate_witnesses(
                node, shape_def, graph, schema=schema, lookahead=lookahead
            )
            if check_local_witness(cand, node, shape_def, graph, bag_bound=bag_bound)
        )
        self._seen: list[dict] = []
        self._done = False

    def get(self, position: int) -> dict | None:
        while not self._done and len(self._seen) <= position:
            nxt = next(self._iter, None)
            if nxt is None:
                self._done = True
                break
            self._seen.append(nxt)
        return self._seen[position] if position < len(self._seen) else None


def _validate_typing0(
    typing0: Iterable[TypingEntry], graph: Graph, schema: Schema, certain: CertainTyping
) -> list[TypingEntry]:
    entries = []
    for entry in typing0:
        node, label, sign = entry
        if not graph.has_node(node):
            raise UnknownNodeError(f"requested node {node!r} is not in the graph")
        if label not in schema.shapes:
            raise ValueError(f"requested shape <{label}> is not in the schema")
        if sign not in ("+", "-"):
            raise ValueError(f"typing sign must be '+' or '-', got {sign!r}")
        if sign == "-" and not certain.is_negated_label(label):
            raise ValueError(
                f"negative assertions are only supported for negated-occurring"
                f" shapes, and <{label}> is not one"
            )
        if entry not in entries:
            entries.append(entry)
    return entries


def flooding_validation(
    schema: Schema,
    graph: Graph,
    typing0: Iterable[TypingEntry],
    *,
    certain: CertainTyping | None = None,
    bag_bound: int = DEFAULT_BAG_BOUND,
    lookahead: bool = False,
    stats: dict | None = None,
) -> GlobalTypingWitness:
    """Construct a global typing witness extending ``typing0``, or fail.

    Hypotheses are dequeued FIFO; certain facts are skipped and their proofs
    copied at the end; candidate witnesses stream lazily and are gated by the
    EXTRA condition and by compatibility of their propagation with the
    certain typing. A failed hypothesis triggers backtracking; if the run
    ends without covering ``typing0``, the most recent accepted choice with
    remaining candidates is restored and the search resumes, so the engine is
    complete relative to the declarative semantics.
    """
    ensure_well_defined(schema)
    if certain is None:
        certain = CertainTyping(schema, graph, bag_bound=bag_bound, lookahead=lookahead)
    if stats is None:
        stats = {}
    stats.setdefault("candidates_checked", {})
    stats.setdefault("cert_skips", 0)
    stats.setdefault("restores", 0)

    typing0_entries = _validate_typing0(typing0, graph, schema, certain)
    contradicting = [
        (n, s, sign)
        for n, s, sign in typing0_entries
        if certain.is_negated_label(s) and certain.sign(n, s) != (sign == "+")
    ]
    if contradicting:
        raise IncompatibleInitialTypingError(
            "the requested typing contradicts the certain typing",
            failed=contradicting,
        )

    protected = frozenset((n, s) for n, s, sign in typing0_entries if sign == "+")
    sources: dict[Hypothesis, _WitnessSource] = {}

    def source(key: Hypothesis) -> _WitnessSource:
        src = sources.get(key)
        if src is None:
            src = sources[key] = _WitnessSource(
                key[0], key[1], schema, graph, bag_bound, lookahead
            )
        return src

    tuc = TUC()
    tuc.typing_hyp = set(typing0_entries)
    tuc.to_check = deque(sorted(protected))

    while True:
        while tuc.to_check:
            key = tuc.to_check.popleft()
            if (key[0], key[1], "+") not in tuc.typing_hyp:
                continue  # removed while queued
            if key in tuc.lw_hyp:
                continue  # already established
            node, label = key
            if certain.is_negated_label(label):
                if certain.sign(node, label):
                    stats["cert_skips"] += 1
                    continue  # proof copied after the main loop
                tuc.failures.append((node, label, 0))
                backtrack(key, tuc, protected)
                continue
            position = tuc.positions.get(key, 0)
            witness = source(key).get(position)
            if witness is None:
                tuc.failures.append((node, label, position))
                backtrack(key, tuc, protected)
                continue
            stats["candidates_checked"][key] = stats["candidates_checked"].get(key, 0) + 1
            prop = propagation(witness, graph, schema.shapes[label])
            if check_gtw_extra(schema, label, witness, certain, graph) and _compatible_with_certain(
                prop, certain
            ):
                tuc.choice_log.append((tuc.snapshot(key), key, position))
                tuc.lw_hyp[key] = witness
                for n2, l2, sign in sorted(prop):
                    entry = (n2, l2, sign)
                    if entry not in tuc.typing_hyp:
                        tuc.typing_hyp.add(entry)
                        if sign == "+":
                            tuc.to_check.append((n2, l2))
                    if sign == "+":
                        tuc.requires.add((key, (n2, l2)))
            else:
                tuc.positions[key] = position + 1
                tuc.to_check.append(key)

        if all(entry in tuc.typing_hyp for entry in typing0_entries):
            break
        if not tuc.choice_log:
            missing = [e for e in typing0_entries if e not in tuc.typing_hyp]
            raise ValidationError(
                "no global typing witness extends the requested typing",
                failed=missing,
                exhausted=tuple(tuc.failures),
            )
        snap, key, position = tuc.choice_log.pop()
        tuc.restore(snap)
        tuc.positions[key] = position + 1
        stats["restores"] += 1

    for n, s, sign in sorted(tuc.typing_hyp):
        if sign == "+" and certain.is_negated_label(s) and certain.sign(n, s):
            copy_proof(n, s, certain, tuc, graph, schema)
    return GlobalTypingWitness(frozenset(tuc.typing_hyp), dict(tuc.lw_hyp))


def _certain_entries_for(
    entries: Iterable[TypingEntry], certain: CertainTyping
) -> list[TypingEntry]:
    out = []
    for n, s, _ in entries:
        if certain.is_negated_label(s):
            out.append((n, s, "+" if certain.sign(n, s) else "-"))
    return out


# --- independent verification --------------------------------------------------

def verify_global_typing_witness(
    candidate: GlobalTypingWitness,
    graph: Graph,
    schema: Schema,
    certain: CertainTyping,
    *,
    bag_bound: int = DEFAULT_BAG_BOUND,
) -> bool:
    """Check a claimed witness against the declarative conditions only."""
    signs: dict[Hypothesis, set[str]] = {}
    for n, s, sign in candidate.typing:
        if s not in schema.shapes or not graph.has_node(n):
            return False
        signs.setdefault((n, s), set()).add(sign)
    if any(len(v) > 1 for v in signs.values()):
        return False

    positives = {(n, s) for n, s, sign in candidate.typing if sign == "+"}
    if set(candidate.lw.keys()) != positives:
        return False

    for (n, s), witness in candidate.lw.items():
        shape_def = schema.shapes[s]
        if not check_local_witness(witness, n, shape_def, graph, bag_bound=bag_bound):
            return False
        if not propagation(witness, graph, shape_def) <= candidate.typing:
            return False
        if not check_gtw_extra(schema, s, witness, certain, graph):
            return False

    for n, s, sign in candidate.typing:
        if sign == "-":
            if not certain.is_negated_label(s) or certain.sign(n, s):
                return False
    return True


# --- exhaustive reference validator -------------------------------------------

def reference_validate(
    schema: Schema,
    graph: Graph,
    typing0: Iterable[TypingEntry],
    *,
    certain: CertainTyping | None = None,
    bag_bound: int = DEFAULT_BAG_BOUND,
    max_nodes: int = 12,
    max_candidates: int = 256,
    budget: int = 200_000,
) -> GlobalTypingWitness:
    """Depth-first search over all candidate witnesses, with full
    chronological backtracking. Slow, simple, and trusted as the oracle."""
    ensure_well_defined(schema)
    if len(graph.nodes) > max_nodes:
        raise SearchBudgetExceededError(
            f"{len(graph.nodes)} nodes exceed the reference bound of {max_nodes}"
        )
    if certain is None:
        certain = CertainTyping(schema, graph, bag_bound=bag_bound)
    typing0_entries = _validate_typing0(typing0, graph, schema, certain)
    steps = [budget]

    witness_lists: dict[Hypothesis, list[dict]] = {}

    def witnesses_for(key: Hypothesis) -> list[dict]:
        cached = witness_lists.get(key)
        if cached is not None:
            return cached
        node, label = key
        shape_def = schema.shapes[label]
        if candidate_count(node, shape_def, graph) > max_candidates:
            raise SearchBudgetExceededError(
                f"({node}, {label}) has more than {max_candidates} candidates"
            )
        usable = []
        for cand in candidate_witnesses(node, shape_def, graph):
            steps[0] -= 1
            if steps[0] < 0:
                raise SearchBudgetExceededError("reference search budget exhausted")
            if not check_local_witness(cand, node, shape_def, graph, bag_bound=bag_bound):
                continue
            prop = propagation(cand, graph, shape_def)
            if _compatible_with_certain(prop, certain) and check_gtw_extra(
                schema, label, cand, certain, graph
            ):
                usable.append(cand)
        witness_lists[key] = usable
        return usable

    def search(
        typing: frozenset[TypingEntry],
        lw: dict[Hypothesis, dict],
        pending: tuple[Hypothesis, ...],
    ) -> GlobalTypingWitness | None:
        if not pending:
            return GlobalTypingWitness(typing, lw)
        key, rest = pending[0], pending[1:]
        node, label = key
        for witness in witnesses_for(key):
            steps[0] -= 1
            if steps[0] < 0:
                raise SearchBudgetExceededError("reference search budget exhausted")
            prop = propagation(witness, graph, schema.shapes[label])
            new_typing = set(typing)
            new_pending = list(rest)
            ok = True
            for entry in sorted(prop):
                if entry in new_typing:
                    continue
                n2, l2, sign = entry
                opposite = (n2, l2, "+" if sign == "-" else "-")
                if opposite in new_typing:
                    ok = False
                    break
                new_typing.add(entry)
                if sign == "+":
                    new_pending.append((n2, l2))
            if not ok:
                continue
            new_lw = dict(lw)
            new_lw[key] = witness
            found = search(frozenset(new_typing), new_lw, tuple(new_pending))
            if found is not None:
                return found
        return None

    initial_typing = frozenset(typing0_entries)
    if not check_compatible(initial_typing, _certain_entries_for(typing0_entries, certain)):
        raise IncompatibleInitialTypingError(
            "the requested typing contradicts the certain typing",
            failed=list(typing0_entries),
        )
    pending = tuple(sorted({(n, s) for n, s, sign in typing0_entries if sign == "+"}))
    found = search(initial_typing, {}, pending)
    if found is None:
        raise ValidationError(
            "no global typing witness extends the requested typing (reference)",
            failed=list(typing0_entries),
        )
    assert verify_global_typing_witness(found, graph, schema, certain, bag_bound=bag_bound)
    return found
