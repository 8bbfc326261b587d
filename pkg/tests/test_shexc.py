from __future__ import annotations

import pytest

from shexd import json_to_schema, parse_schema, schema_to_json, schema_to_shexc
from shexd.errors import (
    DuplicateShapeLabelError,
    ParseError,
    SchemaJsonError,
    UndefinedShapeReferenceError,
    UnknownPrefixError,
)
from shexd.rdf_graph import XSD_INTEGER, XSD_STRING, DirectedProperty, Iri
from shexd.schema_model import (
    DatatypeSet,
    Empty,
    ExplicitSet,
    Group,
    NodeKind,
    Repetition,
    ShapeRef,
    SomeOf,
    TripleConstraint,
    iter_triple_constraints,
)

from conftest import DATA, IS

FOAF = "http://xmlns.com/foaf/0.1/"
PREAMBLE = (
    "PREFIX is: <http://issuetracker.example/ns#>\n"
    "PREFIX foaf: <http://xmlns.com/foaf/0.1/>\n"
    "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\n"
)


def test_parse_tester_shape():
    schema = parse_schema(PREAMBLE + "<TesterShape> { foaf:name xsd:string, is:role IRI }")
    expr = schema.shapes["TesterShape"].expr
    assert isinstance(expr, Group) and len(expr.children) == 2
    name_tc, role_tc = expr.children
    assert name_tc == TripleConstraint(1, DirectedProperty(FOAF + "name"), (DatatypeSet(XSD_STRING),))
    assert role_tc == TripleConstraint(2, DirectedProperty(IS + "role"), (NodeKind("IRI"),))


def test_parse_client_shape():
    schema = parse_schema(PREAMBLE + "<ClientShape> { is:clientNumber xsd:integer }")
    sd = schema.shapes["ClientShape"]
    assert not sd.closed_fwd and not sd.closed_inv and sd.extra == ()
    assert sd.expr == TripleConstraint(
        1, DirectedProperty(IS + "clientNumber"), (DatatypeSet(XSD_INTEGER),)
    )


def test_parse_explicit_interval():
    schema = parse_schema("PREFIX e: <http://e/>\n<S> { e:p @<T> [2;4] }\n<T> { }")
    expr = schema.shapes["S"].expr
    assert isinstance(expr, Repetition) and (expr.lo, expr.hi) == (2, 4)
    assert isinstance(expr.child, TripleConstraint)
    assert expr.child.value_class == (ShapeRef("T"),)


def test_parse_sugar_cardinalities():
    schema = parse_schema(
        "PREFIX e: <http://e/>\n<S> { e:a e:T *, e:b e:T +, e:c e:T ?, e:d e:T [1;*] }"
    )
    cards = [
        (c.lo, c.hi) for c in schema.shapes["S"].expr.children
    ]
    assert cards == [(0, None), (1, None), (0, 1), (1, None)]


def test_parse_value_set_and_negation():
    schema = parse_schema(
        PREAMBLE
        + "<P> { is:experience (is:senior is:junior) }\n"
        + "<L> { is:reportedBy !@<P> * }"
    )
    p_tc = schema.shapes["P"].expr
    assert p_tc.value_class == (ExplicitSet((Iri(IS + "senior"), Iri(IS + "junior"))),)
    l_rep = schema.shapes["L"].expr
    assert l_rep.child.value_class == (ShapeRef("P", negated=True),)


def test_parse_inverse_constraint_and_conjunction():
    schema = parse_schema(
        PREAMBLE + "<I> { ^is:affectedBy @<U> AND @<C> + }\n<U> { }\n<C> { }"
    )
    rep = schema.shapes["I"].expr
    tc = rep.child
    assert tc.dprop == DirectedProperty(IS + "affectedBy", inverse=True)
    assert tc.value_class == (ShapeRef("U"), ShapeRef("C"))


def test_parse_modifiers():
    schema = parse_schema(
        "PREFIX e: <http://e/>\n<S> CLOSED ^CLOSED EXTRA e:p ^e:q { e:p e:T }"
    )
    sd = schema.shapes["S"]
    assert sd.closed_fwd and sd.closed_inv
    assert sd.extra == (
        DirectedProperty("http://e/p"),
        DirectedProperty("http://e/q", inverse=True),
    )


def test_parse_empty_shape_forms():
    schema = parse_schema("PREFIX e: <http://e/>\n<A> { }\n<B> { EmptyShape }")
    assert schema.shapes["A"].expr == Empty()
    assert schema.shapes["B"].expr == Empty()


def test_comma_binds_tighter_than_bar():
    schema = parse_schema("PREFIX e: <http://e/>\n<S> { e:a e:T, e:b e:T | e:c e:T }")
    expr = schema.shapes["S"].expr
    assert isinstance(expr, SomeOf)
    assert isinstance(expr.children[0], Group)
    assert isinstance(expr.children[1], TripleConstraint)


def test_corpus_schema_shape_inventory():
    schema = parse_schema((DATA / "issues.shex").read_text())
    assert sorted(schema.shapes) == [
        "ClientShape",
        "IssueShape",
        "LowImpactIssueShape",
        "ProgrammerShape",
        "TesterShape",
        "UserShape",
    ]
    issue = schema.shapes["IssueShape"]
    assert issue.extra == (DirectedProperty(IS + "reproducedBy"),)
    assert [tc.tc_id for tc in iter_triple_constraints(issue.expr)] == [1, 2, 3, 4]


def test_tc_ids_are_stable_across_reparses():
    text = (DATA / "issues.shex").read_text()
    first = parse_schema(text)
    second = parse_schema(text)
    assert first.shapes == second.shapes


def test_duplicate_label_rejected():
    with pytest.raises(DuplicateShapeLabelError):
        parse_schema("PREFIX e: <http://e/>\n<S> { }\n<S> { }")


def test_undefined_reference_rejected():
    with pytest.raises(UndefinedShapeReferenceError):
        parse_schema("PREFIX e: <http://e/>\n<S> { e:p @<Missing> }")


def test_unknown_prefix_rejected():
    with pytest.raises(UnknownPrefixError):
        parse_schema("<S> { e:p IRI }")


def test_syntax_error_position():
    with pytest.raises(ParseError) as err:
        parse_schema("PREFIX e: <http://e/>\n<S> { e:p }")
    assert err.value.line == 2


def test_negative_cardinality_rejected():
    with pytest.raises(ParseError):
        parse_schema("PREFIX e: <http://e/>\n<S> { e:p e:T [-1;2] }")
    with pytest.raises(ParseError):
        parse_schema("PREFIX e: <http://e/>\n<S> { e:p e:T [3;1] }")


@pytest.mark.parametrize("name", ["issues.shex", "issues_noextra.shex", "boolean.shex"])
def test_json_round_trip_corpus(name):
    schema = parse_schema((DATA / name).read_text())
    again = json_to_schema(schema_to_json(schema))
    assert again.shapes == schema.shapes


def test_json_round_trip_preserves_modifiers():
    schema = parse_schema(
        "PREFIX e: <http://e/>\n<S> CLOSED EXTRA ^e:q { e:p (e:v 4 \"s\" _b) [0;3] }"
    )
    again = json_to_schema(schema_to_json(schema))
    assert again.shapes == schema.shapes
    doc = schema_to_json(schema)
    assert '"^http://e/q"' in doc


def test_json_kind_empty():
    schema = parse_schema("<E> { }")
    assert '"kind": "empty"' in schema_to_json(schema)


def test_json_unbounded_max_is_star():
    schema = parse_schema("PREFIX e: <http://e/>\n<S> { e:p e:T [2;*] }")
    assert '"max": "*"' in schema_to_json(schema)


@pytest.mark.parametrize(
    "mutate,path_bit",
    [
        ('{"shapes": []}', "$.shapes"),
        ('{"shapes": {"S": {"closed": false, "closedInv": false, "extra": [], '
         '"expr": {"kind": "wat"}}}}', "$.shapes.S.expr"),
        ('{"shapes": {"S": {"closed": false, "closedInv": false, "extra": [], '
         '"expr": {"kind": "repeat", "min": 3, "max": 1, '
         '"expr": {"kind": "empty"}}}}}', "$.shapes.S.expr"),
        ("not json", "$"),
    ],
)
def test_json_errors_carry_paths(mutate, path_bit):
    with pytest.raises(SchemaJsonError) as err:
        json_to_schema(mutate)
    assert err.value.path.startswith(path_bit[: len(err.value.path)]) or path_bit in str(err.value)


@pytest.mark.parametrize("name", ["issues.shex", "issues_noextra.shex", "boolean.shex"])
def test_reparse_of_emitted_shexc_is_identity(name):
    schema = parse_schema((DATA / name).read_text())
    again = parse_schema(schema_to_shexc(schema))
    assert again.shapes == schema.shapes
