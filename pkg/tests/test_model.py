import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from codedmr.errors import NonIntegerPK, NonIntegerRK, QNotDivisibleByK, RExceedsP, SpecError
from codedmr.model import (
    Assignment,
    JobSpec,
    MapOutcome,
    ReducerDistribution,
    canonical_reducers,
    generate_values,
    random_reducers,
    spec_from_fractions,
    validate_spec,
)


def test_example_spec_has_two_subfiles_per_batch():
    spec = spec_from_fractions(12, 4, 4, Fraction(1, 2), Fraction(1, 2), f=32)
    assert (spec.pk, spec.rk, spec.g, spec.n_padding) == (2, 2, 2, 0)
    assert spec.p == spec.r == Fraction(1, 2)


def test_short_input_is_padded_with_empty_subfiles():
    spec = spec_from_fractions(10, 4, 4, Fraction(1, 2), Fraction(1, 2))
    assert (spec.n, spec.n_input, spec.n_padding, spec.g) == (12, 10, 2, 2)
    values = generate_values(spec)
    assert not values[:, 10:].any()


@pytest.mark.parametrize("kwargs,exc", [
    (dict(n=12, q=4, k=4, p=Fraction(1, 2), r=Fraction(3, 4)), RExceedsP),
    (dict(n=12, q=4, k=4, p=Fraction(1, 3), r=Fraction(1, 4)), NonIntegerPK),
    (dict(n=12, q=4, k=4, p=Fraction(1, 2), r=Fraction(1, 3)), NonIntegerRK),
    (dict(n=12, q=5, k=4, p=Fraction(1, 2), r=Fraction(1, 2)), QNotDivisibleByK),
])
def test_invalid_fractions_are_rejected(kwargs, exc):
    with pytest.raises(exc):
        spec_from_fractions(**kwargs)


@pytest.mark.parametrize("field,value", [("n", 0), ("f", 0), ("pk", 5), ("rk", 0), ("mu", 0.0), ("seed", -1)])
def test_out_of_range_fields(field, value):
    base = dict(n=12, q=4, k=4, pk=2, rk=2)
    base[field] = value
    with pytest.raises(SpecError):
        validate_spec(JobSpec(**base))


def test_json_round_trip_keeps_integers():
    spec = validate_spec(JobSpec(n=10, q=8, k=4, pk=3, rk=2, f=5, mu=2.5, seed=9))
    d = json.loads(spec.to_json())
    assert set(d) == {"n", "q", "k", "pk", "rk", "f", "mu", "seed"}
    assert isinstance(d["pk"], int) and isinstance(d["rk"], int)
    again = validate_spec(JobSpec.from_json(spec.to_json()))
    assert again.to_dict() == spec.to_dict()


def test_from_dict_rejects_unknown_and_fractional_fields():
    with pytest.raises(SpecError):
        JobSpec.from_dict({"n": 1, "q": 1, "k": 1, "pk": 1, "rk": 1, "p": 0.5})
    with pytest.raises(SpecError):
        JobSpec.from_dict({"n": 1, "q": 1, "k": 1, "pk": 1.5, "rk": 1})
    with pytest.raises(SpecError):
        JobSpec.from_dict({"n": 1, "q": 1, "k": 1})


def test_conventional_variant_keeps_raw_size():
    spec = validate_spec(JobSpec(n=10, q=4, k=4, pk=2, rk=2))
    conv = spec.conventional()
    assert (conv.pk, conv.rk, conv.n_input, conv.n) == (1, 1, 10, 12)


@given(st.lists(st.lists(st.integers(1, 5), min_size=1, max_size=5, unique=True),
                min_size=1, max_size=12))
def test_assignment_views_round_trip(by_subfile):
    a = Assignment.from_by_subfile(by_subfile, 5)
    b = Assignment.from_by_server(a.by_server, a.n)
    assert a == b
    assert Assignment.from_dict(json.loads(json.dumps(a.to_dict())), a.n) == a
    assert sum(map(len, a.by_server)) == sum(map(len, by_subfile))


def test_assignment_rejects_disagreeing_views():
    with pytest.raises(ValueError):
        Assignment(by_server=((1,), ()), by_subfile=((2,),))


def _outcome():
    mappers = np.array([[1, 2], [2, 3], [1, 3]])
    values = np.arange(3 * 3 * 4, dtype=np.uint8).reshape(3, 3, 4) % 2
    return MapOutcome(mappers, values, 3)


def test_outcome_views_agree():
    o = _outcome()
    assert o.mappers_of_subfile == ((1, 2), (2, 3), (1, 3))
    assert o.mapped_by_server == ((1, 3), (1, 2), (2, 3))
    assert o.knows(1, 3) and not o.knows(1, 2)
    assert sum(map(len, o.mapped_by_server)) == o.rk * o.n


def test_local_values_refuse_unmapped_subfiles():
    o = _outcome()
    assert o.local_values(1, [2], [1, 3]).shape == (1, 2, 4)
    with pytest.raises(PermissionError):
        o.local_values(1, [1], [2])


@pytest.mark.parametrize("mappers", [[[2, 1]], [[1, 1]], [[0, 1]], [[1, 4]]])
def test_outcome_rejects_malformed_mapper_sets(mappers):
    with pytest.raises(ValueError):
        MapOutcome(np.array(mappers), np.zeros((1, 1, 1), np.uint8), 3)


def test_outcome_is_read_only():
    o = _outcome()
    with pytest.raises(ValueError):
        o.values[0, 0, 0] = 1


@pytest.mark.parametrize("q,k,expected", [
    (4, 4, ((1,), (2,), (3,), (4,))),
    (4, 2, ((1, 2), (3, 4))),
    (10, 10, tuple((i,) for i in range(1, 11))),
])
def test_canonical_reducers(q, k, expected):
    spec = validate_spec(JobSpec(n=k, q=q, k=k, pk=1, rk=1))
    assert canonical_reducers(spec).by_server == expected


@given(k=st.integers(1, 8), mult=st.integers(1, 4), seed=st.integers(0, 2**32))
def test_random_reducers_are_valid(k, mult, seed):
    spec = validate_spec(JobSpec(n=k, q=k * mult, k=k, pk=1, rk=1))
    w = random_reducers(spec, np.random.default_rng(seed))
    keys = sorted(q for ws in w.by_server for q in ws)
    assert keys == list(range(1, k * mult + 1))
    assert {len(ws) for ws in w.by_server} == {mult}


@pytest.mark.parametrize("by_server", [((1, 2), (3,)), ((1, 2), (2, 3)), ((1,), (3,))])
def test_reducer_distribution_conditions(by_server):
    with pytest.raises(ValueError):
        ReducerDistribution(by_server)


def test_values_depend_only_on_seed():
    a = validate_spec(JobSpec(n=6, q=2, k=2, pk=1, rk=1, f=12, seed=4))
    b = validate_spec(JobSpec(n=6, q=2, k=2, pk=2, rk=1, f=12, seed=4))
    assert np.array_equal(generate_values(a), generate_values(b))
    c = validate_spec(JobSpec(n=6, q=2, k=2, pk=1, rk=1, f=12, seed=5))
    assert not np.array_equal(generate_values(a), generate_values(c))
    assert generate_values(a).shape[2] == 12
