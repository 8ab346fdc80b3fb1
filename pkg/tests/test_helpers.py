"""Tests for the shared helpers: rationals, bitmasks, seeded streams, errors.

Test categories:
  - property_based: bitmask round trips and stream determinism
  - unit: known input/output pairs
  - negative: exit codes carried by the error hierarchy
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import constants
from modules.helpers import (CapExceededError, InvalidInputError, PreconditionError, VerificationError, as_fraction,
                             bits, fraction_json, mask_of, pmap, popcount, rng_for)


@pytest.mark.property_based
@given(st.sets(st.integers(0, 200), max_size=40))
@settings(max_examples=100)
def test_mask_bits_agree(indices):
    """bits(mask_of(S)) lists S in ascending order and popcount counts it."""
    mask = mask_of(indices)
    assert bits(mask) == sorted(indices)
    assert popcount(mask) == len(indices)


@pytest.mark.property_based
@given(st.integers(0, 2 ** 32 - 1), st.text(min_size=1, max_size=8))
@settings(max_examples=30)
def test_rng_streams_are_reproducible(seed, name):
    """The same (seed, name) gives the same draws."""
    a = rng_for(seed, name).integers(0, 1000, size=5).tolist()
    b = rng_for(seed, name).integers(0, 1000, size=5).tolist()
    assert a == b


def test_rng_streams_differ_by_name():
    """Different stream names give different draws for one seed."""
    a = rng_for(7, 'left').integers(0, 2 ** 31, size=4).tolist()
    b = rng_for(7, 'right').integers(0, 2 ** 31, size=4).tolist()
    assert a != b


def test_as_fraction_known_values():
    """Strings, ints and floats become exact rationals."""
    assert as_fraction('1/20') == Fraction(1, 20)
    assert as_fraction('0.05') == Fraction(1, 20)
    assert as_fraction(3) == Fraction(3)
    assert as_fraction(0.5) == Fraction(1, 2)


def test_fraction_json_shape():
    """Reports carry the exact rational and its float."""
    assert fraction_json(Fraction(2, 6)) == {'exact': '1/3', 'value': 1 / 3}
    assert fraction_json(0) == {'exact': '0/1', 'value': 0.0}


def test_pmap_preserves_order():
    """Parallel map returns results in input order."""
    assert pmap(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]
    assert pmap(lambda x: x + 1, [], threads=4) == []


def test_error_exit_codes():
    """Each error class maps to its exit code."""
    assert InvalidInputError('x').exit_code == constants.EXIT_USAGE
    assert PreconditionError('x').exit_code == constants.EXIT_USAGE
    assert CapExceededError('x').exit_code == constants.EXIT_CAP
    assert VerificationError('x').exit_code == constants.EXIT_VERIFICATION


def test_invalid_input_carries_line():
    """A line number is prefixed to the message."""
    e = InvalidInputError('bad edge', line=4)
    assert str(e) == 'line 4: bad edge'
    assert e.line == 4
