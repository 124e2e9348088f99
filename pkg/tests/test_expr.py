import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finslercurv.errors import ParseError, UnknownSymbol
from finslercurv.expr import FUNCTIONS, Bin, Call, Neg, Num, Sym, evaluate, parse, to_string


@pytest.mark.parametrize("text, env, value", [
    ("2 + cos(theta)", {"theta": 0.0}, 3.0),
    ("1 + 2 * 3", {}, 7.0),
    ("2 ^ 3 ^ 2", {}, 512.0),
    ("-2 ^ 2", {}, -4.0),
    ("2 ** 3", {}, 8.0),
    ("exp(t) * ln(e)", {"t": 1.0}, math.e),
    ("sqrt(x1^2 + x2^2)", {"x1": 3.0, "x2": 4.0}, 5.0),
    ("pi / 2", {}, math.pi / 2),
    ("(1 - x) / (1 + x)", {"x": 0.5}, 1 / 3),
    ("1.5e-3 * 2", {}, 3e-3),
])
def test_evaluates(text, env, value):
    assert float(evaluate(parse(text), env)) == pytest.approx(value, rel=1e-14)


def test_unknown_symbol_located():
    with pytest.raises(UnknownSymbol) as ei:
        parse("1 + cos(phi)", {"theta"})
    (line, col, msg) = ei.value.errors[0]
    assert col == 9 and "phi" in msg


def test_unknown_function_located():
    with pytest.raises(UnknownSymbol) as ei:
        parse("2 + coss(t)")
    assert ei.value.errors[0][1] == 5


@pytest.mark.parametrize("bad", ["1 +", "(1 + 2", "2 $ 3", "sin", "1 2", ""])
def test_syntax_errors(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_trees_are_hashable_and_equal():
    a, b = parse("x^2 + sin(y)"), parse("x ^ 2 + sin( y )")
    assert a == b and hash(a) == hash(b)
    assert a.symbols() == {"x", "y"}


names = st.sampled_from(["x", "y", "theta"])
leaves = st.one_of(st.floats(-50, 50, allow_nan=False).map(Num), names.map(Sym))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: Bin(*t)),
        st.tuples(st.sampled_from(sorted(FUNCTIONS)), children).map(lambda t: Call(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
def test_printer_round_trip(tree):
    # after one pass through the parser, printing and parsing are exact inverses
    canon = parse(to_string(tree))
    again = parse(to_string(canon))
    assert again == canon
    env = {"x": 0.3, "y": -0.7, "theta": 1.1}
    with np.errstate(all="ignore"):
        a, b = float(tree.eval(env)), float(again.eval(env))
    assert (math.isnan(a) and math.isnan(b)) or a == b


@given(st.text(alphabet="xy+-*/^() 0123456789.sincoexpl", max_size=25))
def test_parser_never_crashes_unexpectedly(text):
    try:
        parse(text)
    except ParseError:
        pass
