import json
from fractions import Fraction
from pathlib import Path

import pytest

from utils.errors import SpecError
from utils.itinerary import ZERO_SEQUENCE, PeriodicTail, WitnessTail, constant_sequence, magnitude_at, witness_sequence
from utils.sigma_model import ErdosPoint
from utils.spec_parser import (
    load_json_arg,
    load_seq_spec,
    parse_basis,
    parse_seq_spec,
    parse_sigma_point,
    parse_tower,
    seq_to_spec,
)
from utils.tower_arith import FApp, Lit, fapp, inc

GOLDEN = Path(__file__).parent / "golden"


class TestTowerText:
    def test_literals_and_applications(self):
        assert parse_tower("26") == Lit(26)
        assert parse_tower("F^2(1)") == Lit(8)
        assert parse_tower("F^ 10 ( 26 )") == FApp(10, Lit(26))
        assert parse_tower("F^2(26)+1") == inc(fapp(2, Lit(26)), 1)
        assert parse_tower(7) == Lit(7)

    @pytest.mark.parametrize(
        "text, column",
        [
            ("F^0(1)", 3),
            ("F^2(1", 6),
            ("3 x", 3),
            ("1-2", 3),
        ],
    )
    def test_errors_carry_column(self, text, column):
        with pytest.raises(SpecError) as e:
            parse_tower(text, "mag")
        assert f"mag: column {column}" in str(e.value)

    def test_non_text(self):
        with pytest.raises(SpecError):
            parse_tower([1])


class TestSequenceSpecs:
    @pytest.mark.parametrize("name", ["zero", "canonical_0_1", "mixed_prefix", "replaced_tail"])
    def test_golden_files_round_trip(self, name):
        path = GOLDEN / f"{name}.json"
        expected = json.loads(path.read_text(encoding="utf-8"))
        assert seq_to_spec(load_seq_spec(str(path))) == expected

    def test_shorthands(self):
        assert parse_seq_spec("zero") == ZERO_SEQUENCE
        assert parse_seq_spec("canonical:1:2") == witness_sequence(1, 2)
        assert parse_seq_spec("const:3") == constant_sequence(3)

    def test_mixed_prefix_contents(self):
        s = load_seq_spec(str(GOLDEN / "mixed_prefix.json"))
        assert magnitude_at(s, 2) == FApp(10, Lit(26))
        assert magnitude_at(s, 1) == Lit(2)
        assert s.tail == PeriodicTail((1, 0, 2), phase=1)

    def test_bare_tail_object(self):
        s = parse_seq_spec({"type": "witness", "c": 2})
        assert s.tail == WitnessTail(Lit(2), 1)

    def test_error_locations(self):
        bad = {"prefix": [{"pos": 0, "mag": "F^0(1)"}]}
        with pytest.raises(SpecError, match=r"prefix\[0\]\.mag: column 3"):
            parse_seq_spec(bad)
        with pytest.raises(SpecError, match=r"prefix\[0\]\.sign"):
            parse_seq_spec({"prefix": [{"pos": 0, "mag": "1", "sign": 0}]})
        with pytest.raises(SpecError, match=r"tail\.type"):
            parse_seq_spec({"tail": {"type": "spiral"}})
        with pytest.raises(SpecError, match="unknown keys"):
            parse_seq_spec({"prefix": [], "extra": 1})

    def test_duplicate_positions(self):
        with pytest.raises(SpecError):
            parse_seq_spec({"prefix": [{"pos": 1, "mag": "2"}, {"pos": 1, "mag": "3"}]})

    def test_invalid_json(self):
        with pytest.raises(SpecError, match="column"):
            parse_seq_spec("{not json")


class TestSigmaSpecs:
    def test_point(self):
        q = parse_sigma_point('{"coords": [{"support": [{"pos": 1, "den": 2}]}, {}]}')
        assert q.coord(0) == ErdosPoint({1: 2})
        assert q.coord(1).is_zero()

    def test_point_errors(self):
        with pytest.raises(SpecError, match=r"coords\[0\]\.support\[0\]"):
            parse_sigma_point({"coords": [{"support": [{"pos": 1}]}]})
        with pytest.raises(SpecError):
            parse_sigma_point({"coords": [{"support": [{"pos": 1, "den": 0}]}]})

    def test_basis(self):
        (constraint,) = parse_basis({"constraints": [{"pieces": [{"radius": "1/2", "fixed": {"0": [2]}}]}]})
        (piece,) = constraint.pieces
        assert piece.radius == Fraction(1, 2)
        assert piece.fixed == {0: frozenset({2})}

    @pytest.mark.parametrize(
        "data, where",
        [
            ({"constraints": [5]}, r"^constraints\[0\]: expected an object"),
            ({"constraints": [{"pieces": 3}]}, r"^constraints\[0\]\.pieces: expected a list"),
            ({"constraints": [{}, {"pieces": ["x"]}]}, r"^constraints\[1\]\.pieces\[0\]: expected an object"),
            ({"constraints": [{"pieces": [{"fixed": [1]}]}]}, r"^constraints\[0\]\.pieces\[0\]\.fixed"),
            ({"constraints": [{"pieces": [{"radius": "half"}]}]}, r"^constraints\[0\]\.pieces\[0\]:"),
        ],
    )
    def test_basis_shape_errors(self, data, where):
        with pytest.raises(SpecError, match=where):
            parse_basis(data)

    def test_malformed_json_text(self):
        with pytest.raises(SpecError, match=r"^coords: column"):
            parse_sigma_point('{"coords": ')
        with pytest.raises(SpecError, match=r"^constraints: column"):
            parse_basis("[1,")

    def test_json_arg_from_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text('{"samples": 3}', encoding="utf-8")
        assert load_json_arg(str(path)) == {"samples": 3}
        assert load_json_arg('{"samples": 4}') == {"samples": 4}
