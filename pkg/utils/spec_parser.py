import json
import os
import re
from fractions import Fraction

from utils.errors import SpecError
from utils.itinerary import (
    ZERO_SEQUENCE,
    Entry,
    ItinerarySeq,
    PeriodicTail,
    WitnessTail,
    ZeroTail,
    constant_sequence,
    witness_sequence,
)
from utils.sigma_model import BallPiece, CoordinateConstraint, ErdosPoint, SigmaPoint
from utils.tower_arith import Lit, fapp, inc

_TOKEN = re.compile(r"\s*(?:(F\^)|(\d+)|([()+-]))")
_SHORTHAND = re.compile(r"^(?:(zero)|canonical:(\d+):(\d+)|const:(\d+))$")


class TowerParser:
    """Recursive-descent parser for the tower text format.

    expr := atom (('+' | '-') INT)*
    atom := INT | 'F^' INT '(' expr ')'
    """

    def __init__(self, text, where=""):
        self.text = text
        self.where = where
        self.tokens = self._tokenize(text)
        self.i = 0

    def _fail(self, column, message):
        raise SpecError(self.where, f"column {column}: {message}")

    def _tokenize(self, text):
        tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            match = _TOKEN.match(text, pos)
            if not match:
                column = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
                self._fail(column, f"unexpected character {text[column - 1]!r}")
            column = match.start(match.lastindex) + 1
            tokens.append((match.group(match.lastindex), column))
            pos = match.end()
        return tokens

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, len(self.text) + 1)

    def _take(self):
        token = self._peek()
        self.i += 1
        return token

    def _int(self):
        token, column = self._take()
        if token is None or not token.isdigit():
            self._fail(column, f"expected an integer, found {token or 'end of input'}")
        return int(token), column

    def parse(self):
        expr = self._expr()
        token, column = self._peek()
        if token is not None:
            self._fail(column, f"unexpected {token!r}")
        return expr

    def _expr(self):
        expr = self._atom()
        while self._peek()[0] in ("+", "-"):
            sign, _ = self._take()
            value, column = self._int()
            try:
                expr = inc(expr, value if sign == "+" else -value)
            except ValueError as e:
                self._fail(column, str(e))
        return expr

    def _atom(self):
        token, column = self._peek()
        if token == "F^":
            self._take()
            j, j_column = self._int()
            if j < 1:
                self._fail(j_column, "F exponent must be >= 1")
            self._expect("(")
            inner = self._expr()
            self._expect(")")
            return fapp(j, inner)
        value, column = self._int()
        try:
            return Lit(value)
        except ValueError as e:
            self._fail(column, str(e))

    def _expect(self, symbol):
        token, column = self._take()
        if token != symbol:
            self._fail(column, f"expected {symbol!r}, found {token or 'end of input'}")


def parse_tower(text, where="tower"):
    """Parse tower text such as ``F^2(1)+1`` into its canonical TowerExpr."""
    if isinstance(text, int) and not isinstance(text, bool):
        text = str(text)
    if not isinstance(text, str):
        raise SpecError(where, f"expected tower text, got {text!r}")
    return TowerParser(text, where).parse()


class SequenceSpecParser:
    """Parser for sequence specs: shorthands, JSON text, or decoded JSON values."""

    def parse_seq_spec(self, spec):
        """
        Parse a sequence spec.

        Args:
            spec (str | dict): ``zero``, ``canonical:<n>:<c>``, ``const:<v>``,
                JSON text, or an already decoded JSON value

        Returns:
            ItinerarySeq: The validated sequence
        """
        if isinstance(spec, str):
            text = spec.strip()
            match = _SHORTHAND.match(text)
            if match:
                return self._shorthand(match)
            try:
                spec = json.loads(text)
            except json.JSONDecodeError as e:
                raise SpecError("spec", f"column {e.colno}: {e.msg}")
            if isinstance(spec, str):
                return self.parse_seq_spec(spec)
        if not isinstance(spec, dict):
            raise SpecError("spec", "expected an object or a shorthand")
        if "type" in spec and "prefix" not in spec:
            return ItinerarySeq((), self._tail(spec, "spec"))
        unknown = set(spec) - {"prefix", "tail"}
        if unknown:
            raise SpecError("spec", f"unknown keys {sorted(unknown)}")
        prefix = self._prefix(spec.get("prefix", []))
        tail = self._tail(spec.get("tail", "zero"), "tail")
        try:
            return ItinerarySeq(prefix, tail)
        except ValueError as e:
            raise SpecError("prefix", str(e))

    def _shorthand(self, match):
        if match.group(1):
            return ZERO_SEQUENCE
        if match.group(2) is not None:
            c = int(match.group(3))
            if c < 1:
                raise SpecError("spec", "canonical constant must be >= 1")
            return witness_sequence(int(match.group(2)), c)
        return constant_sequence(int(match.group(4)))

    def _prefix(self, items):
        if not isinstance(items, list):
            raise SpecError("prefix", "expected a list")
        prefix = []
        for i, item in enumerate(items):
            where = f"prefix[{i}]"
            if not isinstance(item, dict):
                raise SpecError(where, "expected an object")
            pos = item.get("pos")
            if not isinstance(pos, int) or isinstance(pos, bool) or pos < 0:
                raise SpecError(f"{where}.pos", f"expected a nonnegative integer, got {pos!r}")
            if "mag" not in item:
                raise SpecError(f"{where}.mag", "missing")
            mag = parse_tower(item["mag"], f"{where}.mag")
            sign = item.get("sign", 1)
            if sign not in (1, -1):
                raise SpecError(f"{where}.sign", f"expected 1 or -1, got {sign!r}")
            prefix.append((pos, Entry(mag, sign)))
        return prefix

    def _tail(self, tail, where):
        if tail == "zero":
            return ZeroTail()
        if not isinstance(tail, dict):
            raise SpecError(where, "expected 'zero' or an object")
        kind = tail.get("type")
        try:
            if kind == "zero":
                return ZeroTail()
            if kind == "periodic":
                block = tail.get("block")
                if not isinstance(block, list) or not block:
                    raise SpecError(f"{where}.block", "expected a non-empty list")
                return PeriodicTail(tuple(block), tail.get("phase", 0))
            if kind == "witness":
                if "base" in tail:
                    base = parse_tower(tail["base"], f"{where}.base")
                else:
                    c = tail.get("c")
                    if not isinstance(c, int) or c < 1:
                        raise SpecError(f"{where}.c", f"expected a positive integer, got {c!r}")
                    base = Lit(c)
                return WitnessTail(base, tail.get("k0", 1), tail.get("anchor", 0), tail.get("offset", 0))
        except (ValueError, TypeError) as e:
            raise SpecError(where, str(e))
        raise SpecError(f"{where}.type", f"unknown tail type {kind!r}")


def tail_to_spec(tail):
    if isinstance(tail, ZeroTail):
        return {"type": "zero"}
    if isinstance(tail, PeriodicTail):
        data = {"type": "periodic", "block": list(tail.block)}
        if tail.phase:
            data["phase"] = tail.phase
        return data
    if isinstance(tail.base, Lit) and tail.anchor == 0 and tail.offset == 0:
        return {"type": "witness", "c": tail.base.n, "k0": tail.k0}
    return {
        "type": "witness",
        "base": str(tail.base),
        "k0": tail.k0,
        "anchor": tail.anchor,
        "offset": tail.offset,
    }


def seq_to_spec(s):
    """Canonical JSON-ready form of a sequence."""
    return {
        "prefix": [{"pos": pos, "mag": str(entry.mag), "sign": entry.sign} for pos, entry in s.prefix],
        "tail": tail_to_spec(s.tail),
    }


def parse_seq_spec(spec):
    return SequenceSpecParser().parse_seq_spec(spec)


def load_seq_spec(value):
    """A shorthand, JSON text, or the path of a JSON file."""
    if isinstance(value, str) and os.path.isfile(value):
        with open(value, "r", encoding="utf-8") as f:
            return parse_seq_spec(f.read())
    return parse_seq_spec(value)


def _erdos_point(data, where):
    if not isinstance(data, dict) or not isinstance(data.get("support", []), list):
        raise SpecError(where, "expected an object with a support list")
    support = []
    for i, item in enumerate(data.get("support", [])):
        try:
            support.append((int(item["pos"]), int(item["den"])))
        except (KeyError, TypeError, ValueError):
            raise SpecError(f"{where}.support[{i}]", "expected {\"pos\": int, \"den\": int}")
    try:
        return ErdosPoint(tuple(support))
    except ValueError as e:
        raise SpecError(where, str(e))


def _json_text(data, where):
    if not isinstance(data, str):
        return data
    try:
        return json.loads(data)
    except json.JSONDecodeError as e:
        raise SpecError(where, f"column {e.colno}: {e.msg}")


def parse_sigma_point(data):
    """``{"coords": [{"support": [{"pos": 0, "den": 1}]}, ...]}``"""
    data = _json_text(data, "coords")
    coords = data.get("coords") if isinstance(data, dict) else None
    if not isinstance(coords, list):
        raise SpecError("coords", "expected a list")
    return SigmaPoint(tuple(_erdos_point(c, f"coords[{i}]") for i, c in enumerate(coords)))


def _ball_piece(piece, where):
    if not isinstance(piece, dict):
        raise SpecError(where, "expected an object")
    center = _erdos_point(piece.get("center", {}), f"{where}.center")
    fixed = piece.get("fixed", {})
    if not isinstance(fixed, dict):
        raise SpecError(f"{where}.fixed", "expected an object of position -> denominators")
    try:
        radius = Fraction(str(piece.get("radius", 1)))
        fixed = {int(pos): frozenset(int(d) for d in dens) for pos, dens in fixed.items()}
        return BallPiece(center, radius, fixed)
    except (TypeError, ValueError) as e:
        raise SpecError(where, str(e))


def parse_basis(data):
    """``{"constraints": [{"pieces": [{"center": {...}, "radius": "1", "fixed": {"0": [0, 1]}}]}]}``"""
    data = _json_text(data, "constraints")
    constraints = data.get("constraints") if isinstance(data, dict) else None
    if not isinstance(constraints, list):
        raise SpecError("constraints", "expected a list")
    result = []
    for i, constraint in enumerate(constraints):
        if not isinstance(constraint, dict):
            raise SpecError(f"constraints[{i}]", "expected an object")
        pieces = constraint.get("pieces", [])
        if not isinstance(pieces, list):
            raise SpecError(f"constraints[{i}].pieces", "expected a list")
        result.append(CoordinateConstraint(tuple(
            _ball_piece(piece, f"constraints[{i}].pieces[{j}]") for j, piece in enumerate(pieces)
        )))
    return result


def load_json_arg(value):
    if isinstance(value, str) and os.path.isfile(value):
        with open(value, "r", encoding="utf-8") as f:
            return json.load(f)
    return json.loads(value)
