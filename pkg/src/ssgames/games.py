"""Single-system games: definitions, strategies, evaluation and file formats.

A game fixes Alice's and Bob's input alphabets, an exact joint prior over
inputs, and for every input pair the set of measurement outcomes that win.
A round prepares ``|0>``, applies Alice's gate for her input, then Bob's gate
for his, and measures in the computational basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .gates import (
    BitFlip,
    Channel,
    EraseTo,
    Gate,
    GateClass,
    Identity,
    Unitary,
    apply_gate,
    compose,
    gate_in_class,
    rotation_x,
)
from .qubit_core import ZERO_STATE, measure_rect


class ShapeMismatch(ValueError):
    pass


class UnknownGame(KeyError):
    pass


class UnknownStrategy(KeyError):
    pass


class ValidationError(ValueError):
    pass


class NotReversible(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


Rate = Union[Fraction, float]

_WIN_TOKENS = {"-": frozenset(), "0": frozenset({0}), "1": frozenset({1}), "01": frozenset({0, 1})}
_TOKEN_OF = {v: k for k, v in _WIN_TOKENS.items()}


@dataclass(frozen=True)
class GameSpec:
    name: str
    n_alice: int
    n_bob: int
    prior: tuple[tuple[Fraction, ...], ...]
    win: tuple[tuple[frozenset, ...], ...]

    def __post_init__(self):
        if self.n_alice < 1 or self.n_bob < 1:
            raise ValidationError("alphabet sizes must be positive")
        prior = tuple(tuple(Fraction(p) for p in row) for row in self.prior)
        win = tuple(tuple(frozenset(w) for w in row) for row in self.win)
        for label, table in (("prior", prior), ("win", win)):
            if len(table) != self.n_alice or any(len(r) != self.n_bob for r in table):
                raise ValidationError(f"{label} table is not {self.n_alice}x{self.n_bob}")
        if any(p < 0 for row in prior for p in row):
            raise ValidationError("prior has a negative entry")
        total = sum(p for row in prior for p in row)
        if total != 1:
            raise ValidationError(f"prior sums to {total}, not 1")
        if any(not w <= {0, 1} for row in win for w in row):
            raise ValidationError("winning outputs must be a subset of {0, 1}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "win", win)

    @classmethod
    def from_rule(
        cls,
        name: str,
        n_alice: int,
        n_bob: int,
        prior: Callable[[int, int], Fraction],
        output: Callable[[int, int], int],
    ) -> "GameSpec":
        """Build a game whose single winning output on ``(a, b)`` is ``output(a, b)``."""
        return cls(
            name,
            n_alice,
            n_bob,
            tuple(tuple(prior(a, b) for b in range(n_bob)) for a in range(n_alice)),
            tuple(tuple(frozenset({output(a, b)}) for b in range(n_bob)) for a in range(n_alice)),
        )

    def wins(self, a: int, b: int, outcome: int) -> bool:
        return outcome in self.win[a][b]

    def prior_array(self) -> np.ndarray:
        return np.array([[float(p) for p in row] for row in self.prior])

    def win_array(self, outcome: int) -> np.ndarray:
        return np.array([[float(outcome in w) for w in row] for row in self.win])


@dataclass(frozen=True)
class Strategy:
    alice: tuple[Gate, ...]
    bob: tuple[Gate, ...]
    claimed_class: GateClass = GateClass.QUANTUM_IRREVERSIBLE

    def __post_init__(self):
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "bob", tuple(self.bob))
        for who, gates in (("alice", self.alice), ("bob", self.bob)):
            for i, g in enumerate(gates):
                if not gate_in_class(g, self.claimed_class):
                    raise ValidationError(
                        f"{who} gate {i} ({g!r}) is not {self.claimed_class.label}"
                    )

    @property
    def is_classical(self) -> bool:
        return all(isinstance(g, (Identity, BitFlip, EraseTo)) for g in self.alice + self.bob)


def smallest_class(gates: Iterable[Gate]) -> GateClass:
    gates = list(gates)
    for cls in (
        GateClass.CLASSICAL_REVERSIBLE,
        GateClass.CLASSICAL_IRREVERSIBLE,
        GateClass.QUANTUM_REVERSIBLE,
    ):
        if all(gate_in_class(g, cls) for g in gates):
            return cls
    return GateClass.QUANTUM_IRREVERSIBLE


def classical_output(gate: Gate, bit: int) -> int:
    if isinstance(gate, Identity):
        return bit
    if isinstance(gate, BitFlip):
        return 1 - bit
    if isinstance(gate, EraseTo):
        return gate.target
    raise TypeError(f"{gate!r} is not a classical gate")


def _check_shape(game: GameSpec, s: Strategy) -> None:
    if len(s.alice) != game.n_alice or len(s.bob) != game.n_bob:
        raise ShapeMismatch(
            f"ShapeMismatch: strategy has {len(s.alice)}x{len(s.bob)} gates, "
            f"game {game.name!r} needs {game.n_alice}x{game.n_bob}"
        )


def outcome_probabilities(game: GameSpec, s: Strategy) -> np.ndarray:
    """``q[a, b]``: probability of measuring 1 on inputs ``(a, b)``."""
    _check_shape(game, s)
    q = np.empty((game.n_alice, game.n_bob))
    for a, ga in enumerate(s.alice):
        rho = apply_gate(ZERO_STATE, ga)
        for b, gb in enumerate(s.bob):
            q[a, b] = measure_rect(apply_gate(rho, gb))
    return q


def win_rate(game: GameSpec, s: Strategy) -> Rate:
    """Winning probability; an exact :class:`Fraction` when every gate is classical."""
    _check_shape(game, s)
    if s.is_classical:
        total = Fraction(0)
        for a, ga in enumerate(s.alice):
            x = classical_output(ga, 0)
            for b, gb in enumerate(s.bob):
                if game.wins(a, b, classical_output(gb, x)):
                    total += game.prior[a][b]
        return total
    q = outcome_probabilities(game, s)
    rate = 0.0
    for a in range(game.n_alice):
        for b in range(game.n_bob):
            w0 = game.wins(a, b, 0)
            w1 = game.wins(a, b, 1)
            rate += float(game.prior[a][b]) * (w1 * q[a, b] + w0 * (1 - q[a, b]))
    return float(rate)


def losing_inputs(game: GameSpec, s: Strategy) -> list[tuple[int, int]]:
    """Input pairs that a classical strategy never wins."""
    _check_shape(game, s)
    out = []
    for a, ga in enumerate(s.alice):
        x = classical_output(ga, 0)
        for b, gb in enumerate(s.bob):
            if not game.wins(a, b, classical_output(gb, x)):
                out.append((a, b))
    return out


# -- built-in games ----------------------------------------------------------

def _uniform(n: int):
    return lambda a, b: Fraction(1, n)


def ei_encode(a1: int, a2: int) -> int:
    return 2 * a1 + a2


def ei_decode(a: int) -> tuple[int, int]:
    return divmod(a, 2)


def _build_games() -> dict[str, GameSpec]:
    return {
        "chsh_star": GameSpec.from_rule("chsh_star", 2, 2, _uniform(4), lambda a, b: a * b),
        "ei_chsh_star": GameSpec.from_rule(
            "ei_chsh_star", 4, 2, _uniform(8),
            lambda a, b: (ei_decode(a)[0] * b) ^ ei_decode(a)[1],
        ),
        "game32": GameSpec.from_rule("game32", 3, 3, _uniform(9), lambda a, b: int(a == b)),
        "b32": GameSpec.from_rule(
            "b32", 3, 3,
            lambda a, b: Fraction(1, 15) if a == b else Fraction(2, 15),
            lambda a, b: int(a == b),
        ),
    }


BUILTIN_GAMES = _build_games()

GAME_DESCRIPTIONS = {
    "chsh_star": "CHSH*: bits a, b uniform; win iff m = a*b",
    "ei_chsh_star": "erasure-immune CHSH*: a = 2*a1 + a2, b uniform; win iff m = a1*b xor a2",
    "game32": "32-Game: trits a, b uniform; win iff m = [a == b]",
    "b32": "biased 32-Game: prior 1/15 on a == b, 2/15 otherwise; win iff m = [a == b]",
}


def builtin_game(name: str) -> GameSpec:
    try:
        return BUILTIN_GAMES[name]
    except KeyError:
        raise UnknownGame(f"UnknownGame: {name!r} (known: {', '.join(BUILTIN_GAMES)})") from None


# -- named strategies -------------------------------------------------------

_TWO_THIRDS_PI = 2 * math.pi / 3

STRATEGY_GAMES = {
    "game32_classical_79": "game32",
    "game32_quantum_56": "game32",
    "b32_irreversible_1315": "b32",
    "chsh_irreversible_perfect": "chsh_star",
}

STRATEGY_DESCRIPTIONS = {
    "game32_classical_79": "A_a = X^a, B_b = X^(b+1); wins 7/9 on game32",
    "game32_quantum_56": "A_a = X R^a, B_b = R^(2b) with R the 2pi/3 x-rotation; wins 5/6 on game32",
    "b32_irreversible_1315": "Alice X iff a = 0; Bob I if b = 0 else erase to 0; wins 13/15 on b32",
    "chsh_irreversible_perfect": "Alice X^a; Bob erase to 0 if b = 0 else I; wins 1 on chsh_star",
}


def named_strategy(name: str) -> Strategy:
    cr, ci, qr = (
        GateClass.CLASSICAL_REVERSIBLE,
        GateClass.CLASSICAL_IRREVERSIBLE,
        GateClass.QUANTUM_REVERSIBLE,
    )
    x_pow = lambda k: BitFlip() if k % 2 else Identity()  # noqa: E731
    if name == "game32_classical_79":
        return Strategy([x_pow(a) for a in range(3)], [x_pow(b + 1) for b in range(3)], cr)
    if name == "game32_quantum_56":
        # X equals the pi x-rotation up to phase, so X R^a is one x-rotation
        alice = [rotation_x(math.pi + a * _TWO_THIRDS_PI) for a in range(3)]
        bob = [rotation_x(2 * b * _TWO_THIRDS_PI) for b in range(3)]
        return Strategy(alice, bob, qr)
    if name == "b32_irreversible_1315":
        alice = [BitFlip() if a == 0 else Identity() for a in range(3)]
        bob = [Identity() if b == 0 else EraseTo(0) for b in range(3)]
        return Strategy(alice, bob, ci)
    if name == "chsh_irreversible_perfect":
        return Strategy([x_pow(a) for a in range(2)], [EraseTo(0), Identity()], ci)
    raise UnknownStrategy(f"UnknownStrategy: {name!r} (known: {', '.join(STRATEGY_GAMES)})")


# -- structural checks ------------------------------------------------------

@dataclass(frozen=True)
class ErasureReport:
    """Per-``b`` totals of prior mass won by outputs 0 and 1."""

    sums: tuple[tuple[Fraction, Fraction], ...]
    condition_holds: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "condition_holds", any(s0 != s1 for s0, s1 in self.sums))

    @property
    def immune(self) -> bool:
        return not self.condition_holds


def erasure_immune_condition(game: GameSpec) -> ErasureReport:
    """Check whether Bob erasing on some input could beat both I and X.

    If every ``b`` has equal prior mass on output-0 and output-1 wins, erasing
    to 0 or to 1 is never better than I or X, and the game is erasure-immune.
    """
    sums = []
    for b in range(game.n_bob):
        s0 = sum((game.prior[a][b] for a in range(game.n_alice) if game.wins(a, b, 0)), Fraction(0))
        s1 = sum((game.prior[a][b] for a in range(game.n_alice) if game.wins(a, b, 1)), Fraction(0))
        sums.append((s0, s1))
    return ErasureReport(tuple(sums))


SYSTEM_DIMENSION = 2


def prop5_applies(game: GameSpec) -> bool:
    """True when the qubit can carry all of Alice's input, so classical irreversible play is optimal."""
    return SYSTEM_DIMENSION >= game.n_alice


def ei_transform(s: Strategy) -> Strategy:
    """Turn a reversible CHSH* strategy into an EI-CHSH* strategy with the same win rate.

    On input ``(a1, a2)`` Alice first flips the fresh qubit when ``a2 = 1`` and
    then plays her CHSH* gate for ``a1``.
    """
    if not s.claimed_class.is_reversible:
        raise NotReversible(f"NotReversible: strategy class is {s.claimed_class.label}")
    if len(s.alice) != 2 or len(s.bob) != 2:
        raise ShapeMismatch("ShapeMismatch: expected a 2x2 CHSH* strategy")
    alice = []
    for a in range(4):
        a1, a2 = ei_decode(a)
        alice.append(compose(BitFlip(), s.alice[a1]) if a2 else s.alice[a1])
    return Strategy(alice, s.bob, s.claimed_class)


# -- file formats -----------------------------------------------------------

GAME_HEADER = "ssg-game v1"
STRATEGY_HEADER = "ssg-strategy v1"


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((i, line))
    return out


def _key_value(lineno: int, line: str, key: str) -> str:
    k, sep, v = line.partition(":")
    if not sep or k.strip() != key:
        raise ParseError(lineno, f"expected '{key}: ...'")
    return v.strip()


def _positive_int(lineno: int, text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise ParseError(lineno, f"not an integer: {text!r}") from None
    if n < 1:
        raise ParseError(lineno, f"alphabet size must be positive, got {n}")
    return n


def _rational(lineno: int, tok: str) -> Fraction:
    try:
        if "." in tok or "e" in tok.lower():
            raise ValueError
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(lineno, f"not a rational: {tok!r}") from None


def parse_game(text: str) -> GameSpec:
    lines = _content_lines(text)
    it = iter(lines)

    def take(what: str) -> tuple[int, str]:
        try:
            return next(it)
        except StopIteration:
            last = lines[-1][0] if lines else 0
            raise ParseError(last + 1, f"unexpected end of file, expected {what}") from None

    lineno, line = take("header")
    if line != GAME_HEADER:
        raise ParseError(lineno, f"expected header {GAME_HEADER!r}")
    name = _key_value(*take("name"), "name")
    lineno, line = take("alice")
    n_alice = _positive_int(lineno, _key_value(lineno, line, "alice"))
    lineno, line = take("bob")
    n_bob = _positive_int(lineno, _key_value(lineno, line, "bob"))

    def table(key: str, cell):
        lineno, line = take(key)
        if _key_value(lineno, line, key):
            raise ParseError(lineno, f"'{key}:' must be alone on its line")
        rows = []
        for _ in range(n_alice):
            lineno, line = take(f"{key} row")
            toks = line.split()
            if len(toks) != n_bob:
                raise ParseError(lineno, f"expected {n_bob} entries, got {len(toks)}")
            rows.append(tuple(cell(lineno, t) for t in toks))
        return tuple(rows)

    def win_cell(lineno: int, tok: str) -> frozenset:
        if tok not in _WIN_TOKENS:
            raise ParseError(lineno, f"bad win token {tok!r} (use 0, 1, 01 or -)")
        return _WIN_TOKENS[tok]

    prior = table("prior", _rational)
    win = table("win", win_cell)
    extra = next(it, None)
    if extra is not None:
        raise ParseError(extra[0], "unexpected trailing content")
    return GameSpec(name, n_alice, n_bob, prior, win)


def _fmt_fraction(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def serialize_game(game: GameSpec) -> str:
    out = [GAME_HEADER, f"name: {game.name}", f"alice: {game.n_alice}", f"bob: {game.n_bob}", "prior:"]
    out += [" ".join(_fmt_fraction(p) for p in row) for row in game.prior]
    out.append("win:")
    out += [" ".join(_TOKEN_OF[w] for w in row) for row in game.win]
    return "\n".join(out) + "\n"


def _float(lineno: int, tok: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(lineno, f"not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise ParseError(lineno, f"non-finite number: {tok!r}")
    return v


def _parse_gate(lineno: int, spec: str, rest) -> Gate:
    toks = spec.split()
    kind = toks[0] if toks else ""
    if kind in ("I", "X", "E0", "E1"):
        if len(toks) != 1:
            raise ParseError(lineno, f"gate {kind} takes no arguments")
        return {"I": Identity(), "X": BitFlip(), "E0": EraseTo(0), "E1": EraseTo(1)}[kind]
    if kind == "U":
        if len(toks) != 5:
            raise ParseError(lineno, "expected 'U <angle> <nx> <ny> <nz>'")
        angle, nx, ny, nz = (_float(lineno, t) for t in toks[1:])
        try:
            return Unitary((nx, ny, nz), angle)
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
    if kind == "KRAUS":
        if len(toks) != 2:
            raise ParseError(lineno, "expected 'KRAUS <k>'")
        k = _positive_int(lineno, toks[1])
        ops = []
        for _ in range(k):
            try:
                ln, line = next(rest)
            except StopIteration:
                raise ParseError(lineno, "unexpected end of file inside KRAUS block") from None
            vals = [_float(ln, t) for t in line.split()]
            if len(vals) != 8:
                raise ParseError(ln, f"expected 8 numbers per Kraus operator, got {len(vals)}")
            ops.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
        try:
            return Channel(tuple(o.reshape(2, 2) for o in ops))
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
    raise ParseError(lineno, f"unknown gate {spec!r}")


def parse_strategy(text: str, game: GameSpec) -> Strategy:
    """Read a strategy file for ``game``.

    An optional ``class: cr|ci|qr|qi`` line sets the claimed class; without it
    the smallest class containing every gate is used.
    """
    lines = _content_lines(text)
    if not lines or lines[0][1] != STRATEGY_HEADER:
        raise ParseError(lines[0][0] if lines else 1, f"expected header {STRATEGY_HEADER!r}")
    rest = iter(lines[1:])
    slots: dict[str, dict[int, Gate]] = {"alice": {}, "bob": {}}
    claimed = None
    for lineno, line in rest:
        head, sep, spec = line.partition(":")
        head = head.strip()
        if not sep:
            raise ParseError(lineno, "expected '<key>: <value>'")
        if head == "game":
            continue
        if head == "class":
            try:
                claimed = GateClass(spec.strip())
            except ValueError:
                raise ParseError(lineno, f"unknown gate class {spec.strip()!r}") from None
            continue
        parts = head.split()
        if len(parts) != 2 or parts[0] not in slots:
            raise ParseError(lineno, f"expected '<alice|bob> <index>:', got {head!r}")
        who = parts[0]
        try:
            idx = int(parts[1])
        except ValueError:
            raise ParseError(lineno, f"bad gate index {parts[1]!r}") from None
        size = game.n_alice if who == "alice" else game.n_bob
        if not 0 <= idx < size:
            raise ParseError(lineno, f"{who} index {idx} out of range 0..{size - 1}")
        if idx in slots[who]:
            raise ParseError(lineno, f"duplicate gate for {who} {idx}")
        slots[who][idx] = _parse_gate(lineno, spec.strip(), rest)
    for who, size in (("alice", game.n_alice), ("bob", game.n_bob)):
        missing = [i for i in range(size) if i not in slots[who]]
        if missing:
            raise ShapeMismatch(f"ShapeMismatch: no gate for {who} input(s) {missing}")
    alice = [slots["alice"][i] for i in range(game.n_alice)]
    bob = [slots["bob"][i] for i in range(game.n_bob)]
    if claimed is None:
        claimed = smallest_class(alice + bob)
    return Strategy(alice, bob, claimed)


def _gate_lines(gate: Gate) -> list[str]:
    if isinstance(gate, Identity):
        return ["I"]
    if isinstance(gate, BitFlip):
        return ["X"]
    if isinstance(gate, EraseTo):
        return [f"E{gate.target}"]
    if isinstance(gate, Unitary):
        return [f"U {gate.angle!r} " + " ".join(repr(c) for c in gate.axis)]
    ops = gate.kraus()
    lines = [f"KRAUS {len(ops)}"]
    for k in ops:
        flat = np.asarray(k).reshape(-1)
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in flat))
    return lines


def serialize_strategy(s: Strategy, game_name: str = "") -> str:
    out = [STRATEGY_HEADER]
    if game_name:
        out.append(f"game: {game_name}")
    out.append(f"class: {s.claimed_class.value}")
    for who, gates in (("alice", s.alice), ("bob", s.bob)):
        for i, g in enumerate(gates):
            first, *more = _gate_lines(g)
            out.append(f"{who} {i}: {first}")
            out.extend(more)
    return "\n".join(out) + "\n"


def load_game(ref: str) -> GameSpec:
    """A built-in game name or a path to a game file."""
    if ref in BUILTIN_GAMES:
        return BUILTIN_GAMES[ref]
    try:
        with open(ref, encoding="utf-8") as fh:
            return parse_game(fh.read())
    except FileNotFoundError:
        raise UnknownGame(f"UnknownGame: {ref!r} is neither a built-in game nor a file") from None


def load_strategy(ref: str, game: GameSpec) -> Strategy:
    if ref in STRATEGY_GAMES:
        return named_strategy(ref)
    try:
        with open(ref, encoding="utf-8") as fh:
            return parse_strategy(fh.read(), game)
    except FileNotFoundError:
        raise UnknownStrategy(f"UnknownStrategy: {ref!r} is neither a named strategy nor a file") from None


def permute_alice(game: GameSpec, s: Strategy, perm: Sequence[int]) -> tuple[GameSpec, Strategy]:
    """Relabel Alice's inputs: new input ``i`` is old input ``perm[i]``."""
    g = GameSpec(
        game.name,
        game.n_alice,
        game.n_bob,
        tuple(game.prior[p] for p in perm),
        tuple(game.win[p] for p in perm),
    )
    return g, Strategy([s.alice[p] for p in perm], s.bob, s.claimed_class)
