"""A small line-oriented language for optical/microwave pulse protocols.

Grammar::

    program  := stmt*
    stmt     := laser | wait | mw | measure | sweep
    laser    := 'laser' TIME ['power' '=' NUM]
    wait     := 'wait' TIME
    mw       := 'mw' (TIME | 'pi' | 'pi' '/' '2') ['f' '=' FREQ] ['amp' '=' NUM] ['phase' '=' NUM]
    measure  := 'measure' TIME
    sweep    := 'sweep' VAR QTY '..' QTY 'n' '=' INT '{' stmt* '}'

A TIME or FREQ slot also accepts the name of an enclosing sweep variable of
the same dimension. Statements are separated by newlines or simply by the
next keyword; '#' starts a comment. ``measure W`` integrates PL over the
``W`` seconds that end at its position in the timeline.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, localcontext

from .errors import DomainError, SpinterfaceError

UNITS = {
    "s": ("time", Decimal(1)),
    "ms": ("time", Decimal("1e-3")),
    "us": ("time", Decimal("1e-6")),
    "μs": ("time", Decimal("1e-6")),
    "µs": ("time", Decimal("1e-6")),
    "ns": ("time", Decimal("1e-9")),
    "Hz": ("frequency", Decimal(1)),
    "kHz": ("frequency", Decimal("1e3")),
    "MHz": ("frequency", Decimal("1e6")),
    "GHz": ("frequency", Decimal("1e9")),
    "T": ("field", Decimal(1)),
    "mT": ("field", Decimal("1e-3")),
}
ALIASES = {"μs": "us", "µs": "us"}
# canonical units per dimension, largest first
CANONICAL = {
    "time": ("s", "ms", "us", "ns"),
    "frequency": ("GHz", "MHz", "kHz", "Hz"),
    "field": ("T", "mT"),
}
KEYWORDS = {"laser", "wait", "mw", "measure", "sweep", "pi"}
STATEMENT_KEYWORDS = ("laser", "wait", "mw", "measure", "sweep")
DEFAULT_MAX_DURATION = 10.0


class SeqError(SpinterfaceError):
    """Any error raised while reading a sequence; carries a source position."""

    def __init__(self, message, line=0, col=0, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        super().__init__(self.format())

    def format(self, filename="<sequence>") -> str:
        text = f"{filename}:{self.line}:{self.col}: {self.message}"
        if self.expected:
            text += " (expected " + ", ".join(sorted(self.expected)) + ")"
        return text


class LexError(SeqError):
    pass


class ParseError(SeqError):
    pass


class SeqTypeError(ParseError):
    """A quantity of the wrong dimension in a slot."""


class ValidationError(SeqError):
    pass


# -- values ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Quantity:
    magnitude: Decimal
    unit: str | None = None

    def __post_init__(self):
        mag = Decimal(self.magnitude)
        if not mag.is_finite():
            raise DomainError("quantity magnitude must be finite")
        object.__setattr__(self, "magnitude", mag)
        unit = ALIASES.get(self.unit, self.unit)
        if unit is not None and unit not in UNITS:
            raise DomainError(f"unknown unit {self.unit!r}")
        object.__setattr__(self, "unit", unit)

    @property
    def dimension(self) -> str:
        return "dimensionless" if self.unit is None else UNITS[self.unit][0]

    @property
    def si(self) -> Decimal:
        if self.unit is None:
            return self.magnitude
        with localcontext() as ctx:
            ctx.prec = 50
            return self.magnitude * UNITS[self.unit][1]

    def __float__(self) -> float:
        return float(self.si)

    def __eq__(self, other):
        if not isinstance(other, Quantity):
            return NotImplemented
        return self.dimension == other.dimension and self.si == other.si

    def __hash__(self):
        return hash((self.dimension, self.si.normalize()))

    def __repr__(self):
        return f"Quantity({_format_quantity(self)})"


@dataclass(frozen=True)
class VarRef:
    name: str


# -- statements ------------------------------------------------------------

@dataclass(frozen=True)
class Laser:
    duration: Quantity | VarRef
    power: Decimal | None = None
    span: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Wait:
    duration: Quantity | VarRef
    span: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Mw:
    duration: Quantity | VarRef | None = None
    angle: str | None = None  # "pi" or "pi/2"
    frequency: Quantity | VarRef | None = None
    amplitude: Decimal | None = None
    phase: Decimal | None = None
    span: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Measure:
    window: Quantity | VarRef
    span: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Sweep:
    variable: str
    start: Quantity
    stop: Quantity
    steps: int
    body: tuple
    span: tuple = field(default=(0, 0), compare=False, repr=False)

    @property
    def dimension(self) -> str:
        return self.start.dimension


@dataclass(frozen=True)
class PulseSequence:
    statements: tuple = ()
    sweep_values: dict = field(default_factory=dict, compare=False)

    @property
    def sweeps(self) -> list:
        return [s for s in walk(self.statements) if isinstance(s, Sweep)]


def walk(statements):
    """Pre-order traversal of statements, descending into sweep bodies."""
    for s in statements:
        yield s
        if isinstance(s, Sweep):
            yield from walk(s.body)


# -- lexer -----------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER EQ DOTDOT SLASH LBRACE RBRACE NEWLINE
    value: object
    line: int
    col: int
    end: int = 0  # column just past the token

    def __repr__(self):
        if self.kind == "IDENT":
            return f"ident({self.value})"
        if self.kind == "NUMBER":
            mag, unit = self.value
            return f"qty({mag}, {unit})" if unit else f"num({mag})"
        return self.kind


_NUMBER = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_UNIT = re.compile(r"[A-Za-zμµ]+")
_SINGLE = {"=": "EQ", "/": "SLASH", "{": "LBRACE", "}": "RBRACE"}
_TOKEN_START = {"identifier", "number", "newline", "'='", "'/'", "'{'", "'}'", "'..'", "comment"}


def tokenize(text: str) -> list:
    """Split source text into tokens; comments and blank lines produce nothing."""
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)

    def emit(kind, value, c, width=1):
        if kind == "NEWLINE" and (not tokens or tokens[-1].kind == "NEWLINE"):
            return
        tokens.append(Token(kind, value, line, c, c + width))

    while i < n:
        ch = text[i]
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            emit("NEWLINE", None, col)
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        m = _NUMBER.match(text, i) if (ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit())) else None
        if m:
            mag = Decimal(m.group())
            j = m.end()
            unit = None
            u = _UNIT.match(text, j)
            if u:
                unit = u.group()
                if unit not in UNITS:
                    raise LexError(f"unknown unit {unit!r}", line, col + (j - i), expected={"unit"})
                j = u.end()
            if j < n and (text[j].isdigit() or text[j] == "_"):
                raise LexError(f"malformed number {text[i:j + 1]!r}", line, col,
                               expected={"number followed by a unit", "separator"})
            emit("NUMBER", (mag, ALIASES.get(unit, unit)), col, j - i)
            col += j - i
            i = j
            continue
        m = _IDENT.match(text, i)
        if m:
            emit("IDENT", m.group(), col, m.end() - i)
            col += m.end() - i
            i = m.end()
            continue
        if text.startswith("..", i):
            emit("DOTDOT", None, col, 2)
            i += 2
            col += 2
            continue
        if ch in _SINGLE:
            emit(_SINGLE[ch], ch, col)
            i += 1
            col += 1
            continue
        raise LexError(f"illegal character {ch!r}", line, col, expected=_TOKEN_START)
    return tokens


# -- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = list(tokens)
        self.pos = 0
        self.scopes = []  # stack of (name, dimension)

    def peek(self, offset=0):
        k = self.pos + offset
        return self.tokens[k] if k < len(self.tokens) else None

    def where(self):
        tok = self.peek()
        if tok is not None:
            return tok.line, tok.col
        if self.tokens:
            last = self.tokens[-1]
            return (last.line, last.col) if last.kind == "NEWLINE" else (last.line, last.end)
        return 1, 1

    def fail(self, message, expected, cls=ParseError, tok=None):
        line, col = (tok.line, tok.col) if tok is not None else self.where()
        raise cls(message, line, col, expected)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def skip_newlines(self):
        while self.peek() is not None and self.peek().kind == "NEWLINE":
            self.pos += 1

    def expect(self, kind, expected_label, value=None):
        tok = self.peek()
        if tok is None or tok.kind != kind or (value is not None and tok.value != value):
            found = "end of input" if tok is None else repr(tok)
            self.fail(f"unexpected {found}", {expected_label})
        return self.next()

    def program(self):
        stmts = self.block(top=True)
        return PulseSequence(tuple(stmts))

    def block(self, top):
        out = []
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok is None:
                if not top:
                    self.fail("unexpected end of input inside sweep body", {"'}'", "statement"})
                return out
            if tok.kind == "RBRACE":
                if top:
                    self.fail("unmatched '}'", set(STATEMENT_KEYWORDS))
                return out
            out.append(self.statement())
            tok = self.peek()
            if tok is not None and tok.kind not in ("NEWLINE", "RBRACE") and not (
                tok.kind == "IDENT" and tok.value in STATEMENT_KEYWORDS
            ):
                self.fail(f"unexpected {tok!r} after statement", {"newline", "statement"})

    def statement(self):
        tok = self.peek()
        if tok.kind != "IDENT" or tok.value not in STATEMENT_KEYWORDS:
            self.fail(f"unexpected {tok!r}", set(STATEMENT_KEYWORDS))
        self.next()
        span = (tok.line, tok.col)
        kw = tok.value
        if kw == "laser":
            duration = self.slot("time")
            opts = self.options({"power": "dimensionless"})
            return Laser(duration, opts.get("power"), span=span)
        if kw == "wait":
            return Wait(self.slot("time"), span=span)
        if kw == "measure":
            return Measure(self.slot("time"), span=span)
        if kw == "mw":
            duration, angle = None, None
            head = self.peek()
            if head is not None and head.kind == "IDENT" and head.value == "pi":
                self.next()
                angle = "pi"
                if self.peek() is not None and self.peek().kind == "SLASH":
                    self.next()
                    den = self.peek()
                    if den is None or den.kind != "NUMBER" or den.value != (Decimal(2), None):
                        self.fail("only pi and pi/2 rotations are supported", {"2"})
                    self.next()
                    angle = "pi/2"
            else:
                duration = self.slot("time", extra_expected={"pi", "pi/2"})
            opts = self.options({"f": "frequency", "amp": "dimensionless", "phase": "dimensionless"})
            return Mw(duration, angle, opts.get("f"), opts.get("amp"), opts.get("phase"), span=span)
        return self.sweep(span)

    def sweep(self, span):
        var_tok = self.peek()
        if var_tok is None or var_tok.kind != "IDENT" or var_tok.value in KEYWORDS:
            self.fail("sweep needs a variable name", {"identifier"})
        self.next()
        name = var_tok.value
        if any(name == n for n, _ in self.scopes):
            self.fail(f"sweep variable {name!r} is already bound by an enclosing sweep", {"new variable name"},
                      tok=var_tok)
        start = self.literal({"quantity"})
        self.expect("DOTDOT", "'..'")
        stop = self.literal({"quantity"})
        if start.dimension != stop.dimension:
            self.fail(f"sweep bounds differ in dimension ({start.dimension} vs {stop.dimension})",
                      {f"{start.dimension} quantity"}, cls=SeqTypeError, tok=self.tokens[self.pos - 1])
        if start.dimension == "dimensionless":
            self.fail("sweep bounds need units", {"time, frequency or field quantity"}, cls=SeqTypeError,
                      tok=self.tokens[self.pos - 1])
        self.expect("IDENT", "'n'", value="n")
        self.expect("EQ", "'='")
        n_tok = self.peek()
        if n_tok is None or n_tok.kind != "NUMBER" or n_tok.value[1] is not None:
            self.fail("sweep step count must be a plain integer", {"integer"},
                      cls=SeqTypeError if n_tok is not None and n_tok.kind == "NUMBER" else ParseError)
        mag = n_tok.value[0]
        if mag != mag.to_integral_value() or mag < 0:
            self.fail("sweep step count must be a non-negative integer", {"integer"}, tok=n_tok)
        self.next()
        self.skip_newlines()
        self.expect("LBRACE", "'{'")
        self.scopes.append((name, start.dimension))
        body = self.block(top=False)
        self.scopes.pop()
        close = self.expect("RBRACE", "'}'")
        if not body:
            self.fail("sweep body is empty", {"statement"}, tok=close)
        if not _references(body, name):
            self.fail(f"sweep variable {name!r} is never used in its body", {f"reference to {name}"}, tok=var_tok)
        return Sweep(name, start, stop, int(mag), tuple(body), span=span)

    def literal(self, expected):
        tok = self.peek()
        if tok is None or tok.kind != "NUMBER":
            self.fail(f"unexpected {'end of input' if tok is None else repr(tok)}", expected)
        self.next()
        return Quantity(*tok.value)

    def slot(self, dimension, extra_expected=()):
        tok = self.peek()
        expected = {f"{dimension} quantity", "sweep variable", *extra_expected}
        if tok is None:
            self.fail("unexpected end of input", expected)
        if tok.kind == "IDENT" and tok.value not in KEYWORDS:
            self.next()
            for name, dim in reversed(self.scopes):
                if name == tok.value and dim != dimension:
                    self.fail(f"sweep variable {name!r} is a {dim}, expected a {dimension}",
                              {f"{dimension} quantity"}, cls=SeqTypeError, tok=tok)
            return VarRef(tok.value)
        if tok.kind != "NUMBER":
            self.fail(f"unexpected {tok!r}", expected)
        q = Quantity(*tok.value)
        if q.dimension != dimension:
            unit = q.unit or "no unit"
            self.fail(f"{unit} where a {dimension} is required", {f"{dimension} unit"}, cls=SeqTypeError, tok=tok)
        if q.magnitude < 0:
            self.fail(f"negative {dimension}", {f"non-negative {dimension}"}, cls=SeqTypeError, tok=tok)
        self.next()
        return q

    def options(self, allowed):
        found = {}
        while True:
            tok = self.peek()
            nxt = self.peek(1)
            if tok is None or tok.kind != "IDENT" or nxt is None or nxt.kind != "EQ":
                return found
            if tok.value not in allowed:
                self.fail(f"unknown option {tok.value!r}", set(allowed), tok=tok)
            if tok.value in found:
                self.fail(f"option {tok.value!r} given twice", set(allowed) - set(found), tok=tok)
            self.pos += 2
            dim = allowed[tok.value]
            if dim == "dimensionless":
                val_tok = self.peek()
                if val_tok is None or val_tok.kind != "NUMBER":
                    self.fail("expected a number", {"number"})
                if val_tok.value[1] is not None:
                    self.fail(f"{val_tok.value[1]} given for dimensionless option {tok.value!r}", {"plain number"},
                              cls=SeqTypeError, tok=val_tok)
                self.next()
                found[tok.value] = val_tok.value[0]
            else:
                found[tok.value] = self.slot(dim)


def _references(statements, name) -> bool:
    for s in walk(statements):
        for v in _slot_values(s):
            if isinstance(v, VarRef) and v.name == name:
                return True
    return False


def _slot_values(s):
    if isinstance(s, (Laser, Wait)):
        return (s.duration,)
    if isinstance(s, Measure):
        return (s.window,)
    if isinstance(s, Mw):
        return (s.duration, s.frequency)
    return ()


def parse(tokens) -> PulseSequence:
    """Build a :class:`PulseSequence` from tokens (or raw text)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return _Parser(tokens).program()


def parse_text(text: str) -> PulseSequence:
    return parse(tokenize(text))


# -- validation ------------------------------------------------------------

@dataclass(frozen=True)
class ValidationContext:
    """What a sequence may address.

    ``transitions`` are available microwave transition frequencies (Hz);
    ``rabi_frequency`` (Hz) calibrates pi and pi/2 pulses.
    """

    transitions: tuple = ()
    rabi_frequency: float | None = None
    tolerance: float = 100e6
    max_duration: float = DEFAULT_MAX_DURATION


def _pos(s):
    return s.span if s.span else (0, 0)


def _resolve_angle(s: Mw, ctx: ValidationContext) -> Mw:
    if s.angle is None:
        return s
    if not ctx.rabi_frequency:
        raise ValidationError(f"{s.angle} pulse needs a Rabi-frequency calibration", *_pos(s),
                              expected={"rabi calibration"})
    amp = s.amplitude if s.amplitude is not None else Decimal(1)
    if amp <= 0:
        raise ValidationError("pulse amplitude must be positive to resolve a rotation angle", *_pos(s),
                              expected={"amp > 0"})
    fraction = Decimal(1) if s.angle == "pi" else Decimal("0.5")
    with localcontext() as ctx_dec:
        ctx_dec.prec = 28
        seconds = fraction / (2 * Decimal(repr(float(ctx.rabi_frequency))) * amp)
    return replace(s, duration=_canonical(Quantity(seconds, "s")), angle=None)


def _max_duration(statements, bounds) -> Decimal:
    total = Decimal(0)
    for s in statements:
        if isinstance(s, Sweep):
            inner = dict(bounds)
            inner[s.variable] = max(s.start.si, s.stop.si)
            total += _max_duration(s.body, inner)
            continue
        for v in (_slot_values(s)[:1] if not isinstance(s, Measure) else ()):
            if v is None:
                continue
            total += bounds.get(v.name, Decimal(0)) if isinstance(v, VarRef) else v.si
    return total


def validate(seq: PulseSequence, context: ValidationContext | None = None) -> PulseSequence:
    """Resolve pi/pi2 pulses, check variable binding, addressing and total length."""
    ctx = context or ValidationContext()

    def visit(statements, bound):
        out = []
        for s in statements:
            if isinstance(s, Sweep):
                out.append(replace(s, body=tuple(visit(s.body, bound | {s.variable}))))
                continue
            for v in _slot_values(s):
                if isinstance(v, VarRef) and v.name not in bound:
                    raise ValidationError(f"unbound variable {v.name!r}", *_pos(s),
                                          expected={"enclosing sweep"})
            if isinstance(s, Mw):
                if isinstance(s.frequency, Quantity) and ctx.transitions:
                    f = float(s.frequency.si)
                    if min(abs(f - t) for t in ctx.transitions) > ctx.tolerance:
                        raise ValidationError(f"no transition near {_format_quantity(s.frequency)}", *_pos(s),
                                              expected={"frequency of an available transition"})
                s = _resolve_angle(s, ctx)
            out.append(s)
        return out

    checked = PulseSequence(tuple(visit(seq.statements, frozenset())))
    total = _max_duration(checked.statements, {})
    if total >= Decimal(repr(float(ctx.max_duration))):
        raise ValidationError(f"sequence lasts up to {float(total):g} s, above the {ctx.max_duration:g} s cap",
                              1, 1, expected={f"total duration < {ctx.max_duration:g} s"})
    return checked


# -- expansion -------------------------------------------------------------

def sweep_points(s: Sweep) -> list:
    if s.steps < 2:
        raise DomainError(f"sweep {s.variable!r} needs at least 2 steps, got {s.steps}")
    unit = s.start.unit
    scale = UNITS[unit][1]
    out = []
    with localcontext() as ctx:
        ctx.prec = 40
        span = (s.stop.si - s.start.si) / scale
        for k in range(s.steps):
            mag = s.start.magnitude + span * k / (s.steps - 1)
            out.append(Quantity(+mag.normalize() if mag else Decimal(0), unit))
    return out


def _substitute(statements, values):
    out = []
    for s in statements:
        if isinstance(s, Sweep):
            out.extend(_substitute(s.body, values))
            continue
        changes = {}
        for name in ("duration", "window", "frequency"):
            v = getattr(s, name, None)
            if isinstance(v, VarRef):
                if v.name not in values:
                    raise ValidationError(f"unbound variable {v.name!r}", *_pos(s), expected={"enclosing sweep"})
                changes[name] = values[v.name]
        out.append(replace(s, **changes) if changes else s)
    return out


def expand(seq: PulseSequence) -> list:
    """Concrete sequences, one per point of the cartesian product of all sweeps."""
    sweeps = seq.sweeps
    grids = [sweep_points(s) for s in sweeps]
    out = []
    for combo in itertools.product(*grids):
        values = {s.variable: q for s, q in zip(sweeps, combo)}
        out.append(PulseSequence(tuple(_substitute(seq.statements, values)), sweep_values=values))
    return out


# -- serialisation ---------------------------------------------------------

def _plain(d: Decimal) -> str:
    d = d.normalize()
    if d == 0:
        return "0"
    return format(d, "f")


def _canonical(q: Quantity) -> Quantity:
    if q.unit is None:
        return q
    dim = q.dimension
    si = q.si
    if si == 0:
        return Quantity(Decimal(0), CANONICAL[dim][0])
    for unit in CANONICAL[dim]:
        mag = si / UNITS[unit][1]
        if abs(mag) >= 1:
            return Quantity(mag, unit)
    unit = CANONICAL[dim][-1]
    return Quantity(si / UNITS[unit][1], unit)


def _format_quantity(q) -> str:
    if isinstance(q, VarRef):
        return q.name
    c = _canonical(q)
    return _plain(c.magnitude) + (c.unit or "")


def _serialize(statements, indent) -> list:
    pad = "  " * indent
    lines = []
    for s in statements:
        if isinstance(s, Laser):
            text = f"laser {_format_quantity(s.duration)}"
            if s.power is not None:
                text += f" power={_plain(s.power)}"
        elif isinstance(s, Wait):
            text = f"wait {_format_quantity(s.duration)}"
        elif isinstance(s, Measure):
            text = f"measure {_format_quantity(s.window)}"
        elif isinstance(s, Mw):
            text = "mw " + (s.angle if s.angle is not None else _format_quantity(s.duration))
            if s.frequency is not None:
                text += f" f={_format_quantity(s.frequency)}"
            if s.amplitude is not None:
                text += f" amp={_plain(s.amplitude)}"
            if s.phase is not None:
                text += f" phase={_plain(s.phase)}"
        else:
            lines.append(f"{pad}sweep {s.variable} {_format_quantity(s.start)}..{_format_quantity(s.stop)} "
                         f"n={s.steps} {{")
            lines.extend(_serialize(s.body, indent + 1))
            lines.append(pad + "}")
            continue
        lines.append(pad + text)
    return lines


def serialize(seq: PulseSequence) -> str:
    """Canonical text; ``parse(serialize(s)) == s``."""
    lines = _serialize(seq.statements, 0)
    return "\n".join(lines) + "\n" if lines else ""
