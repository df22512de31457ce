"""API-aware constrained decoding over an arbitrary subtoken vocabulary.

The engine tracks a character-level configuration over the canonical call
syntax (single spaces around structural tokens, as emitted by
``expr.serialize``). A vocabulary token is allowed at a step iff feeding its
characters through the configuration keeps the emitted text a prefix of some
call that satisfies all four constraints. Because every live configuration
can be extended to a complete call, masking by character survival is exact.

Tokens may span a name boundary into structural text (e.g. ``ARMS (``): the
name-spelling cursor simply hands the residual characters to the grammar.
"""

from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from .spec import ApiSpec

_QUOTE = '"'
_BACKSLASH = "\\"


class DecodeError(Exception):
    pass


class EmptySpecError(DecodeError):
    """No functions in the spec; nothing is generable."""


class UnspellableNameError(DecodeError):
    def __init__(self, names: list[str]):
        super().__init__(f"names unspellable under vocab: {', '.join(names)}")
        self.names = names


class DisallowedTokenError(DecodeError):
    pass


class IncompleteDecodeError(DecodeError):
    def __init__(self, emitted: str, steps: int):
        super().__init__(f"decode incomplete after {steps} steps: {emitted!r}")
        self.emitted = emitted
        self.steps = steps


class Mode(enum.Enum):
    EXPECT_FUNCTION = "ExpectFunction"
    EXPECT_OPEN = "ExpectOpen"
    EXPECT_ARG_OR_CLOSE = "ExpectArgOrClose"
    EXPECT_EQUALS = "ExpectEquals"
    EXPECT_VALUE = "ExpectValue"
    IN_STRING = "InString"
    EXPECT_COMMA_OR_CLOSE = "ExpectCommaOrClose"
    COMPLETE = "Complete"


# config tuple layout: (mode, stack, name_prefix, pending_lit, allow_close,
# string_len, escape_pending)
_M_FUNC = 0
_M_OPEN = 1
_M_ARG_OR_CLOSE = 2
_M_EQUALS = 3
_M_VALUE = 4
_M_STRING = 5
_M_COMMA_OR_CLOSE = 6
_M_COMPLETE = 7

_MODE_ENUM = {
    _M_FUNC: Mode.EXPECT_FUNCTION,
    _M_OPEN: Mode.EXPECT_OPEN,
    _M_ARG_OR_CLOSE: Mode.EXPECT_ARG_OR_CLOSE,
    _M_EQUALS: Mode.EXPECT_EQUALS,
    _M_VALUE: Mode.EXPECT_VALUE,
    _M_STRING: Mode.IN_STRING,
    _M_COMMA_OR_CLOSE: Mode.EXPECT_COMMA_OR_CLOSE,
    _M_COMPLETE: Mode.COMPLETE,
}


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[tuple[int, str], ...]
    eos_id: int

    def __post_init__(self):
        ids = [tid for tid, _ in self.tokens]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate token ids in vocab")
        if self.eos_id not in ids:
            raise ValueError(f"eos_id {self.eos_id} not among token ids")

    @classmethod
    def from_texts(cls, texts: list[str], eos_text: str = "") -> "Vocab":
        tokens = [(i, t) for i, t in enumerate(texts)]
        eos_id = len(texts)
        tokens.append((eos_id, eos_text))
        return cls(tuple(tokens), eos_id)

    def text_of(self, token_id: int) -> str:
        for tid, text in self.tokens:
            if tid == token_id:
                return text
        raise KeyError(token_id)


class VocabFormatError(ValueError):
    pass


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def _escape_token(text: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in text)


def _unescape_token(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\":
            if i + 1 >= len(text) or text[i + 1] not in _UNESCAPES:
                raise VocabFormatError(f"bad escape in token text {text!r}")
            out.append(_UNESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def save_vocab(vocab: Vocab, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"eos_id\t{vocab.eos_id}\n")
        for tid, text in vocab.tokens:
            fh.write(f"{tid}\t{_escape_token(text)}\n")


def load_vocab(path: str | Path) -> Vocab:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("eos_id\t"):
        raise VocabFormatError(f"{path}: first line must be 'eos_id<TAB>N'")
    try:
        eos_id = int(lines[0].split("\t", 1)[1])
    except ValueError as e:
        raise VocabFormatError(f"{path}:1: bad eos_id") from e
    tokens: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        if "\t" not in line:
            raise VocabFormatError(f"{path}:{lineno}: expected token_id<TAB>text")
        tid_str, _, text = line.partition("\t")
        try:
            tid = int(tid_str)
        except ValueError as e:
            raise VocabFormatError(f"{path}:{lineno}: bad token id {tid_str!r}") from e
        tokens.append((tid, _unescape_token(text)))
    try:
        return Vocab(tuple(tokens), eos_id)
    except ValueError as e:
        raise VocabFormatError(f"{path}: {e}") from e


def segmentations(name: str, vocab: Vocab) -> set[tuple[int, ...]]:
    """All token-id sequences whose texts concatenate exactly to ``name``.

    Position-indexed dynamic programming over reachable offsets, with
    backtracking to reconstruct every viable sequence.
    """
    n = len(name)
    starts: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for tid, text in vocab.tokens:
        if tid == vocab.eos_id or not text:
            continue
        length = len(text)
        for i in range(n - length + 1):
            if name.startswith(text, i):
                starts[i].append((tid, length))
    reaches_end = [False] * (n + 1)
    reaches_end[n] = True
    for i in range(n - 1, -1, -1):
        reaches_end[i] = any(reaches_end[i + length] for _, length in starts[i])
    out: set[tuple[int, ...]] = set()
    if not reaches_end[0] or n == 0:
        return out

    acc: list[int] = []

    def walk(i: int) -> None:
        if i == n:
            out.add(tuple(acc))
            return
        for tid, length in starts[i]:
            if reaches_end[i + length]:
                acc.append(tid)
                walk(i + length)
                acc.pop()

    walk(0)
    return out


def _prefix_set(names: frozenset[str] | set[str]) -> frozenset[str]:
    prefixes: set[str] = set()
    for name in names:
        for i in range(1, len(name) + 1):
            prefixes.add(name[:i])
    return frozenset(prefixes)


class DecodeSession:
    """Immutable compiled tables shared by all states of one decoding run."""

    def __init__(
        self,
        spec: ApiSpec,
        vocab: Vocab,
        max_string_len: int = 256,
        max_depth: int | None = None,
    ):
        if not spec.functions:
            raise EmptySpecError("spec has no functions; nothing to generate")
        if max_depth is not None and max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        unspellable = [
            name
            for name in sorted(spec.functions | spec.arguments)
            if not segmentations(name, vocab)
        ]
        if unspellable:
            raise UnspellableNameError(unspellable)
        self.spec = spec
        self.vocab = vocab
        self.max_string_len = max_string_len
        self.max_depth = max_depth
        self._fn_names = frozenset(spec.functions)
        self._fn_prefixes = _prefix_set(spec.functions)
        self._arg_names = {f: spec.args_for(f) for f in spec.functions}
        self._arg_prefixes = {f: _prefix_set(spec.args_for(f)) for f in spec.functions}
        self._spendable = tuple(
            (tid, text) for tid, text in vocab.tokens if tid != vocab.eos_id and text
        )

    # -- character automaton ------------------------------------------------

    def _close(self, stack: tuple[str, ...]):
        remaining = stack[:-1]
        if remaining:
            return (_M_COMMA_OR_CLOSE, remaining, "", " ", False, 0, False)
        return (_M_COMPLETE, (), "", "", False, 0, False)

    def _step_char(self, cfg, ch: str):
        mode, stack, prefix, lit, allow_close, str_len, esc = cfg
        if mode == _M_COMPLETE:
            return None
        if lit:
            if ch != lit[0]:
                return None
            lit = lit[1:]
            if lit:
                return (mode, stack, prefix, lit, allow_close, str_len, esc)
            if mode == _M_OPEN:
                return (_M_ARG_OR_CLOSE, stack, "", "", True, 0, False)
            if mode == _M_EQUALS:
                return (_M_VALUE, stack, "", "", False, 0, False)
            return (mode, stack, prefix, "", allow_close, str_len, esc)
        if mode == _M_FUNC:
            if ch == " ":
                if prefix in self._fn_names:
                    return (_M_OPEN, stack + (prefix,), "", "( ", False, 0, False)
                return None
            extended = prefix + ch
            if extended in self._fn_prefixes:
                return (_M_FUNC, stack, extended, "", False, 0, False)
            return None
        if mode == _M_ARG_OR_CLOSE:
            current = stack[-1]
            if ch == ")" and allow_close and not prefix:
                return self._close(stack)
            if ch == " ":
                if prefix in self._arg_names[current]:
                    return (_M_EQUALS, stack, "", "= ", False, 0, False)
                return None
            extended = prefix + ch
            if extended in self._arg_prefixes[current]:
                return (_M_ARG_OR_CLOSE, stack, extended, "", allow_close, 0, False)
            return None
        if mode == _M_VALUE:
            if ch == _QUOTE:
                return (_M_STRING, stack, "", "", False, 0, False)
            if (self.max_depth is None or len(stack) < self.max_depth) and (
                ch in self._fn_prefixes
            ):
                return (_M_FUNC, stack, ch, "", False, 0, False)
            return None
        if mode == _M_STRING:
            if esc:
                if ch in (_QUOTE, _BACKSLASH):
                    return (_M_STRING, stack, "", "", False, str_len + 1, False)
                return None
            if ch == _QUOTE:
                return (_M_COMMA_OR_CLOSE, stack, "", " ", False, 0, False)
            if ch == _BACKSLASH:
                if str_len + 2 <= self.max_string_len:
                    return (_M_STRING, stack, "", "", False, str_len, True)
                return None
            if str_len + 1 <= self.max_string_len:
                return (_M_STRING, stack, "", "", False, str_len + 1, False)
            return None
        if mode == _M_COMMA_OR_CLOSE:
            if ch == ",":
                return (_M_ARG_OR_CLOSE, stack, "", " ", False, 0, False)
            if ch == ")":
                return self._close(stack)
            return None
        return None

    def step_text(self, cfg, text: str):
        for ch in text:
            cfg = self._step_char(cfg, ch)
            if cfg is None:
                return None
        return cfg


@dataclass(frozen=True)
class DecodeState:
    session: DecodeSession = field(compare=False, repr=False)
    config: tuple = (
        _M_FUNC,
        (),
        "",
        "",
        False,
        0,
        False,
    )
    emitted: str = ""

    @property
    def mode(self) -> Mode:
        return _MODE_ENUM[self.config[0]]

    @property
    def is_complete(self) -> bool:
        return self.config[0] == _M_COMPLETE

    @property
    def stack(self) -> tuple[str, ...]:
        return self.config[1]


def new_session(
    spec: ApiSpec,
    vocab: Vocab,
    max_string_len: int = 256,
    max_depth: int | None = None,
) -> DecodeState:
    """Fresh state expecting a function name from the full valid-function set."""
    session = DecodeSession(spec, vocab, max_string_len, max_depth)
    return DecodeState(session)


def allowed_tokens(state: DecodeState) -> set[int]:
    """Exact allowed-token set: tokens whose text keeps a valid completion live."""
    session = state.session
    if state.is_complete:
        return {session.vocab.eos_id}
    cfg = state.config
    allowed: set[int] = set()
    for tid, text in session._spendable:
        if session.step_text(cfg, text) is not None:
            allowed.add(tid)
    return allowed


def advance(state: DecodeState, token_id: int) -> DecodeState:
    session = state.session
    if state.is_complete:
        if token_id == session.vocab.eos_id:
            return state
        raise DisallowedTokenError(f"token {token_id} after completion")
    if token_id == session.vocab.eos_id:
        raise DisallowedTokenError("eos before completion")
    text = session.vocab.text_of(token_id)
    cfg = session.step_text(state.config, text) if text else None
    if cfg is None:
        raise DisallowedTokenError(f"token {token_id} ({text!r}) not allowed here")
    return DecodeState(session, cfg, state.emitted + text)


def mock_decode(
    spec: ApiSpec,
    vocab: Vocab,
    seed: int,
    max_steps: int = 4096,
    max_string_len: int = 256,
    max_depth: int | None = None,
) -> str:
    """Stand-in sampler: uniform seeded choice over allowed tokens until Complete."""
    state = new_session(spec, vocab, max_string_len, max_depth)
    rng = random.Random(seed)
    for step in range(max_steps):
        if state.is_complete:
            return state.emitted
        choices = sorted(allowed_tokens(state))
        if not choices:
            raise IncompleteDecodeError(state.emitted, step)
        state = advance(state, rng.choice(choices))
    if state.is_complete:
        return state.emitted
    raise IncompleteDecodeError(state.emitted, max_steps)


@dataclass(frozen=True)
class OverheadReport:
    n_steps: int
    build_time_s: float
    constrained_time_s: float
    constrained_per_step_s: float
    baseline_time_s: float
    baseline_per_step_s: float
    ratio: float


def overhead_report(
    spec: ApiSpec,
    vocab: Vocab,
    n_steps: int,
    seed: int = 17,
    max_string_len: int = 64,
    max_depth: int | None = 3,
) -> OverheadReport:
    """Mean per-step cost of mask+advance vs. an unconstrained sampling step.

    Sessions restart on completion until n_steps total steps are consumed.
    Build time (segmentation precomputation and prefix tables) is reported
    separately from per-step time.
    """
    t0 = time.perf_counter()
    initial = new_session(spec, vocab, max_string_len, max_depth)
    build_time = time.perf_counter() - t0

    rng = random.Random(seed)
    state = initial
    steps = 0
    t0 = time.perf_counter()
    while steps < n_steps:
        if state.is_complete:
            state = DecodeState(initial.session)
        choices = sorted(allowed_tokens(state))
        if not choices:
            state = DecodeState(initial.session)
            continue
        state = advance(state, rng.choice(choices))
        steps += 1
    constrained = time.perf_counter() - t0

    all_ids = [tid for tid, _ in vocab.tokens]
    rng2 = random.Random(seed)
    t0 = time.perf_counter()
    for _ in range(n_steps):
        rng2.choice(all_ids)
    baseline = time.perf_counter() - t0

    per_constrained = constrained / n_steps
    per_baseline = baseline / n_steps if baseline > 0 else 1e-12
    return OverheadReport(
        n_steps,
        build_time,
        constrained,
        per_constrained,
        baseline,
        baseline / n_steps,
        per_constrained / per_baseline,
    )
