"""Exact match and micro-averaged intent/slot F1 for gold/predicted call pairs.

Intents are the multiset of flattened function names. Slots are the multiset
of (argument name, value token) pairs, where a nested-call value contributes
the child function name as its value token. Unparseable predictions count as
zero true positives and |gold| false negatives.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .expr import ApiCall, Grounded, ParseError, flatten, parse, serialize


@dataclass(frozen=True)
class EvalPair:
    gold: str
    predicted: str
    utterance: str = ""


@dataclass(frozen=True)
class MetricsReport:
    exact_match: float
    intent_f1: float
    slot_f1: float
    n: int


def intent_multiset(call: ApiCall) -> Counter:
    return Counter(flat.function for flat in flatten(call))


def slot_multiset(call: ApiCall) -> Counter:
    flats = flatten(call)
    slots: Counter = Counter()
    for flat in flats:
        for name, value in flat.args:
            if isinstance(value, Grounded):
                slots[(name, value.text)] += 1
            else:
                slots[(name, flats[value.child_index].function)] += 1
    return slots


def _try_parse(text: str) -> ApiCall | None:
    try:
        return parse(text)
    except ParseError:
        return None


def exact_match(pairs: list[EvalPair]) -> float:
    """Fraction of pairs whose prediction canonicalizes to the gold call."""
    if not pairs:
        return 0.0
    matches = 0
    for pair in pairs:
        gold = serialize(parse(pair.gold))
        pred = _try_parse(pair.predicted)
        if pred is not None and serialize(pred) == gold:
            matches += 1
    return matches / len(pairs)


def _micro_f1(counts: list[tuple[Counter, Counter | None]]) -> float:
    tp = fp = fn = 0
    for gold, pred in counts:
        if pred is None:
            fn += sum(gold.values())
            continue
        overlap = sum((gold & pred).values())
        tp += overlap
        fp += sum(pred.values()) - overlap
        fn += sum(gold.values()) - overlap
    if tp + fp == 0:
        precision = 1.0 if tp + fn == 0 else 0.0
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 1.0 if tp + fp == 0 else 0.0
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def intent_f1(pairs: list[EvalPair]) -> float:
    counts = []
    for pair in pairs:
        gold = intent_multiset(parse(pair.gold))
        pred = _try_parse(pair.predicted)
        counts.append((gold, None if pred is None else intent_multiset(pred)))
    return _micro_f1(counts)


def slot_f1(pairs: list[EvalPair]) -> float:
    counts = []
    for pair in pairs:
        gold = slot_multiset(parse(pair.gold))
        pred = _try_parse(pair.predicted)
        counts.append((gold, None if pred is None else slot_multiset(pred)))
    return _micro_f1(counts)


def evaluate(pairs: list[EvalPair]) -> MetricsReport:
    return MetricsReport(exact_match(pairs), intent_f1(pairs), slot_f1(pairs), len(pairs))
