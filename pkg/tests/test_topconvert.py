import pytest

from apicheck.expr import flatten, parse, serialize
from apicheck.topconvert import (
    Example,
    ExampleFormatError,
    TopConvertError,
    TopFormatError,
    TopKind,
    TopNode,
    convert_example,
    load_examples,
    parse_top,
    spis_sample,
    to_api_call,
    write_examples,
)

SHOW_ALARMS_TOP = "[IN:SHOW_ALARMS show my alarms [SL:DATE_TIME for tomorrow ]]"
FIG1_TOP = (
    "[IN:GET_DIRECTIONS Show me one way options to "
    "[SL:DESTINATION [IN:GET_LOCATION [SL:CATEGORY_LOCATION auditorium ] ] ] "
    "by 10am via [SL:PATH 1st ave ] ]"
)


def test_parse_top_flat():
    tree = parse_top(SHOW_ALARMS_TOP)
    assert tree.kind is TopKind.INTENT
    assert tree.label == "SHOW_ALARMS"
    kinds = [c.kind for c in tree.children]
    assert kinds == [TopKind.TOKEN, TopKind.TOKEN, TopKind.TOKEN, TopKind.SLOT]
    slot = tree.children[-1]
    assert slot.label == "DATE_TIME"
    assert [c.label for c in slot.children] == ["for", "tomorrow"]


def test_parse_top_empty_intent():
    assert parse_top("[IN:F ]") == TopNode(TopKind.INTENT, "F")


def test_parse_top_adjacent_brackets():
    # closing brackets need no whitespace separation
    tree = parse_top("[IN:F [SL:A x]]")
    assert tree.children[0].children[0].label == "x"


@pytest.mark.parametrize(
    "text",
    [
        "[IN:F [SL:A [IN:G ] [IN:H ]]]",  # multi-intent slot
        "[XX:F ]",
        "[IN:F ",
        "[IN:F ]]",
        "[IN:lower ]",
        "[SL:A x ]",  # slot root
        "[IN:F [IN:G ]]",  # intent directly under intent
        "stray [IN:F ]",
        "[IN:F ] [IN:G ]",  # two roots
    ],
)
def test_parse_top_errors(text):
    with pytest.raises(TopFormatError):
        parse_top(text)


def test_to_api_call_show_alarms():
    call = to_api_call(parse_top(SHOW_ALARMS_TOP))
    assert serialize(call) == 'SHOW_ALARMS ( DATE_TIME = "for tomorrow" )'


def test_to_api_call_fig1():
    call = to_api_call(parse_top(FIG1_TOP))
    assert serialize(call) == (
        'GET_DIRECTIONS ( DESTINATION = GET_LOCATION ( CATEGORY_LOCATION = "auditorium" ) '
        ', PATH = "1st ave" )'
    )


def test_to_api_call_no_slots():
    assert serialize(to_api_call(parse_top("[IN:F hello there ]"))) == "F ( )"


def test_to_api_call_mixed_slot_children():
    tree = parse_top("[IN:F [SL:A word [IN:G ] ] ]")
    with pytest.raises(TopConvertError):
        to_api_call(tree)


def test_to_api_call_never_invents_labels():
    for top in (SHOW_ALARMS_TOP, FIG1_TOP):
        call = to_api_call(parse_top(top))
        for flat in flatten(call):
            assert f"[IN:{flat.function}" in top
            for name, _value in flat.args:
                assert f"[SL:{name}" in top


def _pool():
    rows = [
        ("e1", 'A ( X = "1" )'),
        ("e2", 'A ( Y = "2" )'),
        ("e3", 'B ( X = "3" )'),
        ("e4", 'B ( Y = "4" )'),
        ("e5", 'A ( X = "5" , Y = "6" )'),
        ("e6", 'C ( )'),
    ]
    return [Example(i, "toy", f"utt {i}", call) for i, call in rows]


def _labels(example):
    labels = set()
    for flat in flatten(parse(example.api_call)):
        labels.add(flat.function)
        labels.update(name for name, _ in flat.args)
    return labels


def test_spis_each_label_once_selects_everything():
    pool = [
        Example("e1", "toy", "u1", 'A ( X = "1" )'),
        Example("e2", "toy", "u2", 'B ( Y = "2" )'),
    ]
    assert spis_sample(pool, 1, seed=0) == pool


def test_spis_coverage():
    pool = _pool()
    for n in (1, 2, 5):
        sampled = spis_sample(pool, n, seed=17)
        all_labels = set().union(*(_labels(e) for e in pool))
        for label in all_labels:
            available = sum(1 for e in pool if label in _labels(e))
            got = sum(1 for e in sampled if label in _labels(e))
            assert got >= min(n, available)


def test_spis_large_n_keeps_rare_examples():
    pool = _pool()
    sampled = spis_sample(pool, 100, seed=1)
    assert sampled == pool


def test_spis_deterministic():
    pool = _pool()
    assert spis_sample(pool, 1, seed=5) == spis_sample(pool, 1, seed=5)


def test_spis_rejects_bad_n():
    with pytest.raises(ValueError):
        spis_sample(_pool(), 0, seed=0)


def test_examples_round_trip(tmp_path):
    path = tmp_path / "examples.jsonl"
    pool = _pool()
    write_examples(pool, path)
    assert load_examples(path) == pool


def test_load_empty_file(tmp_path):
    path = tmp_path / "examples.jsonl"
    path.write_text("")
    assert load_examples(path) == []


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        '{"id": "x"}',
        '{"id": "x", "domain": "d", "utterance": "u"}',
        '{"id": "x", "domain": "d", "utterance": "u", "api_call": "broken ("}',
    ],
)
def test_load_malformed_line_reports_line_number(tmp_path, line):
    path = tmp_path / "examples.jsonl"
    path.write_text('{"id": "ok", "domain": "d", "utterance": "u", "api_call": "F ( )"}\n' + line + "\n")
    with pytest.raises(ExampleFormatError) as err:
        load_examples(path)
    assert ":2:" in str(err.value)


def test_convert_example():
    record = Example("e1", "alarm", "show my alarms for tomorrow", None, SHOW_ALARMS_TOP)
    converted = convert_example(record)
    assert converted.api_call == 'SHOW_ALARMS ( DATE_TIME = "for tomorrow" )'
    assert converted.top_parse == SHOW_ALARMS_TOP
    with pytest.raises(TopConvertError):
        convert_example(Example("e2", "alarm", "u", "F ( )", None))
