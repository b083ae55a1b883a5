import random

import pytest

from leraBench.plan import (
    ARITY,
    DONE_MARKER,
    MAX_PLAN_LENGTH,
    Action,
    ParseError,
    Plan,
    ValidationError,
    parse_plan,
    remaining,
    serialize_plan,
    validate,
)
from leraBench.world.tasks import get_task, task_library


def test_parse_tolerates_numbering_and_blank_lines():
    plan = parse_plan("1. locate(red_block)\n\n  2) pick(red_block)  \nput(apple, fridge)\n")
    assert [str(a) for a in plan] == ["locate(red_block)", "pick(red_block)", "put(apple, fridge)"]
    assert plan.cursor == 0


def test_parse_names_line_of_unknown_verb():
    with pytest.raises(ParseError) as info:
        parse_plan("locate(red_block)\nfly(red_block)")
    assert info.value.line == 2
    assert 'unknown verb "fly"' in info.value.reason


def test_parse_rejects_wrong_arity():
    with pytest.raises(ParseError) as info:
        parse_plan("put(apple)")
    assert "wrong arity" in info.value.reason


def test_parse_rejects_prose():
    with pytest.raises(ParseError):
        parse_plan("I think the robot should fly(red_block) and then see what happens.")


@pytest.mark.parametrize("text", ["", "\n\n", "   "])
def test_parse_rejects_empty_text(text):
    with pytest.raises(ParseError, match="empty plan"):
        parse_plan(text)


def test_done_marker_is_the_empty_plan():
    assert parse_plan(DONE_MARKER) == Plan()
    assert serialize_plan(Plan()) == DONE_MARKER


def test_done_marker_cannot_be_mixed_with_actions():
    with pytest.raises(ParseError):
        parse_plan("<done>\npick(red_block)")
    with pytest.raises(ParseError):
        parse_plan("pick(red_block)\n<done>")


def test_plan_length_is_capped():
    text = "\n".join(["locate(red_block)"] * (MAX_PLAN_LENGTH + 1))
    with pytest.raises(ParseError) as info:
        parse_plan(text)
    assert info.value.line == MAX_PLAN_LENGTH + 1
    assert len(parse_plan("\n".join(["locate(red_block)"] * MAX_PLAN_LENGTH))) == MAX_PLAN_LENGTH


def test_actions_check_their_tokens():
    with pytest.raises(ValueError):
        Action.of("pick", "Red_Block")
    with pytest.raises(ValueError):
        Action.of("jump", "red_block")
    assert Action.of("put", "apple", "fridge").target == "fridge"


def test_validate_against_family_vocabulary():
    tabletop = get_task("tabletop-01").vocabulary
    plan = parse_plan("locate(red_block)\npick(red_block)")
    assert validate(plan, tabletop) is plan
    with pytest.raises(ValidationError) as info:
        validate(parse_plan("locate(red_block)\ngoto(red_bowl)"), tabletop)
    assert info.value.index == 1
    with pytest.raises(ValidationError, match="unknown object"):
        validate(parse_plan("locate(purple_block)"), tabletop)


def test_serialize_starts_at_the_cursor():
    plan = parse_plan("locate(red_block)\npick(red_block)\nlocate(red_bowl)")
    advanced = plan.advance()
    assert advanced.current() == Action.of("pick", "red_block")
    assert serialize_plan(advanced) == "pick(red_block)\nlocate(red_bowl)"
    assert remaining(advanced) == Plan(advanced.actions[1:])
    assert parse_plan(serialize_plan(advanced)) == remaining(advanced)


def test_advance_stops_at_the_end():
    plan = parse_plan("pick(red_block)").advance().advance()
    assert plan.done
    assert plan.current() is None
    assert serialize_plan(plan) == DONE_MARKER


def test_random_valid_plans_survive_serialize_and_parse():
    rng = random.Random(99)
    library = task_library()
    for _ in range(1000):
        vocab = rng.choice(library).vocabulary
        verbs, objects = sorted(vocab.verbs), sorted(vocab.objects)
        actions = []
        for _ in range(rng.randint(0, MAX_PLAN_LENGTH)):
            verb = rng.choice(verbs)
            actions.append(Action(verb, tuple(rng.choice(objects) for _ in range(ARITY[verb]))))
        plan = Plan(tuple(actions))
        validate(plan, vocab)
        assert parse_plan(serialize_plan(plan)) == plan
