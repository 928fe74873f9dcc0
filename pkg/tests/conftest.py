from pathlib import Path

import pytest

from perspact.scenarios import Family, InstructionDescriptor, ScenarioInstance, build_world
from perspact.vocab import NOUNS, object_id
from perspact.pddl import Portable

FIXTURES = Path(__file__).parent / "fixtures"


def portable(noun: str, value: str) -> tuple[str, Portable]:
    return object_id(noun, value), Portable(noun, ((NOUNS[noun][0], value),))


def custom_instance(
    edges, matcher, director, placements, target, containers=None, instruction=None, lengths=None,
    family=Family.BASE, distractor=None,
):  # fmt: skip
    """Ad-hoc instance; ``placements`` maps (noun, value) -> room or container."""
    objects = {}
    for (noun, value), place in placements.items():
        oid, p = portable(noun, value)
        objects[oid] = (p, place)
    world = build_world(edges, matcher, director, objects, containers, lengths)
    instruction = instruction or InstructionDescriptor(world.portables[target].noun)
    return ScenarioInstance(family, world, target, instruction, distractor)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
