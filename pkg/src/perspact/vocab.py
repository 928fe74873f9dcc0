"""Fixed vocabulary shared by the simulator, the scenario generator and the prompts."""

from __future__ import annotations

ROOMS = ("bedroom", "hallway", "kitchen", "closet")

# noun -> (attribute kind, attribute values)
NOUNS: dict[str, tuple[str, tuple[str, ...]]] = {
    "tie": ("color", ("red", "blue", "green")),
    "candle": ("size", ("small", "large")),
    "mug": ("color", ("green", "white")),
    "book": ("size", ("thick", "thin")),
}

CONTAINERS = ("basket", "box", "crate", "drawer")

ATTRIBUTE_KINDS = ("color", "size")

MATCHER = "matcher"
DIRECTOR = "director"


def object_id(noun: str, value: str) -> str:
    return f"{noun}_{value}"


def article(phrase: str) -> str:
    return "an" if phrase[:1] in "aeiou" else "a"


def with_article(phrase: str) -> str:
    return f"{article(phrase)} {phrase}"


def value_kinds() -> dict[str, str]:
    """Map every attribute value to the kind it belongs to."""
    kinds: dict[str, str] = {}
    for kind, values in NOUNS.values():
        for value in values:
            kinds[value] = kind
    return kinds
