"""Write the hand-checkable trial-log fixtures used by the metrics tests."""

import random
from pathlib import Path

from perspact.harness import StepEntry, TrialRecord, write_records
from perspact.scenarios import FAMILIES, Family

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "metrics"


def synthetic(trial, family, seed, first_take, steps, asks, success, policy="fixture"):
    """A record whose counts obey the step-accounting rule; filler steps are moves."""
    takes = (first_take is not None) + (success and first_take is False)
    moves = steps - asks - takes
    assert moves >= 0, (trial, steps, asks, takes)
    actions = [("ask(\"Which one?\")", "asked")] * asks + [("move(kitchen)", "moved")] * moves
    if first_take is not None:
        actions.append(("take(tie_red)" if first_take else "take(tie_blue)", "took-correct" if first_take else "took-incorrect"))
    if success and first_take is False:
        actions.append(("take(tie_red)", "took-correct"))
    entries = [StepEntry(i, a, e, f"{i:016x}") for i, (a, e) in enumerate(actions)]
    return TrialRecord(
        trial, family, seed, policy, "rule", entries, success, first_take, steps, asks, moves, 0, takes, 0,
        None if success else "step cap",
    )  # fmt: skip


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    # Distractor, five trials: three wrong first takes, steps 3, 2, 6, 5, 2.
    dist = [
        synthetic("Dist-0", Family.DISTRACTOR, 2000, False, 3, 0, True),
        synthetic("Dist-1", Family.DISTRACTOR, 2001, True, 2, 0, True),
        synthetic("Dist-2", Family.DISTRACTOR, 2002, False, 6, 1, True),
        synthetic("Dist-3", Family.DISTRACTOR, 2003, False, 5, 2, True),
        synthetic("Dist-4", Family.DISTRACTOR, 2004, True, 2, 1, True),
    ]
    write_records(dist, OUT / "dist_3_of_5.jsonl")

    rng = random.Random(35)
    records = []
    for fi, family in enumerate(FAMILIES):
        for t in range(5):
            roll = rng.random()
            first = None if roll < 0.15 else roll < 0.6
            asks = rng.randint(0, 3)
            success = first is not None and rng.random() < 0.85
            minimum = asks + (first is not None) + (success and first is False)
            steps = 15 if not success else rng.randint(minimum, minimum + 6)
            records.append(synthetic(f"{family.short}-{t}", family, fi * 1000 + t, first, steps, asks, success))
    write_records(records, OUT / "records_35.jsonl")


if __name__ == "__main__":
    main()
