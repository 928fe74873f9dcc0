"""Record the shipped playback transcripts for the model-backed matcher loops.

A scripted responder stands in for the hosted model. Replies are consumed in
call order, so the script below doubles as a readable record of each trial.
"""

from pathlib import Path

from perspact.harness import RunConfig, run_suite
from perspact.llm import FunctionTransport, RecordingTransport

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "transcripts"

SCRIPTS = {
    # single-shot matcher, rule-based Director
    "single_shot_far": (
        "single-shot",
        "rule",
        [
            "There are two ties around, I should find out which one.",  # no action line -> reprompt
            'Thought: a blue tie here, a red one in the hallway.\nask("Which tie do you mean?")',
            "The Director wants the red tie in the hallway.\nmove(hallway)",
            "Action: take(tie_red)",
        ],
    ),
    # ReAct matcher, rule-based Director
    "react_far": (
        "react",
        "rule",
        [
            "Thought: I can see a blue tie here and a red tie in the hallway.",
            "Thought: The Director can see both ties, so I should ask which one.",
            'ask("Do you mean the red tie in the hallway?")',
            "Thought: The target is the red tie in the hallway.\nmove(hallway)",
            "take the red tie now",  # no action line -> reprompt
            "take(tie_red)",
        ],
    ),
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (policy, director, replies) in SCRIPTS.items():
        path = OUT / f"{name}.jsonl"
        path.unlink(missing_ok=True)
        queue = list(replies)
        transport = RecordingTransport(FunctionTransport(lambda _ex: queue.pop(0)), path)
        config = RunConfig(families=("Far",), policy=policy, director=director, trials=1, transcript=str(path))
        (record,) = run_suite(config, transport=transport)
        assert record.success and not queue, (name, record, queue)
        print(f"{path}: {len(replies)} responses, {record.steps} steps")


if __name__ == "__main__":
    main()
