"""Regenerate the shipped reference scenario files from their in-code encodings."""

from pathlib import Path

from perspact.scenarios import FAMILIES, build_reference, write_instance

ROOT = Path(__file__).resolve().parents[1] / "src" / "perspact" / "data" / "scenarios" / "reference"

for family in FAMILIES:
    write_instance(build_reference(family), ROOT / family.value)
    print(f"wrote {ROOT / family.value}")
