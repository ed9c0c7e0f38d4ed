"""Bundled NACA 4-digit coordinate files used by tests and the smoke pipeline."""
from pathlib import Path

FIXTURE_DIR = Path(__file__).with_name("fixtures")


def fixture_paths() -> list[Path]:
    return sorted(FIXTURE_DIR.glob("*.dat"))
