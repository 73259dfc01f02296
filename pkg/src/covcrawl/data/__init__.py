"""Bundled fixture world (web file plus seeds, priors and truth sidecars)."""
from importlib import resources
from pathlib import Path

FIXTURE_NAME = "fixture_world.json"


def fixture_world_path() -> Path:
    return Path(str(resources.files(__name__).joinpath(FIXTURE_NAME)))
