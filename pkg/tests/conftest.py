import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from music2image.agents.lexicon import load_lexicon
from music2image.agents.attribute_agents import load_templates


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def sample_captions_path():
    from importlib import resources
    with resources.as_file(
        resources.files("music2image.data").joinpath("sample_captions.jsonl")
    ) as p:
        yield p


GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN_DIR
