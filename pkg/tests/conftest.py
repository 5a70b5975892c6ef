import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emovad.labelspace import build_label_space
from emovad.lexicon import lexicon_from_text

# Valence coordinates for joy/sad/happy/anger follow the published word-level
# VAD lexicon; arousal/dominance likewise where known.
FOUR_LABEL_TSV = """word\tV\tA\tD
joy\t0.980\t0.824\t0.794
sad\t0.225\t0.333\t0.149
happy\t1.000\t0.735\t0.772
anger\t0.167\t0.865\t0.657
"""


@pytest.fixture(scope="session")
def four_label_lexicon():
    return lexicon_from_text(FOUR_LABEL_TSV)


@pytest.fixture(scope="session")
def four_label_space(four_label_lexicon):
    # canonical order as the worked examples give it
    return build_label_space(["joy", "sad", "happy", "anger"], four_label_lexicon)
