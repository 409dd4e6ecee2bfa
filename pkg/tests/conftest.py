import dataclasses
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from fslr.corpus import WindowBatch, parse_tagged
from fslr.counts import count_batch
from fslr.evaluate import TestTypes
from fslr.synth import generate_synthetic_corpus, split_seeds, standard_config

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

STANDARD_SEED = 7
STANDARD_N = 10
STANDARD_TYPE = "PER"

# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")


@dataclasses.dataclass
class Standard:
    train_docs: list
    valid_docs: list
    test_docs: list
    train: WindowBatch
    valid: TestTypes
    test_batch: WindowBatch
    test: TestTypes
    model: object


@pytest.fixture(scope="session")
def standard():
    """The seeded planted-trigger corpus: 10k train, 1k valid, 1k test docs."""
    cfg = standard_config()
    small = dataclasses.replace(cfg, n_docs=1000)
    s_train, s_valid, s_test = split_seeds(STANDARD_SEED)
    train_docs = generate_synthetic_corpus(cfg, s_train)
    valid_docs = generate_synthetic_corpus(small, s_valid)
    test_docs = generate_synthetic_corpus(small, s_test)
    train = WindowBatch.from_documents(train_docs, STANDARD_N, STANDARD_TYPE)
    valid = WindowBatch.from_documents(valid_docs, STANDARD_N, STANDARD_TYPE)
    test = WindowBatch.from_documents(test_docs, STANDARD_N, STANDARD_TYPE)
    return Standard(train_docs, valid_docs, test_docs, train,
                    TestTypes.from_batch(valid), test, TestTypes.from_batch(test),
                    count_batch(train))


TINY_CORPUS = """\
the mr <PER> John Smith </PER> met dr <PER> Ann </PER> in <LOC> Paris </LOC> today
a b c <LOC> d </LOC>
mr <PER> Bo </PER> said that mr <PER> Al Li </PER> went to <LOC> Rome </LOC> .
"""


@pytest.fixture
def tiny_docs():
    return parse_tagged(TINY_CORPUS)
