import pytest
from hypothesis import HealthCheck, settings

from gecforge.lexicon import default_lexicon
from gecforge.lm import extract_capital_words, train_lm
from gecforge.spellcheck import Vocab, fixture_corpus

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def spell_corpus():
    return [line.split() for line in fixture_corpus()]


@pytest.fixture(scope="session")
def spell_lm(spell_corpus):
    return train_lm(spell_corpus)


@pytest.fixture(scope="session")
def spell_vocab(spell_corpus, lexicon):
    return Vocab.from_sentences(spell_corpus, lexicon.known_words)


@pytest.fixture(scope="session")
def capitals(spell_corpus):
    return extract_capital_words(spell_corpus)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
