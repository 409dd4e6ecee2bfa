import dataclasses

import numpy as np
import pytest

from fslr.corpus import WindowBatch, format_document, parse_tagged
from fslr.errors import ConfigError
from fslr.synth import (STANDARD_TRIGGERS, SyntheticConfig, Trigger,
                        generate_synthetic_corpus, split_seeds, standard_config)


def small(**kw):
    base = dict(n_docs=50, doc_length=40, vocab_size=300,
                triggers=(Trigger("mr", "PER", 1, 0.3, 50.0),))
    base.update(kw)
    return SyntheticConfig(**base)


def text(docs):
    return "\n".join(format_document(d) for d in docs)


def test_same_seed_same_corpus():
    cfg = small()
    assert text(generate_synthetic_corpus(cfg, 1)) == text(generate_synthetic_corpus(cfg, 1))
    assert text(generate_synthetic_corpus(cfg, 1)) != text(generate_synthetic_corpus(cfg, 2))


def test_shape_and_round_trip():
    cfg = small()
    docs = generate_synthetic_corpus(cfg, 3)
    assert len(docs) == cfg.n_docs
    assert all(len(d) == cfg.doc_length for d in docs)
    assert parse_tagged(text(docs)) == docs


def test_zero_entity_rate_has_no_entity_windows():
    docs = generate_synthetic_corpus(small(entity_rate=0.0), 5)
    assert all(d.entity_spans == () for d in docs)
    assert not WindowBatch.from_documents(docs, 5, "PER").labels.any()


@pytest.mark.parametrize("kw", [dict(vocab_size=0), dict(entity_vocab_size=0),
                                dict(entity_rate=1.5), dict(entity_types={"DATE": 1.0}),
                                dict(triggers=(Trigger("w3"),)),
                                dict(triggers=(Trigger("a b"),)),
                                dict(triggers=(Trigger("x", "LOC", 1, 0.7),
                                               Trigger("y", "LOC", 1, 0.7)))])
def test_degenerate_configs(kw):
    with pytest.raises(ConfigError):
        small(**kw)


def test_config_dict_round_trip():
    cfg = standard_config()
    assert SyntheticConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        SyntheticConfig.from_dict({"bogus": 1})


def test_split_seeds_are_distinct_and_stable():
    a = split_seeds(7)
    assert a == split_seeds(7) and len(set(a)) == 3


def test_planted_lift():
    """Empirical lift of 'mr' at k = N over >= 1e5 windows is within 20% of 50."""
    cfg = dataclasses.replace(standard_config(), n_docs=2000)
    docs = generate_synthetic_corpus(cfg, 1)
    b = WindowBatch.from_documents(docs, 10, "PER")
    assert len(b) >= 10 ** 5
    col = b.ids[:, -1] == b.vocab.index("mr")
    lift = col[b.labels].mean() / col[~b.labels].mean()
    assert abs(lift / 50.0 - 1) <= 0.2


def test_offset_places_trigger_further_left():
    cfg = small(n_docs=400, triggers=(Trigger("said", "PER", 2, 0.5, 10.0),))
    b = WindowBatch.from_documents(generate_synthetic_corpus(cfg, 2), 4, "PER")
    said = b.vocab.index("said")
    at = {k: (b.ids[b.labels, k] == said).mean() for k in range(4)}
    assert at[2] > 0.4 and at[3] < 0.1  # k = N - 1 carries the trigger


def test_standard_triggers_fit_slots():
    cfg = standard_config(10)
    assert cfg.triggers == STANDARD_TRIGGERS
    assert {t.entity_type for t in cfg.triggers} <= set(cfg.entity_types)


def test_noise_tokens_are_hapaxes():
    docs = generate_synthetic_corpus(small(noise_rate=0.2), 9)
    noise = [t for d in docs for t in d.tokens if t.startswith("h")]
    assert noise and len(noise) == len(set(noise))
    assert np.mean([len(d) for d in docs]) == 40
