from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permshape.config import ExperimentConfig, load_config, parse_config
from permshape.errors import ConfigError, DomainError
from permshape.weights import WeightModel

finite = st.floats(0.05, 20.0, allow_nan=False)

models = st.one_of(
    st.builds(WeightModel.polylog, finite, st.integers(0, 3)),
    st.tuples(finite, st.integers(0, 3), st.floats(0.1, 2.0), st.floats(0.0, 0.99)).map(
        lambda a: WeightModel.polylog(a[0], a[1], a[2], a[3] * a[0] / 2)),
    st.builds(WeightModel.constant, finite),
    st.builds(WeightModel.custom, st.lists(st.floats(0.0, 5.0), min_size=1, max_size=6).filter(any)),
)

configs = st.builds(
    ExperimentConfig,
    model=models,
    ensemble=st.sampled_from(["canonical", "grand_canonical"]),
    n=st.one_of(st.none(), st.integers(1, 10**6)),
    t=st.one_of(st.none(), st.floats(0.01, 0.99)),
    samples=st.integers(1, 10**5),
    cuts=st.lists(st.integers(1, 1000), max_size=5).map(tuple),
    x=st.lists(st.floats(0.0, 10.0), max_size=5).map(tuple),
    seed=st.integers(0, 2**64 - 1),
    workers=st.integers(1, 16),
    out=st.from_regex(r"[A-Za-z0-9_./-]{1,20}", fullmatch=True),
    suite=st.sampled_from(["quick", "full", "4,5"]),
)


@settings(max_examples=200, deadline=None)
@given(configs)
def test_round_trip(cfg):
    assert parse_config(cfg.emit()) == cfg


def test_defaults_and_partial():
    cfg = parse_config("[ensemble]\nn = 50\n")
    assert cfg.n == 50 and cfg.model == WeightModel.polylog(1.0) and cfg.suite == "quick"
    cfg = parse_config("[model]\nfamily = constant\ntheta = 2\n[grid]\ncuts = 1, 2, 3\n")
    assert cfg.model == WeightModel.constant(2.0) and cfg.cuts == (1, 2, 3)


def test_unknown_key_location():
    with pytest.raises(ConfigError) as info:
        parse_config("[model]\nalpha = 1\ngamma = 2\n")
    assert (info.value.line, info.value.column) == (3, 1)
    assert "line 3, column 1" in str(info.value)


def test_unknown_section_location():
    with pytest.raises(ConfigError) as info:
        parse_config("[run]\nseed = 1\n\n[extras]\nfoo = 1\n")
    assert (info.value.line, info.value.column) == (4, 1)


@pytest.mark.parametrize("text,line", [
    ("alpha = 1\n", 1),
    ("[model]\nalpha = 1\nnot a pair\n", 3),
    ("[model]\nalpha = 1\nalpha = 2\n", 3),
    ("[run]\nseed = minus\n", 2),
    ("[ensemble]\nkind = micro\n", 1),
    ("[model]\nfamily = zeta\n", 1),
    ("[run]\nseed = -4\n", 0),
])
def test_malformed(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


def test_overrides():
    cfg = ExperimentConfig().with_overrides(seed=9, workers=None)
    assert cfg.seed == 9 and cfg.workers == 1
    with pytest.raises(DomainError):
        ExperimentConfig().with_overrides(seed=-1)


def test_load_config(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(ExperimentConfig(n=7).emit())
    assert load_config(p).n == 7
