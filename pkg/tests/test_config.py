from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedbalance.config import ExperimentConfig, dump_config, load_config, parse_config


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    assert parse_config(dump_config(cfg)) == cfg


@given(seed=st.integers(0, 2**63 - 1), eta=st.floats(1e-6, 10), rho=st.none() | st.floats(0, 5),
       taus=st.lists(st.integers(1, 500), min_size=1, max_size=6).map(tuple),
       t_cm=st.none() | st.floats(1e-3, 10), enforce=st.booleans(),
       scheme=st.sampled_from(["iid", "label-sorted"]))
@settings(max_examples=100, deadline=None)
def test_round_trip_property(seed, eta, rho, taus, t_cm, enforce, scheme):
    cfg = ExperimentConfig(seed=seed, eta=eta, rho=rho, tau_values=taus, t_cm=t_cm,
                           enforce_budget=enforce, scheme=scheme, h=(1e-9, 2.5e-9))
    text = dump_config(cfg)
    assert parse_config(text) == cfg
    assert dump_config(parse_config(text)) == text


def test_parse_comments_and_overrides():
    cfg = parse_config("# budgets\nt_tot = 50  # seconds\nE_tot=9\nrho = auto\n", seed=4)
    assert (cfg.t_tot, cfg.E_tot, cfg.rho, cfg.seed) == (50.0, 9.0, None, 4)


@pytest.mark.parametrize("text", ["bogus = 1", "eta", "eta = fast", "enforce_budget = maybe",
                                  "mode = train", "N = 0", "tau_values = 0,1",
                                  "dataset = idx\nidx_images = /nonexistent\nidx_labels = /nope"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_load_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("N = 3\n")
    assert load_config(p).N == 3
    with pytest.raises(OSError, match="c2.cfg"):
        load_config(tmp_path / "c2.cfg")


def test_resources_and_constants():
    cfg = ExperimentConfig(rho=0.01, grad_f_star=1000.0, epsilon=0.0)
    assert cfg.constants().step_gain == pytest.approx(1.0)
    assert cfg.resources().t_cm == 0.14
    with pytest.raises(ValueError):
        ExperimentConfig().constants()
    assert ExperimentConfig().constants(rho=1.0, grad_f_star=2.0, epsilon=0.0).grad_f_star == 2.0
