import numpy as np
import pytest

import helpers
from ipcensus.blockmap import TaxonomyLabel
from ipcensus.errors import ConfigError
from ipcensus.synth import ScenarioConfig, generate, parse_scenario_config


def test_same_seed_gives_byte_identical_outputs():
    a = generate(helpers.small_config(seed=5))
    b = generate(helpers.small_config(seed=5))
    assert set(a.files) == set(b.files)
    for name in a.files:
        assert a.files[name] == b.files[name], name
    c = generate(helpers.small_config(seed=6))
    assert any(a.files[name] != c.files[name] for name in a.files)


def test_leaf_counts_match_configured_proportions():
    cfg = helpers.small_config(seed=7)
    scenario = generate(cfg)
    lo, hi = cfg.window
    n = hi - lo
    counts = scenario.truth.leaf_counts
    assert sum(counts.values()) == n
    assert abs(counts[TaxonomyLabel.RESERVED] - cfg.frac_reserved * n) <= len(counts)
    labels = scenario.truth.labels[lo:hi]
    for label, count in counts.items():
        assert int(np.count_nonzero(labels == np.uint8(label))) == count


def test_zero_noise_world_recovers_exactly():
    scenario = generate(helpers.small_config(seed=8, spoofing=False))
    art = helpers.run_library_pipeline(scenario)
    for name in ("darknet", "flowlog", "bidirlog", "sampled"):
        assert art["curated"][name] == scenario.truth.source_blocks[name], name
    assert art["routed"] == scenario.truth.routed
    assert art["used"] == scenario.truth.expected_used


def test_spoofed_world_still_curates_exactly_for_rule_chain_vps():
    scenario = generate(helpers.small_config(seed=9))
    art = helpers.run_library_pipeline(scenario)
    for name in ("darknet", "flowlog", "bidirlog"):
        assert art["curated"][name] == scenario.truth.source_blocks[name], name


def test_end_to_end_recall_and_purity():
    scenario = generate(helpers.small_config(seed=10))
    art = helpers.run_library_pipeline(scenario)
    used = art["used"]
    expected = scenario.truth.expected_used
    recall = len(used & expected) / len(expected)
    assert recall >= 0.99
    assert used.issubset(scenario.truth.routed)  # zero unrouted false positives


def test_table_shaped_scenario_hits_configured_fractions():
    cfg = helpers.small_config(
        seed=11,
        darknet_unrouted_fraction=0.316,
        darknet_dark_fraction=0.0,
        darknet_total_src_blocks=500,
    )
    scenario = generate(cfg)
    art = helpers.run_library_pipeline(scenario)
    before = art["metrics"]["darknet"].validation_before
    assert abs(before.unrouted_fraction - 0.316) <= 0.005


def test_pre_filter_sets_match_bookkeeping():
    scenario = generate(helpers.small_config(seed=12))
    art = helpers.run_library_pipeline(scenario)
    for name in ("darknet", "flowlog", "bidirlog", "sampled"):
        before = art["metrics"][name].before
        assert scenario.truth.vp_before[name].issubset(before), name


def test_config_validation():
    with pytest.raises(ConfigError):
        generate(ScenarioConfig(frac_used=0.9))  # proportions no longer sum to 1
    with pytest.raises(ConfigError):
        generate(ScenarioConfig(detect={"isi": 1.5}))
    with pytest.raises(ConfigError):
        generate(ScenarioConfig(window=(5, 5)))


def test_parse_scenario_config_overrides():
    cfg = parse_scenario_config([
        "seed 99",
        "window 1000:2000",
        "# comment",
        "frac.used 0.224",
        "frac.routed_unused 0.359",
        "detect.isi 0.9",
        "spoofing 0",
    ])
    assert cfg.seed == 99
    assert cfg.window == (1000, 2000)
    assert cfg.detect["isi"] == 0.9
    assert cfg.spoofing is False
    with pytest.raises(ConfigError):
        parse_scenario_config(["wat 1"])
    with pytest.raises(ConfigError):
        parse_scenario_config(["frac.used 0.5"])  # breaks the sum-to-1 invariant


def test_written_files_roundtrip(tmp_path):
    scenario = generate(helpers.small_config(seed=13))
    paths = scenario.write(tmp_path)
    assert paths["pipeline"].exists()
    for name, lines in scenario.files.items():
        on_disk = paths[name].read_text().splitlines()
        assert on_disk == lines, name
