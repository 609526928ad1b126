import json
import hashlib
from pathlib import Path

import pytest

import helpers
from ipcensus import cli
from ipcensus.blockmap import BlockLabelMap, BlockSet, TaxonomyLabel
from ipcensus.synth import generate


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("scenario")
    scenario = generate(helpers.small_config(seed=77))
    paths = scenario.write(tmp / "in")
    return scenario, paths, tmp


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def test_run_pipeline_end_to_end(scenario_dir):
    scenario, paths, tmp = scenario_dir
    out = tmp / "out"
    rc = cli.main(["run", "--config", str(paths["pipeline"]), "--out", str(out)])
    assert rc == 0
    labelmap = BlockLabelMap.load(out / "labelmap.bin")
    counts = labelmap.leaf_counts(scenario.config.window)
    lo, hi = scenario.config.window
    assert sum(counts.values()) == hi - lo
    assert (out / "report.json").exists()
    assert (out / "hilbert.ppm").exists()
    assert (out / "manifest.json").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["params"]["peer_threshold"] == 10
    assert [s["id"] for s in manifest["sources"]] == [
        "isi", "http", "ark", "darknet", "flowlog", "bidirlog", "sampled"]
    routed = BlockSet.load(out / "routed.bset")
    assert routed == scenario.truth.routed
    used = BlockSet.load(out / "used.bset")
    assert used == labelmap.label_set(TaxonomyLabel.USED)


def test_missing_input_fails_in_registry_stage(tmp_path, capsys):
    conf = tmp_path / "pipeline.conf"
    conf.write_text("delegations nope.txt\nvisibility also-nope.txt\nprobes x.txt\n")
    rc = cli.main(["run", "--config", str(conf), "--out", str(tmp_path / "out")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "stage" in err and "registry" in err
    assert (tmp_path / "out" / "FAILED").exists()


def test_rerun_is_byte_identical(scenario_dir):
    scenario, paths, tmp = scenario_dir
    out1, out2 = tmp / "rerun1", tmp / "rerun2"
    assert cli.main(["run", "--config", str(paths["pipeline"]), "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", str(paths["pipeline"]), "--out", str(out2)]) == 0
    for name in ("labelmap.bin", "report.json", "hilbert.ppm", "hilbert.png",
                 "contribution.json", "used.bset", "routed.bset"):
        assert _sha(out1 / name) == _sha(out2 / name), name


def test_stage_isolation_matches_fused_run(scenario_dir):
    scenario, paths, tmp = scenario_dir
    fused = tmp / "out"  # produced by test_run_pipeline_end_to_end
    if not (fused / "labelmap.bin").exists():
        assert cli.main(["run", "--config", str(paths["pipeline"]), "--out", str(fused)]) == 0
    iso = tmp / "iso"
    base = paths["pipeline"].parent

    assert cli.main(["registry",
                     "--delegations", str(base / "delegations.txt"),
                     "--rfc-reserved", str(base / "rfc_reserved.txt"),
                     "--legacy8", str(base / "legacy8.txt"),
                     "--out", str(iso)]) == 0
    assert cli.main(["bgp", "--visibility", str(base / "visibility.txt"),
                     "--registry-dir", str(iso), "--peer-threshold", "10",
                     "--out", str(iso)]) == 0
    assert _sha(iso / "routed.bset") == _sha(fused / "routed.bset")

    vp_flags = {
        "darknet": ["--filters", str(base / "filters.txt"),
                    "--dark", str(fused / "dark_reference_darknet.bset")],
        "flowlog": ["--monitored", str(base / "monitored_flowlog.txt"),
                    "--dark", str(fused / "dark_reference_flowlog.bset")],
        "bidirlog": ["--dark", str(fused / "dark_reference_bidirlog.bset")],
        "sampled": ["--dark", str(fused / "dark_reference_sampled.bset")],
    }
    for kind, extra in vp_flags.items():
        assert cli.main(["curate", "--kind", kind, "--name", kind,
                         "--traffic", str(base / f"traffic_{kind}.txt"),
                         "--routed", str(iso / "routed.bset"),
                         "--out", str(iso)] + extra) == 0
        assert _sha(iso / f"curated_{kind}.bset") == _sha(fused / f"curated_{kind}.bset"), kind

    assert cli.main(["active", "--probes", str(base / "probes.txt"), "--out", str(iso)]) == 0
    assert cli.main(["census", "--config", str(paths["pipeline"]),
                     "--stage-dir", str(iso), "--out", str(iso)]) == 0
    assert _sha(iso / "labelmap.bin") == _sha(fused / "labelmap.bin")

    lo, hi = scenario.config.window
    assert cli.main(["report", "--label-map", str(iso / "labelmap.bin"),
                     "--as-map", str(base / "prefix2as.txt"),
                     "--geo-map", str(base / "geo.txt"),
                     "--registry-dir", str(iso),
                     "--continents", str(base / "continents.txt"),
                     "--sources", str(iso / "sources.json"),
                     "--baseline", "isi",
                     "--indicator", str(base / "indicator.txt"),
                     "--hilbert-order", "6",
                     "--window", f"{lo}:{hi}",
                     "--out", str(iso)]) == 0
    assert _sha(iso / "report.json") == _sha(fused / "report.json")
    assert _sha(iso / "hilbert.ppm") == _sha(fused / "hilbert.ppm")


def test_infeasible_sampled_data_exits_3(tmp_path, capsys):
    scenario = generate(helpers.small_config(seed=78))
    paths = scenario.write(tmp_path / "in")
    # replace the sampled feed with heavy traffic purely from unrouted space:
    # every grid point keeps a non-empty, fully-unrouted selection
    import numpy as np

    from ipcensus.blockmap import TaxonomyLabel as TL, block_base_ip
    ua = np.flatnonzero(scenario.truth.labels == np.uint8(TL.UNROUTED_ASSIGNED))[:20]
    lines = []
    for blk in ua.tolist():
        src = block_base_ip(blk).rsplit(".", 1)[0] + ".9"
        for _ in range(60):
            lines.append(f"packet|1000|{src}|192.0.2.1|6|1|2|64|16|1500|-|-|-|-|-|-|-")
    (tmp_path / "in" / "traffic_sampled.txt").write_text("\n".join(lines) + "\n")
    rc = cli.main(["run", "--config", str(paths["pipeline"]), "--out", str(tmp_path / "out")])
    assert rc == 3
    assert "curate" in capsys.readouterr().err


def test_synth_subcommand(tmp_path, capsys):
    rc = cli.main(["synth", "--seed", "5", "--out", str(tmp_path / "world")])
    assert rc == 0
    printed = capsys.readouterr().out.strip()
    assert printed.endswith("pipeline.conf")
    assert (tmp_path / "world" / "delegations.txt").exists()


def test_synth_config_file(tmp_path):
    conf = tmp_path / "scenario.conf"
    conf.write_text("seed 3\nwindow 655360:659456\nspoofing 0\n")
    rc = cli.main(["synth", "--config", str(conf), "--out", str(tmp_path / "world")])
    assert rc == 0
    pipeline = (tmp_path / "world" / "pipeline.conf").read_text()
    assert "window 655360:659456" in pipeline


def test_curate_growth_output(scenario_dir, tmp_path):
    scenario, paths, _ = scenario_dir
    base = paths["pipeline"].parent
    out = tmp_path / "growth"
    rc = cli.main(["curate", "--kind", "darknet", "--traffic",
                   str(base / "traffic_darknet.txt"), "--growth-window", "86400",
                   "--out", str(out)])
    assert rc == 0
    lines = (out / "growth_darknet.csv").read_text().splitlines()
    assert lines[0] == "window_start,distinct_blocks,cumulative_blocks"
    assert len(lines) > 1


def test_bad_pipeline_config_key(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("nonsense value\n")
    rc = cli.main(["run", "--config", str(conf), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_curate_classes_output(scenario_dir, tmp_path):
    scenario, paths, _ = scenario_dir
    base = paths["pipeline"].parent
    rules = tmp_path / "classes.conf"
    rules.write_text("rule web\n  dport 80,443\nend\nrule p2p\n  dport 6881-6889\nend\n")
    out = tmp_path / "classes"
    rc = cli.main(["curate", "--kind", "darknet", "--traffic",
                   str(base / "traffic_darknet.txt"), "--classes", str(rules),
                   "--out", str(out)])
    assert rc == 0
    lines = (out / "components_darknet.csv").read_text().splitlines()
    assert lines[0] == "class,blocks,unique_blocks"
    assert any(line.startswith("unknown,") for line in lines[1:])


def test_run_pipeline_growth_window(tmp_path):
    scenario = generate(helpers.small_config(seed=79))
    paths = scenario.write(tmp_path / "in")
    conf = paths["pipeline"]
    conf.write_text(conf.read_text() + "growth_window 604800\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(conf), "--out", str(out)]) == 0
    for vp in ("darknet", "flowlog", "bidirlog", "sampled"):
        assert (out / f"growth_{vp}.csv").exists(), vp
