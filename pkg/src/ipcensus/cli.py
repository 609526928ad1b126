"""Pipeline orchestration: one subcommand per stage plus a fused runner.

Stages communicate through files, so any stage can be re-run standalone
from its predecessors' serialized outputs with identical results.  Exit
codes: 0 success, 1 internal error, 2 input error, 3 infeasible curation
threshold.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, active, bgp, census, curation, hilbert, mapping, registry, report, synth
from .blockmap import (
    BlockLabelMap,
    BlockSet,
    TaxonomyLabel,
    finalize_taxonomy,
    parse_window,
    prefix_span,
)
from .errors import CensusError, ConfigError, NoFeasibleThreshold, ParseError

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2, 3

VP_KINDS = ("darknet", "flowlog", "bidirlog", "sampled")


class StageError(CensusError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


def _read_lines(path):
    return Path(path).read_text().splitlines()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --- pipeline config ----------------------------------------------------------


class PipelineConfig:
    """Key/value pipeline description; paths resolve relative to the file."""

    def __init__(self, path):
        base = Path(path).parent
        self.path = Path(path)
        self.window = None
        self.paths = {}
        self.vps = []  # (name, kind, path)
        self.vp_monitored = {}
        self.vp_filters = {}
        self.sources = []  # (id, family, ref)
        self.params = {
            "peer_threshold": bgp.DEFAULT_PEER_THRESHOLD,
            "flow_min_pkts": 5,
            "flow_min_avg_bytes": 80,
            "epsilon_unrouted": 0.001,
            "dark_bound": 3,
            "hilbert_order": hilbert.FULL_ORDER,
            "baseline_source": None,
            "growth_window": None,
        }
        for line_no, raw in enumerate(_read_lines(path), 1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            key, _, value = line.partition(" ")
            value = value.strip()
            try:
                self._apply(key, value, base)
            except ValueError as exc:
                raise ConfigError(f"{path} line {line_no}: {exc}") from None
        missing = [key for key in ("delegations", "visibility", "probes") if key not in self.paths]
        if missing:
            raise ConfigError(f"{path}: missing required keys: {', '.join(missing)}")
        vp_names = {name for name, _, _ in self.vps}
        for source_id, _, ref in self.sources:
            scheme, _, target = ref.partition(":")
            if scheme == "vp" and target not in vp_names:
                raise ConfigError(f"{path}: source {source_id!r} references unknown vp {target!r}")

    def _apply(self, key, value, base):
        if key == "window":
            self.window = parse_window(value)
        elif key in ("delegations", "rfc_reserved", "legacy8", "visibility", "prefix2as",
                     "geo", "continents", "probes", "indicator"):
            self.paths[key] = base / value
        elif key == "vp":
            name, kind, path = value.split()
            if kind not in VP_KINDS:
                raise ValueError(f"unknown vantage-point kind {kind!r}")
            self.vps.append((name, kind, base / path))
        elif key == "vp_monitored":
            name, path = value.split()
            self.vp_monitored[name] = base / path
        elif key == "vp_filters":
            name, path = value.split()
            self.vp_filters[name] = base / path
        elif key == "source":
            source_id, family, ref = value.split()
            self.sources.append((source_id, family, ref))
        elif key in ("peer_threshold", "flow_min_pkts", "flow_min_avg_bytes", "dark_bound",
                     "hilbert_order", "growth_window"):
            self.params[key] = int(value)
        elif key == "epsilon_unrouted":
            self.params[key] = float(value)
        elif key == "baseline_source":
            self.params[key] = value
        else:
            raise ValueError(f"unknown config key {key!r}")


# --- stages --------------------------------------------------------------------


def stage_registry(delegations_path, rfc_path, legacy_path, out_dir):
    records = registry.parse_delegations(_read_lines(delegations_path), delegations_path)
    rfc = registry.load_prefix_list(_read_lines(rfc_path), rfc_path) if rfc_path else registry.rfc5735_prefixes()
    legacy = registry.load_slash8_list(_read_lines(legacy_path), legacy_path) if legacy_path else []
    state = registry.build_registry_state(records, rfc, legacy)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "registry_codes.npy", state.codes)
    _write_json(out / "registry_tags.json", {"slash8_tags": list(state.slash8_tags)})
    return state


def load_registry_state(out_dir):
    codes = np.load(Path(out_dir) / "registry_codes.npy")
    tags = json.loads((Path(out_dir) / "registry_tags.json").read_text())["slash8_tags"]
    return registry.RegistryState(codes=codes, slash8_tags=tuple(tags))


def stage_bgp(visibility_path, state, threshold, out_dir):
    index = bgp.accumulate_visibility(bgp.parse_visibility(_read_lines(visibility_path), visibility_path))
    routed = bgp.classify_routed(index, state, threshold)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "visibility_counts.npy", index.counts)
    routed.save(out / "routed.bset")
    _write_json(out / "bgp_meta.json", {
        "peer_threshold": threshold,
        "days": index.days,
        "ignored_long_prefixes": index.ignored_long_prefixes,
        "routed_blocks": len(routed),
    })
    return routed


def _load_prefix_set(path):
    blocks = BlockSet()
    for net, plen in registry.load_prefix_list(_read_lines(path), path):
        lo, hi = prefix_span(net, plen)
        blocks.mask[lo:hi] = True
    return blocks


def derive_flow_dark(records, monitored):
    """Monitored blocks that never appeared on either side of a bidirectional
    flow; they serve as the dark reference for other vantage points."""
    active_mask = BlockSet()
    for rec in records:
        if rec.kind == "flow" and rec.bidir:
            active_mask.add(rec.src >> 8)
            active_mask.add(rec.dst >> 8)
    return monitored - active_mask


def curate_one(kind, records, params, routed, dark, monitored=None, filters=None):
    profile = curation.VantagePointProfile(
        vp_kind=kind,
        monitored_blocks=monitored,
        darknet_config=curation.DarknetConfig(specific_filters=tuple(filters or ())),
        flow_min_pkts=params["flow_min_pkts"],
        flow_min_avg_bytes=params["flow_min_avg_bytes"],
        sampled_config=curation.SampledConfig(
            epsilon_unrouted=params["epsilon_unrouted"], dark_bound=params["dark_bound"]),
    )
    try:
        blocks, metrics, choices = profile.curate(records, routed, dark)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    metrics.attach_validation(routed, dark)
    return blocks, metrics, choices


def stage_curate(config, routed, out_dir, growth_window=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loaded = {}
    malformed = {}
    for name, kind, path in config.vps:
        loaded[name], malformed[name] = curation.load_traffic(_read_lines(path))

    monitored_sets = {name: _load_prefix_set(path) for name, path in config.vp_monitored.items()}
    # Dark references: the darknet is validated against flow-log blocks that
    # never produced a bidirectional flow; every other VP against the
    # darknet's own monitored space.
    flow_dark = BlockSet()
    darknet_monitored = BlockSet()
    for name, kind, _ in config.vps:
        if kind == "flowlog" and name in monitored_sets:
            flow_dark |= derive_flow_dark(loaded[name], monitored_sets[name])
        elif kind == "darknet" and name in monitored_sets:
            darknet_monitored |= monitored_sets[name]

    curated = {}
    for name, kind, path in config.vps:
        filters = None
        if name in config.vp_filters:
            filters = curation.parse_rules(_read_lines(config.vp_filters[name]), config.vp_filters[name])
        dark = flow_dark if kind == "darknet" else darknet_monitored
        blocks, metrics, choices = curate_one(
            kind, loaded[name], config.params, routed, dark,
            monitored=monitored_sets.get(name), filters=filters)
        dark.save(out / f"dark_reference_{name}.bset")
        blocks.save(out / f"curated_{name}.bset")
        metrics.before.save(out / f"curated_{name}_before.bset")
        payload = metrics.to_dict()
        payload["malformed"] = malformed[name]
        if choices:
            payload["thresholds"] = {role: c.to_dict() for role, c in choices.items()}
        _write_json(out / f"curated_{name}_metrics.json", payload)
        if growth_window:
            observations = [(rec.ts, rec.src >> 8) for rec in loaded[name]]
            curve = report.growth_curve(observations, growth_window)
            _write_csv(out / f"growth_{name}.csv",
                       ("window_start", "distinct_blocks", "cumulative_blocks"),
                       curve.to_rows())
        curated[name] = blocks
    return curated


def stage_active(probes_path, out_dir):
    obs = active.ingest_probes(active.parse_probes(_read_lines(probes_path), probes_path))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind, blocks in obs.sets.items():
        blocks.save(out / f"active_{kind}.bset")
    _write_json(out / "icmp_octets.json",
                {str(block): mask for block, mask in sorted(obs.icmp_octets.items())})
    _write_json(out / "http_counts.json",
                {str(block): count for block, count in sorted(obs.http_counts.items())})
    _write_json(out / "active_meta.json", {
        "icmp_mismatched": obs.icmp_mismatched,
        "counts": {kind: len(blocks) for kind, blocks in obs.sets.items()},
    })
    return obs


def stage_census(config, state, routed, curated, obs, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sources = []
    for source_id, family, ref in config.sources:
        scheme, _, target = ref.partition(":")
        if scheme == "probe":
            blocks = obs.sets[target]
        elif scheme == "vp":
            blocks = curated[target]
        else:
            raise ConfigError(f"unknown source reference {ref!r}")
        sources.append(census.SourceSet(source_id, family, blocks & routed))
    used, table = census.merge_used(sources, routed)
    labelmap = finalize_taxonomy(state, routed, used, config.window)
    for bit, source in enumerate(sources):
        labelmap.mark_source(bit, source.blocks)
    labelmap.save(out / "labelmap.bin")
    used.save(out / "used.bset")
    _write_json(out / "contribution.json", table.to_dict())
    _write_json(out / "sources.json", {
        "sources": [
            {"id": s.source_id, "family": s.family, "bit": bit}
            for bit, s in enumerate(sources)
        ]
    })
    passive = [s for s in sources if s.family == "passive"]
    rows = census.special_octet_analysis(obs.icmp_octets, passive)
    _write_json(out / "special_octets.json", {
        "passive_sources": [s.source_id for s in passive],
        "rows": [{"vps_seen": n, "special": sp, "nonspecial": nsp} for n, sp, nsp in rows],
    })
    _write_csv(out / "special_octets.csv", ("vps_seen", "special", "nonspecial"), rows)
    return used, table, labelmap, sources


def stage_report(labelmap, state, as_map, geo_map, continents, sources_meta,
                 params, window, out_dir, indicator=None, threads=1):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    used = labelmap.label_set(TaxonomyLabel.USED)
    routed = used | labelmap.label_set(TaxonomyLabel.ROUTED_UNUSED)
    doc = {
        "version": __version__,
        "window": list(window) if window else None,
        "leaf_counts": {label.name.lower(): count
                        for label, count in labelmap.leaf_counts(window).items()},
    }

    baseline_id = params.get("baseline_source")
    if as_map is not None and baseline_id:
        bit = next(s["bit"] for s in sources_meta if s["id"] == baseline_id)
        cov = report.coverage(used, routed, as_map, labelmap.source_set(bit))
        doc["coverage"] = cov.to_dict()
        _write_csv(out / "coverage_bins.csv",
                   ("bin_lo", "bin_hi", "n_ases", "baseline_min", "combined_min",
                    "combined_q1", "combined_median", "combined_q3", "combined_max"),
                   [(b.lo, b.hi, b.n_ases, b.baseline_min, b.combined_min,
                     b.combined_q1, b.combined_median, b.combined_q3, b.combined_max)
                    for b in cov.bins])

    breakdowns = {}
    tables = {}
    if state is not None:
        tables["rir_or_legacy"] = report.breakdown(labelmap, "rir_or_legacy",
                                                   registry=state, window=window)
    if geo_map is not None:
        tables["country"] = report.breakdown(labelmap, "country", geo=geo_map, window=window)
        if continents:
            tables["continent"] = report.breakdown(labelmap, "continent", geo=geo_map,
                                                   continents=continents, window=window)
    if as_map is not None:
        tables["asn"] = report.breakdown(labelmap, "asn", as_map=as_map, window=window)
    for grouping, table in tables.items():
        breakdowns[grouping] = table.to_dict()
        _write_csv(out / f"breakdown_{grouping}.csv",
                   ("group",) + tuple(label.name.lower() for label in TaxonomyLabel)
                   + ("unused_of_assigned",),
                   [(group,) + tuple(row[label] for label in TaxonomyLabel)
                    + (table.unused_of_assigned(group),)
                    for group, row in sorted(table.rows.items(), key=lambda kv: str(kv[0]))])
    doc["breakdowns"] = breakdowns

    over = {}
    if as_map is not None:
        errors = report.overestimation_error(as_map.asn, used, routed, window)
        over["as_bins"] = report.as_error_bins(errors)
        _write_csv(out / "overestimation_as.csv", ("asn", "routed", "used", "error"),
                   [(e.group, e.routed, e.used, e.error) for e in errors])
    if geo_map is not None:
        errors = report.overestimation_error(geo_map.codes, used, routed, window)
        rows = [(mapping.code_cc(e.group), e.routed, e.used, e.error) for e in errors]
        # countries grouped by continent when the table is available
        continent_of = continents or {}
        rows.sort(key=lambda row: (continent_of.get(row[0], "~"), row[0]))
        over["country"] = [{"cc": cc, "routed": r, "used": u, "error": err}
                           for cc, r, u, err in rows]
        _write_csv(out / "overestimation_country.csv", ("cc", "routed", "used", "error"), rows)
    doc["overestimation"] = over

    if indicator is not None and geo_map is not None:
        per_country = {}
        seg = geo_map.codes
        for code in np.unique(seg[(seg >= 0) & used.mask]):
            per_country[mapping.code_cc(int(code))] = int(
                np.count_nonzero(used.mask & (seg == code)))
        try:
            corr = report.indicator_correlation(per_country, indicator)
            doc["indicator_correlation"] = {"r": corr.r, "n": corr.n, "excluded": corr.excluded}
        except (ValueError, CensusError) as exc:
            doc["indicator_correlation"] = {"error": str(exc)}

    order = params.get("hilbert_order", hilbert.FULL_ORDER)
    image = hilbert.render(labelmap, order=order, threads=threads)
    hilbert.save_ppm(out / "hilbert.ppm", image)
    hilbert.save_png(out / "hilbert.png", image)
    doc["hilbert_order"] = order

    _write_json(out / "report.json", doc)
    return doc


def _load_indicator(path):
    table = {}
    for line_no, raw in enumerate(_read_lines(path), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cc, _, value = line.partition("|")
        try:
            table[cc.upper()] = float(value)
        except ValueError:
            raise ParseError(f"bad indicator value {value!r}", line_no, path) from None
    return table


# --- fused runner ----------------------------------------------------------------


def run_pipeline(config_path, out_dir, threads=1):
    """registry -> bgp -> curation -> active -> census -> report, with a manifest."""
    config = PipelineConfig(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    stage = "registry"
    try:
        t = time.monotonic()
        state = stage_registry(config.paths["delegations"], config.paths.get("rfc_reserved"),
                               config.paths.get("legacy8"), out)
        timings[stage] = time.monotonic() - t

        stage = "bgp"
        t = time.monotonic()
        routed = stage_bgp(config.paths["visibility"], state, config.params["peer_threshold"], out)
        timings[stage] = time.monotonic() - t

        stage = "curate"
        t = time.monotonic()
        curated = stage_curate(config, routed, out, growth_window=config.params["growth_window"])
        timings[stage] = time.monotonic() - t

        stage = "active"
        t = time.monotonic()
        obs = stage_active(config.paths["probes"], out)
        timings[stage] = time.monotonic() - t

        stage = "census"
        t = time.monotonic()
        used, table, labelmap, sources = stage_census(config, state, routed, curated, obs, out)
        timings[stage] = time.monotonic() - t

        stage = "report"
        t = time.monotonic()
        as_map = geo_map = None
        continents = None
        if "prefix2as" in config.paths:
            as_map = mapping.build_as_mapping(
                mapping.parse_prefix2as(_read_lines(config.paths["prefix2as"]), config.paths["prefix2as"]))
        if "geo" in config.paths:
            geo_map = mapping.build_geo_mapping(
                mapping.parse_geo(_read_lines(config.paths["geo"]), config.paths["geo"]))
        if "continents" in config.paths:
            continents = mapping.parse_continents(
                _read_lines(config.paths["continents"]), config.paths["continents"])
        indicator = _load_indicator(config.paths["indicator"]) if "indicator" in config.paths else None
        sources_meta = json.loads((out / "sources.json").read_text())["sources"]
        stage_report(labelmap, state, as_map, geo_map, continents, sources_meta,
                     config.params, config.window, out, indicator=indicator, threads=threads)
        timings[stage] = time.monotonic() - t
    except Exception as exc:
        (out / "FAILED").write_text(f"stage {stage}: {exc}\n")
        raise StageError(stage, exc) from exc

    inputs = {}
    for key, path in sorted(config.paths.items()):
        inputs[str(path)] = _digest(path)
    for name, _, path in config.vps:
        inputs[str(path)] = _digest(path)
    for path in list(config.vp_monitored.values()) + list(config.vp_filters.values()):
        inputs[str(path)] = _digest(path)
    manifest = {
        "version": __version__,
        "config_digest": _digest(config_path),
        "inputs": inputs,
        "window": list(config.window) if config.window else None,
        "sources": [{"id": s, "family": f, "ref": r} for s, f, r in config.sources],
        "params": {k: v for k, v in sorted(config.params.items())},
        "stage_seconds": timings,
        "threads": threads,
    }
    _write_json(out / "manifest.json", manifest)
    return out


# --- argument parsing ---------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="census",
        description="IPv4 /24-block utilization census pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("registry", help="parse delegations into per-block registry state")
    p.add_argument("--delegations", required=True)
    p.add_argument("--rfc-reserved", help="IETF-reserved prefix list (default: bundled)")
    p.add_argument("--legacy8", help="legacy /8 list (default: none)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bgp", help="derive the routed set from peer visibility")
    p.add_argument("--visibility", required=True)
    p.add_argument("--registry-dir", required=True, help="directory with registry stage outputs")
    p.add_argument("--peer-threshold", type=int, default=bgp.DEFAULT_PEER_THRESHOLD)
    p.add_argument("--out", required=True)

    p = sub.add_parser("curate", help="curate one vantage point's traffic")
    p.add_argument("--kind", required=True, choices=VP_KINDS)
    p.add_argument("--name")
    p.add_argument("--traffic", required=True)
    p.add_argument("--routed", help="routed.bset from the bgp stage")
    p.add_argument("--dark", help="dark-reference block-set file")
    p.add_argument("--monitored", help="monitored prefix list file")
    p.add_argument("--filters", help="event-specific filter rules")
    p.add_argument("--min-pkts", type=int, default=5)
    p.add_argument("--min-avg-bytes", type=int, default=80)
    p.add_argument("--epsilon-unrouted", type=float, default=0.001)
    p.add_argument("--dark-bound", type=int, default=3)
    p.add_argument("--growth-window", type=int)
    p.add_argument("--classes", help="traffic-class rule file for component tallies")
    p.add_argument("--class-role", choices=("src", "dst", "remote"), default="src")
    p.add_argument("--out", required=True)

    p = sub.add_parser("active", help="ingest active-probe logs")
    p.add_argument("--probes", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("census", help="merge sources into the final taxonomy")
    p.add_argument("--config", required=True, help="pipeline config naming the sources")
    p.add_argument("--stage-dir", required=True, help="directory with prior stage outputs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="analytics and renderings from a label map")
    p.add_argument("--label-map", required=True)
    p.add_argument("--as-map", help="prefix2as text input")
    p.add_argument("--geo-map", help="geo range text input")
    p.add_argument("--registry-dir", help="directory with registry stage outputs")
    p.add_argument("--continents", help="cc|continent table")
    p.add_argument("--sources", help="sources.json from the census stage")
    p.add_argument("--baseline")
    p.add_argument("--indicator")
    p.add_argument("--hilbert-order", type=int, default=hilbert.FULL_ORDER)
    p.add_argument("--window")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--config", help="scenario config overrides")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    return parser


def _cmd_registry(args):
    stage_registry(args.delegations, args.rfc_reserved, args.legacy8, args.out)
    return EXIT_OK


def _cmd_bgp(args):
    state = load_registry_state(args.registry_dir)
    stage_bgp(args.visibility, state, args.peer_threshold, args.out)
    return EXIT_OK


def _cmd_curate(args):
    records, malformed = curation.load_traffic(_read_lines(args.traffic))
    routed = BlockSet.load(args.routed) if args.routed else BlockSet()
    dark = BlockSet.load(args.dark) if args.dark else BlockSet()
    monitored = _load_prefix_set(args.monitored) if args.monitored else None
    filters = curation.parse_rules(_read_lines(args.filters), args.filters) if args.filters else None
    params = {
        "flow_min_pkts": args.min_pkts,
        "flow_min_avg_bytes": args.min_avg_bytes,
        "epsilon_unrouted": args.epsilon_unrouted,
        "dark_bound": args.dark_bound,
    }
    blocks, metrics, choices = curate_one(args.kind, records, params, routed, dark,
                                          monitored=monitored, filters=filters)
    name = args.name or args.kind
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    blocks.save(out / f"curated_{name}.bset")
    metrics.before.save(out / f"curated_{name}_before.bset")
    payload = metrics.to_dict()
    payload["malformed"] = malformed
    if choices:
        payload["thresholds"] = {role: c.to_dict() for role, c in choices.items()}
    _write_json(out / f"curated_{name}_metrics.json", payload)
    if args.growth_window:
        observations = [(rec.ts, rec.src >> 8) for rec in records]
        curve = report.growth_curve(observations, args.growth_window)
        _write_csv(out / f"growth_{name}.csv",
                   ("window_start", "distinct_blocks", "cumulative_blocks"), curve.to_rows())
    if args.classes:
        class_rules = curation.parse_rules(_read_lines(args.classes), args.classes)
        rows = curation.traffic_component_tally(records, class_rules,
                                                address_role=args.class_role)
        _write_csv(out / f"components_{name}.csv",
                   ("class", "blocks", "unique_blocks"), rows)
    return EXIT_OK


def _cmd_active(args):
    stage_active(args.probes, args.out)
    return EXIT_OK


def _cmd_census(args):
    config = PipelineConfig(args.config)
    stage_dir = Path(args.stage_dir)
    state = load_registry_state(stage_dir)
    routed = BlockSet.load(stage_dir / "routed.bset")
    curated = {}
    for name, _, _ in config.vps:
        curated[name] = BlockSet.load(stage_dir / f"curated_{name}.bset")
    obs = active.ActiveObservations(sets={})
    for kind in active.PROBE_KINDS:
        path = stage_dir / f"active_{kind}.bset"
        if path.exists():
            obs.sets[kind] = BlockSet.load(path)
    octets_path = stage_dir / "icmp_octets.json"
    if octets_path.exists():
        obs.icmp_octets = {int(k): int(v)
                           for k, v in json.loads(octets_path.read_text()).items()}
    stage_census(config, state, routed, curated, obs, args.out)
    return EXIT_OK


def _cmd_report(args):
    labelmap = BlockLabelMap.load(args.label_map)
    state = load_registry_state(args.registry_dir) if args.registry_dir else None
    as_map = None
    if args.as_map:
        as_map = mapping.build_as_mapping(
            mapping.parse_prefix2as(_read_lines(args.as_map), args.as_map))
    geo_map = None
    if args.geo_map:
        geo_map = mapping.build_geo_mapping(
            mapping.parse_geo(_read_lines(args.geo_map), args.geo_map))
    continents = None
    if args.continents:
        continents = mapping.parse_continents(_read_lines(args.continents), args.continents)
    sources_meta = []
    if args.sources:
        sources_meta = json.loads(Path(args.sources).read_text())["sources"]
    indicator = _load_indicator(args.indicator) if args.indicator else None
    window = parse_window(args.window) if args.window else None
    params = {"baseline_source": args.baseline, "hilbert_order": args.hilbert_order}
    stage_report(labelmap, state, as_map, geo_map, continents, sources_meta,
                 params, window, args.out, indicator=indicator, threads=args.threads)
    return EXIT_OK


def _cmd_synth(args):
    if args.config:
        cfg = synth.parse_scenario_config(_read_lines(args.config), args.config)
    else:
        cfg = synth.ScenarioConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    scenario = synth.generate(cfg)
    paths = scenario.write(args.out)
    print(paths["pipeline"])
    return EXIT_OK


def _cmd_run(args):
    run_pipeline(args.config, args.out, threads=args.threads)
    return EXIT_OK


_COMMANDS = {
    "registry": _cmd_registry,
    "bgp": _cmd_bgp,
    "curate": _cmd_curate,
    "active": _cmd_active,
    "census": _cmd_census,
    "report": _cmd_report,
    "synth": _cmd_synth,
    "run": _cmd_run,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, NoFeasibleThreshold):
            return EXIT_INFEASIBLE
        if isinstance(cause, (ParseError, ConfigError, FileNotFoundError, ValueError)):
            return EXIT_INPUT
        return EXIT_INTERNAL
    except NoFeasibleThreshold as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParseError, ConfigError, FileNotFoundError) as exc:
        print(f"error in stage {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
