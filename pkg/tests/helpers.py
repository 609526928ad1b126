"""Independent brute-force oracles and shared fixtures for the test suite.

Every oracle here recomputes an expectation from first principles (python
sets, linear scans, recursive constructions) so it never shares code paths
with the implementation it checks.
"""

import math

import numpy as np

from ipcensus import active, bgp, census, curation, mapping, registry, synth
from ipcensus.blockmap import BlockSet, finalize_taxonomy, parse_prefix
from ipcensus.census import SourceSet


# --- scaled scenario configs ----------------------------------------------------


def small_config(seed=1, **overrides):
    """A /12-window scenario (4096 blocks) that generates in well under a second."""
    defaults = dict(
        seed=seed,
        window=(10 << 16, (10 << 16) + 4096),
        mean_run=10,
        darknet_monitored_blocks=48,
        flowlog_active_blocks=48,
        flowlog_dark_blocks=48,
        sampled_dark_targets=12,
        sampled_syn_blocks=40,
        n_special_octet=6,
        n_single_nonspecial=6,
        icmp_mismatch=3,
        n_days=2,
    )
    defaults.update(overrides)
    return synth.ScenarioConfig(**defaults)


def run_library_pipeline(scenario, peer_threshold=10):
    """Drive the whole pipeline through library calls on in-memory lines.

    Returns a dict with every intermediate artifact, mirroring what the CLI
    runner serializes to disk.
    """
    files = scenario.files
    records = registry.parse_delegations(files["delegations"])
    rfc = registry.load_prefix_list(files["rfc_reserved"])
    state = registry.build_registry_state(records, rfc, [int(x) for x in files["legacy8"]])

    index = bgp.accumulate_visibility(bgp.parse_visibility(files["visibility"]))
    routed = bgp.classify_routed(index, state, peer_threshold)

    traffic = {
        name: curation.load_traffic(files[f"traffic_{name}"])[0]
        for name in ("darknet", "flowlog", "bidirlog", "sampled")
    }
    monitored = {
        "darknet": _prefix_set(files["monitored_darknet"]),
        "flowlog": _prefix_set(files["monitored_flowlog"]),
    }
    flow_dark = monitored["flowlog"].copy()
    for rec in traffic["flowlog"]:
        if rec.bidir:
            flow_dark.mask[rec.src >> 8] = False
            flow_dark.mask[rec.dst >> 8] = False
    filters = curation.parse_rules(files["filters"])

    curated = {}
    metrics = {}
    darknet_set, metrics["darknet"] = curation.curate_darknet(
        traffic["darknet"], curation.DarknetConfig(specific_filters=tuple(filters)))
    curated["darknet"] = darknet_set
    metrics["darknet"].attach_validation(routed, flow_dark)
    curated["flowlog"], metrics["flowlog"] = curation.curate_flowlog(
        traffic["flowlog"], monitored=monitored["flowlog"])
    curated["bidirlog"], metrics["bidirlog"] = curation.curate_bidirlog(traffic["bidirlog"])
    curated["sampled"], metrics["sampled"], choices = curation.curate_sampled(
        traffic["sampled"], routed, monitored["darknet"])
    for name in ("flowlog", "bidirlog", "sampled"):
        metrics[name].attach_validation(routed, monitored["darknet"])

    obs = active.ingest_probes(active.parse_probes(files["probes"]))
    sources = [
        SourceSet("isi", "active", obs.sets["icmp_echo"] & routed),
        SourceSet("http", "active", obs.sets["http_get"] & routed),
        SourceSet("ark", "active", obs.sets["ttl_exceeded"] & routed),
        SourceSet("darknet", "passive", curated["darknet"] & routed),
        SourceSet("flowlog", "passive", curated["flowlog"] & routed),
        SourceSet("bidirlog", "passive", curated["bidirlog"] & routed),
        SourceSet("sampled", "passive", curated["sampled"] & routed),
    ]
    used, table = census.merge_used(sources, routed)
    labelmap = finalize_taxonomy(state, routed, used, scenario.config.window)
    for bit, source in enumerate(sources):
        labelmap.mark_source(bit, source.blocks)
    return {
        "state": state,
        "index": index,
        "routed": routed,
        "traffic": traffic,
        "curated": curated,
        "metrics": metrics,
        "sampled_choices": choices,
        "obs": obs,
        "sources": sources,
        "used": used,
        "table": table,
        "labelmap": labelmap,
        "flow_dark": flow_dark,
        "darknet_monitored": monitored["darknet"],
    }


def _prefix_set(lines):
    blocks = BlockSet()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        net, plen = parse_prefix(line)
        lo = net >> 8
        blocks.mask[lo : lo + (1 << (24 - plen))] = True
    return blocks


# --- oracles --------------------------------------------------------------------


def oracle_visibility(records):
    """Max-over-days distinct peer counts recomputed with dicts and sets.

    records: iterable of (day, peer, net, plen) as produced by parse_visibility.
    Returns {block: count} for every block with a nonzero count.
    """
    per_day = {}
    for day, peer, net, plen in records:
        if plen > 24:
            continue
        lo = net >> 8
        for block in range(lo, lo + (1 << (24 - plen))):
            per_day.setdefault(day, {}).setdefault(block, set()).add(peer)
    best = {}
    for blocks in per_day.values():
        for block, peers in blocks.items():
            best[block] = max(best.get(block, 0), len(peers))
    return best


def oracle_most_specific(entries, query_blocks):
    """Most-specific-prefix resolution by explicit linear scan.

    entries: iterable of (net, plen, kind, asn); query_blocks: int array.
    Returns an int array aligned with query_blocks holding the ASN or a
    mapping sentinel.
    """
    per_prefix = {}
    for net, plen, kind, asn in entries:
        if plen > 24:
            continue
        per_prefix.setdefault((net, plen), []).append((kind, asn))

    def decide(origins):
        kinds = {k for k, _ in origins}
        if "as_set" in kinds:
            return mapping.AS_SET
        singles = {a for k, a in origins if k == "single"}
        if "multi" in kinds or len(singles) > 1:
            return mapping.MULTI_ORIGIN
        return singles.pop()

    q = np.asarray(query_blocks, dtype=np.int64)
    best_plen = np.full(q.shape, -1, dtype=np.int64)
    best_val = np.full(q.shape, mapping.UNMAPPED, dtype=np.int64)
    for (net, plen), origins in per_prefix.items():
        lo = net >> 8
        hi = lo + (1 << (24 - plen))
        upgrade = (q >= lo) & (q < hi) & (plen > best_plen)
        if upgrade.any():
            best_plen[upgrade] = plen
            best_val[upgrade] = decide(origins)
    return best_val


def oracle_geo(entries, query_blocks):
    """Country resolution by scanning every range for overlap."""
    out = []
    entries = list(entries)
    for block in query_blocks:
        blk_lo, blk_hi = block << 8, (block << 8) | 0xFF
        ccs = {cc for start, end, cc in entries if start <= blk_hi and end >= blk_lo}
        if not ccs:
            out.append(mapping.UNMAPPED)
        elif len(ccs) > 1:
            out.append(mapping.MULTI_COUNTRY)
        else:
            out.append(mapping.cc_code(ccs.pop()))
    return np.array(out, dtype=np.int64)


def oracle_pearson(xs, ys):
    """Textbook product-moment formula with exact summation."""
    n = len(xs)
    sx, sy = math.fsum(xs), math.fsum(ys)
    sxx = math.fsum(x * x for x in xs)
    syy = math.fsum(y * y for y in ys)
    sxy = math.fsum(x * y for x, y in zip(xs, ys))
    return (n * sxy - sx * sy) / math.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))


def oracle_hilbert_points(order):
    """Quadrant-composition construction of the Hilbert curve: the curve of
    order o is four transformed copies of order o-1."""
    pts = [(0, 0)]
    for o in range(1, order + 1):
        s = 1 << (o - 1)
        bottom_left = [(y, x) for x, y in pts]
        top_left = [(x, y + s) for x, y in pts]
        top_right = [(x + s, y + s) for x, y in pts]
        bottom_right = [(2 * s - 1 - y, s - 1 - x) for x, y in pts]
        pts = bottom_left + top_left + top_right + bottom_right
    return pts


def oracle_grid_search(records, routed, dark, p_grid, s_grid, epsilon, dark_bound,
                       include_udp=False):
    """Exhaustive threshold search looping over every grid point.

    Mirrors the documented selection rule (max size, lexicographically
    smallest thresholds) with per-point set construction from scratch.
    Returns {role: (p, s, frozenset_of_blocks)}.
    """
    protos = (6, 17) if include_udp else (6,)
    src, dst = {}, {}
    for rec in records:
        if rec.kind != "packet" or rec.proto not in protos:
            continue
        if rec.proto == 6 and rec.flags is not None and rec.flags & 0x02:
            continue
        size = rec.payload_len or 0
        for table, blk in ((src, rec.src >> 8), (dst, rec.dst >> 8)):
            cnt, total = table.get(blk, (0, 0))
            table[blk] = (cnt + 1, total + size)

    results = {}
    for role, table, err_set, mode, bound in (
        ("src", src, routed, "fraction", epsilon),
        ("dst", dst, dark, "absolute", dark_bound),
    ):
        best = None
        for p in sorted(set(p_grid)):
            for s in sorted(set(s_grid)):
                selected = {
                    blk for blk, (cnt, total) in table.items()
                    if cnt >= p and total / cnt >= s
                }
                if mode == "fraction":
                    errors = sum(1 for blk in selected if blk not in err_set)
                    feasible = not selected or errors / len(selected) <= bound
                else:
                    errors = sum(1 for blk in selected if blk in err_set)
                    feasible = errors <= bound
                if feasible and (best is None or len(selected) > best[2]):
                    best = (p, s, len(selected), frozenset(selected))
        results[role] = best
    return results


def oracle_contribution(source_sets, routed_set):
    """Contribution accounting with plain python sets.

    source_sets: list of (id, family, set_of_blocks); routed_set: set.
    """
    restricted = [(sid, fam, blocks & routed_set) for sid, fam, blocks in source_sets]
    rows = []
    for i, (sid, fam, blocks) in enumerate(restricted):
        other_family = set().union(*(b for j, (_, f, b) in enumerate(restricted)
                                     if j != i and f == fam), set())
        other_all = set().union(*(b for j, (_, _, b) in enumerate(restricted) if j != i), set())
        rows.append({
            "source": sid,
            "total": len(blocks),
            "unique_in_family": len(blocks - other_family),
            "unique_overall": len(blocks - other_all),
        })
    families = {}
    for sid, fam, blocks in restricted:
        families.setdefault(fam, set()).update(blocks)
    used = set().union(*(b for _, _, b in restricted), set())
    return {
        "rows": rows,
        "family_totals": {fam: len(blocks) for fam, blocks in families.items()},
        "total_used": len(used),
        "routed_unused": len(routed_set) - len(used),
    }


def oracle_quartile_bins(pairs, bin_width=0.02):
    """Baseline-binned quartiles by per-bin sort and index selection.

    pairs: list of (baseline_coverage, combined_coverage).
    """
    n_bins = max(1, round(1.0 / bin_width))
    grouped = {}
    for base, combined in pairs:
        idx = min(int(base / bin_width), n_bins - 1)
        grouped.setdefault(idx, []).append((base, combined))
    out = {}
    for idx, members in grouped.items():
        combined = sorted(c for _, c in members)
        k = len(combined)
        out[idx] = {
            "n": k,
            "baseline_min": min(b for b, _ in members),
            "quartiles": (
                combined[0],
                combined[(k - 1) // 4],
                combined[(k - 1) // 2],
                combined[3 * (k - 1) // 4],
                combined[-1],
            ),
        }
    return out


def blockset_to_set(blocks):
    return set(blocks.blocks().tolist())
