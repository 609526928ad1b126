"""Deterministic synthetic-world generator used as the end-to-end oracle.

One hidden ground-truth labeling drives every dataset the pipeline
consumes: delegations, the reserved-prefix list, BGP visibility, traffic
for all four vantage-point kinds (with injected spoofing, scanning, and
event noise), probe logs, prefix-to-AS and geolocation inputs.  Spoofed
records always carry a signature some curation filter catches, and clean
records never do, so curated outputs can be compared against exact
expectations.

Randomness comes from numpy's PCG64 generator; identical seeds give
identical bytes on every platform.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blockmap import (
    BlockSet,
    TaxonomyLabel,
    UNIVERSE_SIZE,
    block_base_ip,
    format_prefix,
    int_to_ip,
    parse_window,
)
from .curation import ICMP, TCP, UDP, TrafficRecord, format_traffic_record
from .errors import ConfigError
from .mapping import AS_SET, MULTI_COUNTRY, MULTI_ORIGIN, UNMAPPED, cc_code

RIRS = ("afrinic", "apnic", "arin", "lacnic", "ripencc")
COUNTRY_POOL = ("US", "DE", "CN", "JP", "GB", "FR", "BR", "ZA", "AU", "KR")
CONTINENT_OF = {
    "US": "north-america",
    "DE": "europe",
    "CN": "asia",
    "JP": "asia",
    "GB": "europe",
    "FR": "europe",
    "BR": "south-america",
    "ZA": "africa",
    "AU": "oceania",
    "KR": "asia",
}

ACTIVE_SOURCES = ("isi", "http", "ark")
PASSIVE_SOURCES = ("darknet", "flowlog", "bidirlog", "sampled")


@dataclass
class SpecificEvent:
    """A time-bounded spoofing event removable only by its dedicated filter."""

    name: str
    ts_lo: int
    ts_hi: int
    proto: int
    dport: int


def _default_events():
    t0 = 1374537600  # 2013-07-23
    return [
        SpecificEvent("synflood-a", t0 + 3 * 86400, t0 + 4 * 86400, TCP, 55001),
        SpecificEvent("udpstorm-b", t0 + 10 * 86400, t0 + 11 * 86400, UDP, 55002),
    ]


def _default_detect():
    return {
        "isi": 0.60,
        "http": 0.40,
        "ark": 0.25,
        "darknet": 0.50,
        "flowlog": 0.45,
        "bidirlog": 0.50,
        "sampled": 0.25,
    }


def _default_spoof_mix():
    return {
        "ttl": 0.40,
        "flagless": 0.12,
        "udp-no-payload": 0.10,
        "octet0": 0.10,
        "octet255": 0.10,
        "nontraditional": 0.08,
        "event": 0.10,
    }


@dataclass
class ScenarioConfig:
    seed: int = 1
    window: tuple = (10 << 16, 11 << 16)  # 10.0.0.0/8
    frac_reserved: float = 0.137
    frac_available: float = 0.05
    frac_unrouted_assigned: float = 0.23
    frac_routed_unused: float = 0.355
    frac_used: float = 0.228
    mean_run: int = 24  # blocks per allocation run
    n_peers: int = 14
    n_days: int = 3
    peer_threshold: int = 10
    n_ases: int = 24
    n_multi_origin: int = 3
    n_as_set: int = 2
    n_unmapped_as: int = 2
    n_as_overrides: int = 3
    n_geo_conflicts: int = 3
    n_hijacked: int = 3  # available/reserved runs announced by many peers
    detect: dict = field(default_factory=_default_detect)
    spoofing: bool = True
    darknet_monitored_blocks: int = 192
    flowlog_active_blocks: int = 192
    flowlog_dark_blocks: int = 192
    darknet_unrouted_fraction: float = 0.10
    darknet_dark_fraction: float = 0.02
    darknet_total_src_blocks: int | None = None  # overrides detection-driven sizing
    flowlog_unrouted_fraction: float = 0.05
    bidirlog_unrouted_fraction: float = 0.05
    sampled_unrouted_fraction: float = 0.15
    sampled_dark_targets: int = 40
    sampled_syn_blocks: int = 200
    spoof_ttl_range: tuple = (201, 255)
    spoof_mix: dict = field(default_factory=_default_spoof_mix)
    events: list = field(default_factory=_default_events)
    t0: int = 1374537600
    duration: int = 28 * 86400
    sampling_rate: int = 16384
    n_special_octet: int = 12
    n_single_nonspecial: int = 12
    icmp_mismatch: int = 5
    legacy_slash8s: tuple = ()
    indicator_noise: float = 0.10


def _validate(cfg):
    fracs = (
        cfg.frac_reserved,
        cfg.frac_available,
        cfg.frac_unrouted_assigned,
        cfg.frac_routed_unused,
        cfg.frac_used,
    )
    if any(f < 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
        raise ConfigError(f"leaf proportions must be non-negative and sum to 1, got {fracs}")
    for name, p in cfg.detect.items():
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"detection probability {name}={p} outside [0, 1]")
    for name in (
        "darknet_unrouted_fraction",
        "darknet_dark_fraction",
        "flowlog_unrouted_fraction",
        "bidirlog_unrouted_fraction",
        "sampled_unrouted_fraction",
    ):
        value = getattr(cfg, name)
        if not 0.0 <= value < 1.0:
            raise ConfigError(f"{name}={value} outside [0, 1)")
    if cfg.darknet_unrouted_fraction + cfg.darknet_dark_fraction >= 1.0:
        raise ConfigError("darknet noise fractions leave no room for clean traffic")
    lo, hi = cfg.window
    if not 0 <= lo < hi <= UNIVERSE_SIZE:
        raise ConfigError(f"bad window {cfg.window}")


@dataclass
class GroundTruth:
    """Exact expectations recorded while the world was generated."""

    window: tuple
    labels: np.ndarray
    leaf_counts: dict
    routed: BlockSet
    used: BlockSet
    source_blocks: dict  # source id -> clean visible BlockSet
    expected_used: BlockSet  # union of source_blocks within routed
    darknet_monitored: BlockSet
    flowlog_dark: BlockSet
    vp_before: dict  # vp -> expected pre-filter block set
    as_truth: np.ndarray
    geo_truth: np.ndarray
    country_used: dict
    indicator: dict
    special_blocks: list
    nonspecial_blocks: list


@dataclass
class Scenario:
    config: ScenarioConfig
    truth: GroundTruth
    files: dict  # logical name -> list of lines

    def write(self, out_dir):
        """Write every dataset plus a ready-to-run pipeline config; returns paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, lines in self.files.items():
            path = out / f"{name}.txt"
            path.write_text("\n".join(lines) + ("\n" if lines else ""))
            paths[name] = path
        conf = out / "pipeline.conf"
        conf.write_text("\n".join(self.pipeline_config_lines()) + "\n")
        paths["pipeline"] = conf
        return paths

    def pipeline_config_lines(self):
        lo, hi = self.config.window
        lines = [
            f"window {lo}:{hi}",
            "delegations delegations.txt",
            "rfc_reserved rfc_reserved.txt",
            "legacy8 legacy8.txt",
            "visibility visibility.txt",
            f"peer_threshold {self.config.peer_threshold}",
            "prefix2as prefix2as.txt",
            "geo geo.txt",
            "continents continents.txt",
            "probes probes.txt",
            "vp darknet darknet traffic_darknet.txt",
            "vp_monitored darknet monitored_darknet.txt",
            "vp_filters darknet filters.txt",
            "vp flowlog flowlog traffic_flowlog.txt",
            "vp_monitored flowlog monitored_flowlog.txt",
            "vp bidirlog bidirlog traffic_bidirlog.txt",
            "vp sampled sampled traffic_sampled.txt",
        ]
        for source in ACTIVE_SOURCES:
            kind = {"isi": "icmp_echo", "http": "http_get", "ark": "ttl_exceeded"}[source]
            lines.append(f"source {source} active probe:{kind}")
        for source in PASSIVE_SOURCES:
            lines.append(f"source {source} passive vp:{source}")
        lines += [
            "flow_min_pkts 5",
            "flow_min_avg_bytes 80",
            "epsilon_unrouted 0.001",
            "dark_bound 3",
            "hilbert_order 6",
            "baseline_source isi",
            "indicator indicator.txt",
        ]
        return lines


def _apportion(total, fracs):
    """Integer counts per leaf by largest remainder; sums exactly to total."""
    raw = [f * total for f in fracs]
    base = [int(x) for x in raw]
    order = sorted(range(len(fracs)), key=lambda i: raw[i] - base[i], reverse=True)
    for i in order[: total - sum(base)]:
        base[i] += 1
    return base


def _span_cidrs(lo, hi):
    """Blocks [lo, hi) as a minimal list of (net, plen <= 24) prefixes."""
    nets = ipaddress.summarize_address_range(
        ipaddress.IPv4Address(lo << 8), ipaddress.IPv4Address((hi << 8) - 1)
    )
    return [(int(n.network_address), n.prefixlen) for n in nets]


def _blocks_to_cidrs(blocks):
    """Sorted block indices as prefixes, merging consecutive runs."""
    out = []
    blocks = sorted(blocks)
    i = 0
    while i < len(blocks):
        j = i
        while j + 1 < len(blocks) and blocks[j + 1] == blocks[j] + 1:
            j += 1
        out.extend(_span_cidrs(blocks[i], blocks[j] + 1))
        i = j + 1
    return out


def _bernoulli_subset(rng, pool, p):
    pool = np.asarray(pool)
    return pool[rng.random(len(pool)) < p]


class _World:
    """Scratch state threaded through the generation passes."""

    def __init__(self, cfg):
        _validate(cfg)
        self.cfg = cfg
        self.rng = np.random.Generator(np.random.PCG64(cfg.seed))
        self.files = {}
        self.labels = np.full(UNIVERSE_SIZE, TaxonomyLabel.AVAILABLE, dtype=np.uint8)
        self.as_truth = np.full(UNIVERSE_SIZE, UNMAPPED, dtype=np.int32)
        self.geo_truth = np.full(UNIVERSE_SIZE, UNMAPPED, dtype=np.int32)
        self.runs = []  # (label, start, end)
        self.run_cc = {}  # run index -> country code
        self.source_blocks = {}
        self.vp_before = {}

    # -- universe ------------------------------------------------------------

    def build_universe(self):
        cfg, rng = self.cfg, self.rng
        lo, hi = cfg.window
        counts = _apportion(
            hi - lo,
            (
                cfg.frac_reserved,
                cfg.frac_available,
                cfg.frac_unrouted_assigned,
                cfg.frac_routed_unused,
                cfg.frac_used,
            ),
        )
        self.leaf_counts = dict(zip(TaxonomyLabel, counts))
        runs = []
        run_lo = max(1, cfg.mean_run // 2)
        run_hi = cfg.mean_run * 2
        for label, count in zip(TaxonomyLabel, counts):
            remaining = count
            while remaining:
                size = min(remaining, int(rng.integers(run_lo, run_hi + 1)))
                runs.append((label, size))
                remaining -= size
        order = rng.permutation(len(runs))
        cursor = lo
        for idx in order:
            label, size = runs[idx]
            self.runs.append((label, cursor, cursor + size))
            self.labels[cursor : cursor + size] = label
            cursor += size

        self.blocks_of = {
            label: np.flatnonzero(self.labels[lo:hi] == label) + lo for label in TaxonomyLabel
        }
        self.routed = BlockSet.from_blocks(
            np.concatenate(
                (self.blocks_of[TaxonomyLabel.ROUTED_UNUSED], self.blocks_of[TaxonomyLabel.USED])
            )
        )
        self.used = BlockSet.from_blocks(self.blocks_of[TaxonomyLabel.USED])

    def run_indices(self, label):
        return [i for i, (lab, _, _) in enumerate(self.runs) if lab == label]

    # -- registry, geo, prefix2as ---------------------------------------------

    def build_registry(self):
        cfg, rng = self.cfg, self.rng
        delegations = []
        reserved_prefixes = []
        geo_lines = []
        assigned = {TaxonomyLabel.UNROUTED_ASSIGNED, TaxonomyLabel.ROUTED_UNUSED, TaxonomyLabel.USED}
        for idx, (label, start, end) in enumerate(self.runs):
            if label == TaxonomyLabel.RESERVED:
                reserved_prefixes.extend(format_prefix(net, plen) for net, plen in _span_cidrs(start, end))
            elif label == TaxonomyLabel.AVAILABLE:
                if rng.random() < 0.5:  # the rest exercise the uncovered->available default
                    status = "available" if rng.random() < 0.5 else "ianapool"
                    reg = RIRS[rng.integers(0, len(RIRS))] if status == "available" else "iana"
                    delegations.append(
                        f"{reg}|ZZ|ipv4|{block_base_ip(start)}|{(end - start) * 256}|20130723|{status}"
                    )
            elif label in assigned:
                cc = COUNTRY_POOL[rng.integers(0, len(COUNTRY_POOL))]
                reg = RIRS[rng.integers(0, len(RIRS))]
                status = "assigned" if rng.random() < 0.5 else "allocated"
                self.run_cc[idx] = cc
                delegations.append(
                    f"{reg}|{cc}|ipv4|{block_base_ip(start)}|{(end - start) * 256}|20130723|{status}"
                )
                geo_lines.append(f"{int_to_ip(start << 8)}|{int_to_ip((end << 8) - 1)}|{cc}")
                self.geo_truth[start:end] = cc_code(cc)

        # a few blocks split between two countries get excluded from geo aggregates
        conflict_runs = [i for i in self.run_indices(TaxonomyLabel.USED) if i in self.run_cc]
        picks = rng.choice(len(conflict_runs), size=min(cfg.n_geo_conflicts, len(conflict_runs)), replace=False)
        for pick in sorted(picks.tolist()):
            idx = conflict_runs[pick]
            _, start, _ = self.runs[idx]
            other = next(c for c in COUNTRY_POOL if c != self.run_cc[idx])
            base = start << 8
            geo_lines.append(f"{int_to_ip(base)}|{int_to_ip(base + 127)}|{self.run_cc[idx]}")
            geo_lines.append(f"{int_to_ip(base + 128)}|{int_to_ip(base + 255)}|{other}")
            self.geo_truth[start] = MULTI_COUNTRY

        self.files["delegations"] = delegations
        self.files["rfc_reserved"] = reserved_prefixes
        self.files["legacy8"] = [str(s8) for s8 in self.cfg.legacy_slash8s]
        self.files["geo"] = geo_lines
        self.files["continents"] = [f"{cc}|{CONTINENT_OF[cc]}" for cc in COUNTRY_POOL]

    def build_prefix2as(self):
        cfg, rng = self.cfg, self.rng
        lines = []
        routed_runs = self.run_indices(TaxonomyLabel.ROUTED_UNUSED) + self.run_indices(TaxonomyLabel.USED)
        routed_runs.sort()
        picks = rng.choice(
            len(routed_runs),
            size=min(len(routed_runs), cfg.n_multi_origin + cfg.n_as_set + cfg.n_unmapped_as + cfg.n_as_overrides),
            replace=False,
        ).tolist()
        multi = {routed_runs[i] for i in picks[: cfg.n_multi_origin]}
        as_set = {routed_runs[i] for i in picks[cfg.n_multi_origin : cfg.n_multi_origin + cfg.n_as_set]}
        unmapped = {
            routed_runs[i]
            for i in picks[cfg.n_multi_origin + cfg.n_as_set : cfg.n_multi_origin + cfg.n_as_set + cfg.n_unmapped_as]
        }
        override = {routed_runs[i] for i in picks[cfg.n_multi_origin + cfg.n_as_set + cfg.n_unmapped_as :]}

        for idx in routed_runs:
            label, start, end = self.runs[idx]
            cidrs = _span_cidrs(start, end)
            asn = int(rng.integers(1, cfg.n_ases + 1))
            if idx in unmapped:
                self.as_truth[start:end] = UNMAPPED
                continue
            if idx in multi:
                forms = (f"AS{asn},AS{asn + 1}",) if rng.random() < 0.5 else (f"AS{asn}", f"AS{asn + 1}")
                for net, plen in cidrs:
                    for origin in forms:
                        lines.append(f"{format_prefix(net, plen)}|{origin}")
                self.as_truth[start:end] = MULTI_ORIGIN
                continue
            if idx in as_set:
                for net, plen in cidrs:
                    lines.append(f"{format_prefix(net, plen)}|AS{asn}_AS{asn + 1}")
                self.as_truth[start:end] = AS_SET
                continue
            for net, plen in cidrs:
                lines.append(f"{format_prefix(net, plen)}|AS{asn}")
            self.as_truth[start:end] = asn
            # most-specific override: a /24 inside the run maps elsewhere, but
            # only when the run's own decomposition does not already contain
            # that exact /24 (which would merge into one conflicting prefix)
            if idx in override and cidrs[0][1] < 24:
                other = asn % cfg.n_ases + 1
                lines.append(f"{block_base_ip(start)}/24|AS{other}")
                self.as_truth[start] = other
        self.files["prefix2as"] = lines

    # -- BGP visibility ---------------------------------------------------------

    def build_visibility(self):
        cfg, rng = self.cfg, self.rng
        peers = [f"peer{i:02d}" for i in range(cfg.n_peers)]
        days = [f"2013-07-{23 + i:02d}" for i in range(cfg.n_days)]
        lines = []

        def announce(day, chosen, cidrs):
            for peer_i in chosen:
                for net, plen in cidrs:
                    lines.append(f"{day}|{peers[peer_i]}|{format_prefix(net, plen)}")

        hijackable = self.run_indices(TaxonomyLabel.AVAILABLE) + self.run_indices(TaxonomyLabel.RESERVED)
        hijacked = set(
            rng.choice(hijackable, size=min(cfg.n_hijacked, len(hijackable)), replace=False).tolist()
        ) if hijackable else set()

        for idx, (label, start, end) in enumerate(self.runs):
            cidrs = _span_cidrs(start, end)
            if label in (TaxonomyLabel.ROUTED_UNUSED, TaxonomyLabel.USED):
                best_day = int(rng.integers(0, len(days)))
                n_best = int(rng.integers(cfg.peer_threshold, cfg.n_peers + 1))
                chosen = rng.choice(cfg.n_peers, size=n_best, replace=False).tolist()
                announce(days[best_day], chosen, cidrs)
                # weaker visibility on one other day, plus a duplicate line
                if len(days) > 1 and rng.random() < 0.5:
                    other_day = days[(best_day + 1) % len(days)]
                    announce(other_day, chosen[: int(rng.integers(1, cfg.peer_threshold))], cidrs)
                if rng.random() < 0.1:
                    announce(days[best_day], chosen[:1], cidrs)
            elif label == TaxonomyLabel.UNROUTED_ASSIGNED:
                if rng.random() < 0.6:
                    n_seen = int(rng.integers(1, cfg.peer_threshold))
                    chosen = rng.choice(cfg.n_peers, size=n_seen, replace=False).tolist()
                    announce(days[int(rng.integers(0, len(days)))], chosen, cidrs)
            elif idx in hijacked:
                chosen = rng.choice(cfg.n_peers, size=cfg.peer_threshold, replace=False).tolist()
                announce(days[0], chosen, cidrs)
        self.files["visibility"] = lines

    # -- traffic ------------------------------------------------------------------

    def build_vantage_points(self):
        """Pick each vantage point's monitored blocks.  The darknet monitors a
        slice of routed-unused space; the flow log monitors a mix of used
        blocks (its active hosts) and routed-unused blocks that never produce
        a bidirectional flow (its dark reference for the darknet)."""
        cfg, rng = self.cfg, self.rng
        ru = self.blocks_of[TaxonomyLabel.ROUTED_UNUSED]
        used = self.blocks_of[TaxonomyLabel.USED]
        offset = int(rng.integers(0, max(1, len(ru) - cfg.darknet_monitored_blocks)))
        self.darknet_monitored = np.sort(ru[offset : offset + cfg.darknet_monitored_blocks])
        ru_free = np.setdiff1d(ru, self.darknet_monitored, assume_unique=True)
        self.flowlog_active = np.sort(
            rng.choice(used, size=min(cfg.flowlog_active_blocks, len(used)), replace=False)
        )
        self.flowlog_dark = np.sort(
            rng.choice(ru_free, size=min(cfg.flowlog_dark_blocks, len(ru_free)), replace=False)
        )
        self.flowlog_monitored = np.sort(np.concatenate((self.flowlog_active, self.flowlog_dark)))

    def _spoof_signatures(self, n):
        cfg, rng = self.cfg, self.rng
        mix = dict(cfg.spoof_mix)
        if not cfg.events:
            mix.pop("event", None)
        names = sorted(mix)
        weights = np.array([mix[name] for name in names], dtype=float)
        weights /= weights.sum()
        return rng.choice(names, size=n, p=weights)

    def _ts(self):
        return int(self.rng.integers(self.cfg.t0, self.cfg.t0 + self.cfg.duration))

    def _port(self):
        return int(self.rng.integers(1024, 49152))

    def _spoofed_packet(self, src_block, dst_block, signature):
        """A packet guaranteed to match at least one darknet filter."""
        cfg, rng = self.cfg, self.rng
        octet = int(rng.integers(1, 255))
        ts = self._ts()
        proto, sport, dport = TCP, self._port(), self._port()
        ttl = int(rng.integers(32, 201))
        flags, payload = 0x18, int(rng.integers(1, 600))
        if signature == "ttl":
            proto = TCP if rng.random() < 0.5 else UDP
            ttl = int(rng.integers(cfg.spoof_ttl_range[0], cfg.spoof_ttl_range[1] + 1))
        elif signature == "flagless":
            flags = 0
        elif signature == "udp-no-payload":
            proto, payload = UDP, 0
        elif signature == "octet0":
            octet = 0
        elif signature == "octet255":
            octet = 255
        elif signature == "nontraditional":
            proto = int(rng.choice((41, 47, 50, 132)))
        else:  # event
            event = cfg.events[int(rng.integers(0, len(cfg.events)))]
            proto, dport = event.proto, event.dport
            ts = int(rng.integers(event.ts_lo, event.ts_hi))
        if proto != TCP:
            flags = None
        if proto == UDP and signature != "udp-no-payload":
            payload = int(rng.integers(8, 600))
        src = (src_block << 8) | octet
        dst = (dst_block << 8) | int(rng.integers(0, 256))
        return TrafficRecord(
            kind="packet", ts=ts, src=src, dst=dst, proto=proto,
            sport=sport, dport=dport, ttl=ttl, flags=flags, payload_len=payload,
        )

    def _noise_pools(self, visible, unrouted_frac, dark_frac=0.0, dark_pool=None, total=None):
        """Sizes and block choices for noise so the pre-filter set hits the
        configured contamination fractions.  An explicit total overrides the
        detection-driven sizing (used to shape exact-fraction scenarios)."""
        rng = self.rng
        if total is not None:
            n_unrouted = round(total * unrouted_frac)
            n_dark = round(total * dark_frac)
            clean = total - n_unrouted - n_dark
            if clean < 0 or clean > len(visible):
                raise ConfigError("explicit source-block total incompatible with detection yield")
            visible = np.sort(rng.choice(visible, size=clean, replace=False))
        else:
            grand = len(visible) / max(1.0 - unrouted_frac - dark_frac, 1e-9)
            n_unrouted = round(grand * unrouted_frac)
            n_dark = round(grand * dark_frac)
        ua = self.blocks_of[TaxonomyLabel.UNROUTED_ASSIGNED]
        if n_unrouted > len(ua):
            raise ConfigError("not enough unrouted blocks to hit the configured fraction")
        spoof_unrouted = rng.choice(ua, size=n_unrouted, replace=False)
        spoof_dark = (
            rng.choice(dark_pool, size=n_dark, replace=False)
            if n_dark and dark_pool is not None
            else np.array([], dtype=np.int64)
        )
        return visible, spoof_unrouted, spoof_dark

    def build_darknet(self):
        cfg, rng = self.cfg, self.rng
        visible = _bernoulli_subset(rng, self.blocks_of[TaxonomyLabel.USED], cfg.detect["darknet"])
        if cfg.spoofing:
            visible, spoof_unrouted, spoof_dark = self._noise_pools(
                visible,
                cfg.darknet_unrouted_fraction,
                cfg.darknet_dark_fraction,
                self.flowlog_dark,
                total=cfg.darknet_total_src_blocks,
            )
        else:
            spoof_unrouted = spoof_dark = np.array([], dtype=np.int64)

        records = []
        for blk in visible.tolist():
            for _ in range(int(rng.integers(1, 4))):
                proto = int(rng.choice((TCP, UDP, ICMP), p=(0.5, 0.3, 0.2)))
                payload = int(rng.integers(8, 1200)) if proto == UDP else int(rng.integers(0, 1200))
                records.append(
                    TrafficRecord(
                        kind="packet",
                        ts=self._ts(),
                        src=(blk << 8) | int(rng.integers(1, 255)),
                        dst=(int(rng.choice(self.darknet_monitored)) << 8) | int(rng.integers(0, 256)),
                        proto=proto,
                        sport=self._port() if proto != ICMP else None,
                        dport=self._port() if proto != ICMP else None,
                        ttl=int(rng.integers(32, 201)),
                        flags=int(rng.choice((0x02, 0x10, 0x18))) if proto == TCP else None,
                        payload_len=payload,
                    )
                )
        spoofed = np.concatenate((spoof_unrouted, spoof_dark))
        signatures = self._spoof_signatures(len(spoofed))
        for blk, signature in zip(spoofed.tolist(), signatures.tolist()):
            for _ in range(int(rng.integers(1, 3))):
                records.append(
                    self._spoofed_packet(blk, int(rng.choice(self.darknet_monitored)), signature)
                )

        self.source_blocks["darknet"] = BlockSet.from_blocks(visible)
        self.vp_before["darknet"] = BlockSet.from_blocks(
            np.concatenate((visible, spoofed)) if len(spoofed) else visible
        )
        self._emit_traffic("darknet", records)

    def build_flowlog(self):
        cfg, rng = self.cfg, self.rng
        used = self.blocks_of[TaxonomyLabel.USED]
        remote_pool = np.setdiff1d(used, self.flowlog_active, assume_unique=True)
        visible = _bernoulli_subset(rng, remote_pool, cfg.detect["flowlog"])
        if cfg.spoofing:
            f = cfg.flowlog_unrouted_fraction
            n_noise = round(len(visible) * f / (1.0 - f))
            noise = rng.choice(self.blocks_of[TaxonomyLabel.UNROUTED_ASSIGNED], size=n_noise, replace=False)
        else:
            noise = np.array([], dtype=np.int64)

        records = []

        def flow(remote_blk, pkts, avg, bidir):
            remote = (remote_blk << 8) | int(rng.integers(1, 255))
            local = (int(rng.choice(self.flowlog_active)) << 8) | int(rng.integers(1, 255))
            src, dst = (remote, local) if rng.random() < 0.5 else (local, remote)
            return TrafficRecord(
                kind="flow", ts=self._ts(), src=src, dst=dst, proto=TCP,
                sport=self._port(), dport=self._port(),
                pkts=pkts, bytes=pkts * avg, bidir=bidir,
            )

        for blk in visible.tolist():
            for _ in range(int(rng.integers(1, 3))):
                records.append(flow(blk, int(rng.integers(5, 61)), int(rng.integers(80, 1201)), True))
        for blk in noise.tolist():
            if rng.random() < 0.5:  # unidirectional probe/backscatter
                records.append(flow(blk, int(rng.integers(1, 41)), int(rng.integers(40, 1201)), False))
            elif rng.random() < 0.5:  # too few packets
                records.append(flow(blk, int(rng.integers(1, 5)), int(rng.integers(80, 1201)), True))
            else:  # too small on average
                records.append(flow(blk, int(rng.integers(5, 41)), int(rng.integers(20, 80)), True))

        self.source_blocks["flowlog"] = BlockSet.from_blocks(visible)
        self.vp_before["flowlog"] = BlockSet.from_blocks(
            np.concatenate((visible, noise)) if len(noise) else visible
        )
        self._emit_traffic("flowlog", records)

    def build_bidirlog(self):
        cfg, rng = self.cfg, self.rng
        used = self.blocks_of[TaxonomyLabel.USED]
        local_pool = self.flowlog_active  # reuse as this provider's customer blocks
        remote_pool = np.setdiff1d(used, local_pool, assume_unique=True)
        visible = _bernoulli_subset(rng, remote_pool, cfg.detect["bidirlog"])
        if cfg.spoofing:
            f = cfg.bidirlog_unrouted_fraction
            n_noise = round(len(visible) * f / (1.0 - f))
            noise = rng.choice(self.blocks_of[TaxonomyLabel.UNROUTED_ASSIGNED], size=n_noise, replace=False)
        else:
            noise = np.array([], dtype=np.int64)

        records = []
        for blk in visible.tolist():
            remote = (blk << 8) | int(rng.integers(1, 255))
            local = (int(rng.choice(local_pool)) << 8) | int(rng.integers(1, 255))
            if rng.random() < 0.7:  # handshake-complete TCP, any direction
                local_init = bool(rng.random() < 0.5)
                records.append(TrafficRecord(
                    kind="flow", ts=self._ts(),
                    src=local if local_init else remote, dst=remote if local_init else local,
                    proto=TCP, sport=self._port(), dport=self._port(),
                    pkts=int(rng.integers(2, 50)), bytes=int(rng.integers(200, 40000)),
                    bidir=True, local_init=local_init, pl_fwd=True, pl_rev=bool(rng.random() < 0.9),
                ))
            else:  # clean UDP: locally initiated, payload both ways
                records.append(TrafficRecord(
                    kind="flow", ts=self._ts(), src=local, dst=remote,
                    proto=UDP, sport=self._port(), dport=self._port(),
                    pkts=int(rng.integers(2, 30)), bytes=int(rng.integers(100, 20000)),
                    bidir=True, local_init=True, pl_fwd=True, pl_rev=True,
                ))
        for blk in noise.tolist():  # remotely initiated UDP never counts
            remote = (blk << 8) | int(rng.integers(1, 255))
            local = (int(rng.choice(local_pool)) << 8) | int(rng.integers(1, 255))
            records.append(TrafficRecord(
                kind="flow", ts=self._ts(), src=remote, dst=local,
                proto=UDP, sport=self._port(), dport=self._port(),
                pkts=int(rng.integers(1, 20)), bytes=int(rng.integers(60, 4000)),
                bidir=bool(rng.random() < 0.5), local_init=False,
                pl_fwd=bool(rng.random() < 0.5), pl_rev=False,
            ))

        self.source_blocks["bidirlog"] = BlockSet.from_blocks(visible)
        self.vp_before["bidirlog"] = BlockSet.from_blocks(
            np.concatenate((visible, noise)) if len(noise) else visible
        )
        self._emit_traffic("bidirlog", records)

    def build_sampled(self):
        cfg, rng = self.cfg, self.rng
        used = self.blocks_of[TaxonomyLabel.USED]
        visible = _bernoulli_subset(rng, used, cfg.detect["sampled"])
        if cfg.spoofing:
            f = cfg.sampled_unrouted_fraction
            n_noise = round(len(visible) * f / (1.0 - f))
            noise = rng.choice(self.blocks_of[TaxonomyLabel.UNROUTED_ASSIGNED], size=n_noise, replace=False)
        else:
            noise = np.array([], dtype=np.int64)

        records = []

        def packet(src_blk, dst_blk, size, flags):
            return TrafficRecord(
                kind="packet", ts=self._ts(),
                src=(src_blk << 8) | int(rng.integers(1, 255)),
                dst=(dst_blk << 8) | int(rng.integers(1, 255)),
                proto=TCP, sport=self._port(), dport=self._port(),
                ttl=int(rng.integers(32, 201)), flags=flags, payload_len=size,
            )

        # clean exchanges: big enough packets, enough of them, no SYN
        for blk in visible.tolist():
            for _ in range(int(rng.integers(4, 11))):
                dst = int(rng.choice(visible))
                records.append(packet(blk, dst, int(rng.integers(180, 1401)), int(rng.choice((0x10, 0x18)))))
        if cfg.spoofing:
            # spoofed sources: few, small packets aimed at real hosts
            for blk in noise.tolist():
                for _ in range(int(rng.integers(1, 4))):
                    records.append(packet(blk, int(rng.choice(visible)), int(rng.integers(40, 121)), 0x10))
            # scanning: small packets from spoofed sources to dark space
            dark_targets = rng.choice(self.darknet_monitored, size=min(cfg.sampled_dark_targets, len(self.darknet_monitored)), replace=False)
            for blk in dark_targets.tolist():
                for _ in range(int(rng.integers(1, 4))):
                    src = int(rng.choice(noise)) if len(noise) else int(rng.choice(visible))
                    records.append(packet(src, blk, int(rng.integers(40, 61)), 0x10))
            # SYN floods are dropped before aggregation regardless of source
            syn_sources = rng.choice(self.blocks_of[TaxonomyLabel.UNROUTED_ASSIGNED], size=cfg.sampled_syn_blocks, replace=False)
            for blk in syn_sources.tolist():
                records.append(packet(blk, int(rng.choice(visible)), 40, 0x02))

        self.source_blocks["sampled"] = BlockSet.from_blocks(visible)
        before = BlockSet.from_blocks(visible)
        for rec in records:
            before.add(rec.src >> 8)
            before.add(rec.dst >> 8)
        self.vp_before["sampled"] = before
        self._emit_traffic("sampled", records)

    def _emit_traffic(self, name, records):
        order = self.rng.permutation(len(records))
        self.files[f"traffic_{name}"] = [format_traffic_record(records[i]) for i in order]

    # -- probes --------------------------------------------------------------------

    def build_probes(self):
        cfg, rng = self.cfg, self.rng
        used = self.blocks_of[TaxonomyLabel.USED]
        lines = []

        isi = _bernoulli_subset(rng, used, cfg.detect["isi"])
        picks = rng.choice(len(isi), size=min(len(isi), cfg.n_special_octet + cfg.n_single_nonspecial), replace=False).tolist()
        special = {int(isi[i]) for i in picks[: cfg.n_special_octet]}
        nonspecial = {int(isi[i]) for i in picks[cfg.n_special_octet :]}
        for blk in isi.tolist():
            if blk in special:
                octets = [int(rng.choice((0, 1, 255)))]
            elif blk in nonspecial:
                octets = [int(rng.integers(2, 255))]
            else:
                octets = rng.choice(np.arange(2, 255), size=int(rng.integers(1, 4)), replace=False).tolist()
            for octet in octets:
                addr = int_to_ip((blk << 8) | int(octet))
                lines.append(f"icmp_echo|{addr}|{addr}|1")
        ru = self.blocks_of[TaxonomyLabel.ROUTED_UNUSED]
        for blk in rng.choice(ru, size=cfg.icmp_mismatch, replace=False).tolist():
            target = (blk << 8) | 10
            lines.append(f"icmp_echo|{int_to_ip(target)}|{int_to_ip(target + 1)}|1")

        http = _bernoulli_subset(rng, used, cfg.detect["http"])
        for blk in http.tolist():
            addr = int_to_ip((blk << 8) | int(rng.integers(2, 255)))
            lines.append(f"http_get|{addr}|{addr}|{int(rng.integers(1, 5))}")

        ark = _bernoulli_subset(rng, used, cfg.detect["ark"])
        for blk in ark.tolist():
            hop = int_to_ip((blk << 8) | int(rng.integers(1, 255)))
            target = int_to_ip((int(rng.choice(used)) << 8) | int(rng.integers(1, 255)))
            lines.append(f"ttl_exceeded|{target}|{hop}|1")

        self.source_blocks["isi"] = BlockSet.from_blocks(isi)
        self.source_blocks["http"] = BlockSet.from_blocks(http)
        self.source_blocks["ark"] = BlockSet.from_blocks(ark)
        self.special_blocks = sorted(special)
        self.nonspecial_blocks = sorted(nonspecial)
        order = rng.permutation(len(lines))
        self.files["probes"] = [lines[i] for i in order]

    # -- reporting inputs -------------------------------------------------------------

    def build_indicator(self):
        cfg, rng = self.cfg, self.rng
        lo, hi = cfg.window
        used_mask = self.labels == TaxonomyLabel.USED
        self.country_used = {}
        for cc in COUNTRY_POOL:
            count = int(np.count_nonzero(used_mask & (self.geo_truth == cc_code(cc))))
            if count:
                self.country_used[cc] = count
        self.indicator = {
            cc: max(1, round(count * (1.0 + cfg.indicator_noise * rng.standard_normal())))
            for cc, count in sorted(self.country_used.items())
        }
        self.indicator["XX"] = 12345  # no used blocks: exercises exclusion counting
        self.files["indicator"] = [f"{cc}|{value}" for cc, value in sorted(self.indicator.items())]

    def build_filters(self):
        lines = []
        for event in self.cfg.events:
            lines += [
                f"rule {event.name}",
                f"  ts {event.ts_lo}-{event.ts_hi - 1}",
                f"  proto {event.proto}",
                f"  dport {event.dport}",
                "end",
            ]
        self.files["filters"] = lines
        self.files["monitored_darknet"] = [
            format_prefix(net, plen) for net, plen in _blocks_to_cidrs(self.darknet_monitored.tolist())
        ]
        self.files["monitored_flowlog"] = [
            format_prefix(net, plen) for net, plen in _blocks_to_cidrs(self.flowlog_monitored.tolist())
        ]


def generate(cfg=None):
    """Generate a full synthetic world; deterministic under cfg.seed."""
    cfg = cfg or ScenarioConfig()
    world = _World(cfg)
    world.build_universe()
    world.build_registry()
    world.build_prefix2as()
    world.build_visibility()
    world.build_vantage_points()
    world.build_darknet()
    world.build_flowlog()
    world.build_bidirlog()
    world.build_sampled()
    world.build_probes()
    world.build_indicator()
    world.build_filters()

    expected_used = BlockSet()
    for blocks in world.source_blocks.values():
        expected_used.mask |= blocks.mask
    expected_used.mask &= world.routed.mask

    truth = GroundTruth(
        window=cfg.window,
        labels=world.labels,
        leaf_counts=world.leaf_counts,
        routed=world.routed,
        used=world.used,
        source_blocks=world.source_blocks,
        expected_used=expected_used,
        darknet_monitored=BlockSet.from_blocks(world.darknet_monitored),
        flowlog_dark=BlockSet.from_blocks(world.flowlog_dark),
        vp_before=world.vp_before,
        as_truth=world.as_truth,
        geo_truth=world.geo_truth,
        country_used=world.country_used,
        indicator=world.indicator,
        special_blocks=world.special_blocks,
        nonspecial_blocks=world.nonspecial_blocks,
    )
    return Scenario(config=cfg, truth=truth, files=world.files)


_CONFIG_KEYS = {
    "seed": ("seed", int),
    "window": ("window", parse_window),
    "spoofing": ("spoofing", lambda v: v not in ("0", "false", "no")),
    "mean_run": ("mean_run", int),
    "n_peers": ("n_peers", int),
    "n_days": ("n_days", int),
    "peer_threshold": ("peer_threshold", int),
    "n_ases": ("n_ases", int),
    "darknet_unrouted_fraction": ("darknet_unrouted_fraction", float),
    "darknet_dark_fraction": ("darknet_dark_fraction", float),
    "darknet_total_src_blocks": ("darknet_total_src_blocks", int),
    "flowlog_unrouted_fraction": ("flowlog_unrouted_fraction", float),
    "bidirlog_unrouted_fraction": ("bidirlog_unrouted_fraction", float),
    "sampled_unrouted_fraction": ("sampled_unrouted_fraction", float),
    "duration": ("duration", int),
    "indicator_noise": ("indicator_noise", float),
}


def parse_scenario_config(lines, path=None):
    """Key/value scenario overrides: 'frac.used 0.3', 'detect.isi 0.5', 'seed 7'."""
    cfg = ScenarioConfig()
    for line_no, raw in enumerate(lines, 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        try:
            if key in _CONFIG_KEYS:
                attr, conv = _CONFIG_KEYS[key]
                setattr(cfg, attr, conv(value))
            elif key.startswith("frac."):
                setattr(cfg, "frac_" + key[5:], float(value))
            elif key.startswith("detect."):
                cfg.detect[key[7:]] = float(value)
            else:
                raise ValueError(f"unknown scenario key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{path or 'scenario config'} line {line_no}: {exc}") from None
    _validate(cfg)
    return cfg
