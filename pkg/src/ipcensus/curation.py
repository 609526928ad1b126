"""Traffic curation: spoofed- and scanning-traffic removal per vantage-point kind.

Four curation styles match the four kinds of traffic data:

* darknet      full packet traces; source /24s, rule-chain spoofing filters
* flowlog      unsampled flow logs; bidirectional-TCP packet/size thresholds
* bidirlog     bidirectional flow logs whose producer already drops TCP flows
               that never complete a handshake; only UDP needs filtering
* sampled      sampled packet headers; per-/24 threshold grid search tuned
               against unrouted (source role) and known-dark (destination
               role) contamination

Each curation op returns the inferred-used block set together with metrics
recording what every filter removed.  A record is dropped iff it matches at
least one rule, so the final set never depends on rule order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blockmap import BlockSet, int_to_ip, ip_to_int, parse_prefix
from .errors import NoFeasibleThreshold, ParseError

ICMP, TCP, UDP = 1, 6, 17
TRADITIONAL_PROTOS = frozenset({ICMP, TCP, UDP})
TCP_SYN = 0x02

TRAFFIC_FIELDS = (
    "kind", "ts", "src", "dst", "proto", "sport", "dport", "ttl", "flags",
    "payload_len", "pkts", "bytes", "bidir", "local_init", "pl_fwd", "pl_rev",
    "class",
)


@dataclass(slots=True)
class TrafficRecord:
    """One normalized packet or flow observation."""

    kind: str  # 'packet' or 'flow'
    ts: float
    src: int  # integer IPv4 addresses
    dst: int
    proto: int
    sport: int | None = None
    dport: int | None = None
    ttl: int | None = None
    flags: int | None = None
    payload_len: int | None = None
    pkts: int | None = None
    bytes: int | None = None
    bidir: bool | None = None
    local_init: bool | None = None
    pl_fwd: bool | None = None
    pl_rev: bool | None = None
    klass: str | None = None

    def src_block(self):
        return self.src >> 8

    def dst_block(self):
        return self.dst >> 8


def _opt_int(text):
    return None if text == "-" else int(text)


def _opt_bool(text):
    if text == "-":
        return None
    if text == "1":
        return True
    if text == "0":
        return False
    raise ValueError(f"bad boolean field {text!r}")


def parse_traffic_line(line):
    """Parse one canonical traffic line; raises ValueError when malformed.

    Format: kind|ts|src|dst|proto|sport|dport|ttl|flags|payload_len|pkts|
    bytes|bidir|local_init|pl_fwd|pl_rev|class with '-' marking fields that
    do not apply to the record kind.
    """
    fields = line.rstrip("\n").split("|")
    if len(fields) != len(TRAFFIC_FIELDS):
        raise ValueError(f"expected {len(TRAFFIC_FIELDS)} fields, got {len(fields)}")
    kind = fields[0]
    if kind not in ("packet", "flow"):
        raise ValueError(f"bad record kind {fields[0]!r}")
    rec = TrafficRecord(
        kind=kind,
        ts=float(fields[1]),
        src=ip_to_int(fields[2]),
        dst=ip_to_int(fields[3]),
        proto=int(fields[4]),
        sport=_opt_int(fields[5]),
        dport=_opt_int(fields[6]),
        ttl=_opt_int(fields[7]),
        flags=_opt_int(fields[8]),
        payload_len=_opt_int(fields[9]),
        pkts=_opt_int(fields[10]),
        bytes=_opt_int(fields[11]),
        bidir=_opt_bool(fields[12]),
        local_init=_opt_bool(fields[13]),
        pl_fwd=_opt_bool(fields[14]),
        pl_rev=_opt_bool(fields[15]),
        klass=None if fields[16] == "-" else fields[16],
    )
    if rec.kind == "flow":
        if not rec.pkts or rec.pkts <= 0 or not rec.bytes or rec.bytes <= 0:
            raise ValueError("flow records need positive packet and byte counters")
    elif rec.payload_len is not None and rec.payload_len < 0:
        raise ValueError("negative payload length")
    return rec


def format_traffic_record(rec):
    def num(v):
        if v is None:
            return "-"
        if isinstance(v, bool):
            return "1" if v else "0"
        if isinstance(v, float) and v.is_integer():
            return str(int(v))
        return str(v)

    return "|".join(
        (
            rec.kind,
            num(rec.ts),
            int_to_ip(rec.src),
            int_to_ip(rec.dst),
            str(rec.proto),
            num(rec.sport),
            num(rec.dport),
            num(rec.ttl),
            num(rec.flags),
            num(rec.payload_len),
            num(rec.pkts),
            num(rec.bytes),
            num(rec.bidir),
            num(rec.local_init),
            num(rec.pl_fwd),
            num(rec.pl_rev),
            rec.klass if rec.klass is not None else "-",
        )
    )


def load_traffic(lines):
    """Parse a line stream into records; malformed lines are counted, not fatal."""
    records = []
    malformed = 0
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(parse_traffic_line(line))
        except ValueError:
            malformed += 1
    return records, malformed


# --- declarative record predicates -----------------------------------------

_NUMERIC_FIELDS = {"proto", "sport", "dport", "ttl", "flags", "payload_len", "pkts", "bytes", "ts"}
_ADDR_FIELDS = {"src", "dst"}
_STRING_FIELDS = {"kind": "kind", "class": "klass"}


class Rule:
    """A named conjunction of field conditions, e.g. a spoofing-event filter."""

    __slots__ = ("name", "conditions")

    def __init__(self, name, conditions):
        self.name = name
        self.conditions = conditions

    def matches(self, rec):
        for attr, kind, arg in self.conditions:
            value = getattr(rec, attr)
            if kind == "num":
                if value is None or not any(lo <= value <= hi for lo, hi in arg):
                    return False
            elif kind == "addr":
                net, mask = arg
                if (value & mask) != net:
                    return False
            else:  # string membership
                if value not in arg:
                    return False
        return True


def _parse_condition(name, spec):
    if name in _NUMERIC_FIELDS:
        ranges = []
        for token in spec.split(","):
            lo_text, sep, hi_text = token.partition("-")
            lo = float(lo_text) if "." in lo_text else int(lo_text)
            hi = (float(hi_text) if "." in hi_text else int(hi_text)) if sep else lo
            ranges.append((lo, hi))
        return (name, "num", tuple(ranges))
    if name in _ADDR_FIELDS:
        net, plen = parse_prefix(spec)
        mask = ((1 << plen) - 1) << (32 - plen) if plen else 0
        return (name, "addr", (net, mask))
    if name in _STRING_FIELDS:
        return (_STRING_FIELDS[name], "str", frozenset(spec.split(",")))
    raise ValueError(f"unknown rule field {name!r}")


def parse_rules(lines, path=None):
    """Parse a rule-config stream.

    Syntax: a 'rule NAME' line opens a block of 'field spec' lines closed by
    'end'.  Numeric specs take values, inclusive ranges ('200-255'), or
    comma lists; src/dst take a CIDR; kind/class take comma-separated tokens.
    """
    rules = []
    name = None
    conditions = []
    for line_no, raw in enumerate(lines, 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        if line.startswith("rule "):
            if name is not None:
                raise ParseError(f"rule {name!r} not closed with 'end'", line_no, path)
            name = line[5:].strip()
            conditions = []
        elif line == "end":
            if name is None:
                raise ParseError("'end' outside a rule block", line_no, path)
            rules.append(Rule(name, tuple(conditions)))
            name = None
        else:
            if name is None:
                raise ParseError(f"expected 'rule NAME', got {line!r}", line_no, path)
            field_name, _, spec = line.partition(" ")
            try:
                conditions.append(_parse_condition(field_name, spec.strip()))
            except ValueError as exc:
                raise ParseError(str(exc), line_no, path) from None
    if name is not None:
        raise ParseError(f"rule {name!r} not closed with 'end'", None, path)
    return rules


# --- metrics ----------------------------------------------------------------


@dataclass
class FilterTally:
    """Per-filter record and distinct-/24 counts; a record may tally under
    every rule it matches, so tallies overlap."""

    name: str
    records: int = 0
    blocks: BlockSet = field(default_factory=BlockSet)
    unrouted_blocks: int | None = None

    def to_dict(self):
        out = {"name": self.name, "records": self.records, "blocks": len(self.blocks)}
        if self.unrouted_blocks is not None:
            out["unrouted_blocks"] = self.unrouted_blocks
        return out


@dataclass
class ValidationFragment:
    """Contamination of an inferred-used set against reference sets."""

    unrouted_count: int
    unrouted_fraction: float
    dark_count: int
    dark_fraction: float

    def to_dict(self):
        return {
            "unrouted_count": self.unrouted_count,
            "unrouted_fraction": self.unrouted_fraction,
            "dark_count": self.dark_count,
            "dark_fraction": self.dark_fraction,
        }


def validation_metrics(blockset, routed, dark):
    """Unrouted and dark contamination of an inferred-used block set.

    The unrouted fraction is relative to the set itself (what share of the
    inference cannot be legitimate); the dark fraction is relative to the
    dark reference (what share of known-dark blocks the set claims as used).
    """
    n = len(blockset)
    unrouted = len(blockset - routed)
    dark_hits = len(blockset & dark)
    dark_total = len(dark)
    return ValidationFragment(
        unrouted_count=unrouted,
        unrouted_fraction=unrouted / n if n else 0.0,
        dark_count=dark_hits,
        dark_fraction=dark_hits / dark_total if dark_total else 0.0,
    )


@dataclass
class CurationMetrics:
    vp_kind: str
    records_in: int = 0
    records_kept: int = 0
    skipped: int = 0  # records of the wrong kind for this vantage point
    unoriented: int = 0  # flows whose remote side could not be resolved
    before: BlockSet = field(default_factory=BlockSet)
    after: BlockSet = field(default_factory=BlockSet)
    tallies: list = field(default_factory=list)
    validation_before: ValidationFragment | None = None
    validation_after: ValidationFragment | None = None

    @property
    def blocks_before(self):
        return len(self.before)

    @property
    def blocks_after(self):
        return len(self.after)

    def attach_validation(self, routed, dark):
        self.validation_before = validation_metrics(self.before, routed, dark)
        self.validation_after = validation_metrics(self.after, routed, dark)
        for tally in self.tallies:
            tally.unrouted_blocks = len(tally.blocks - routed)
        return self

    def to_dict(self):
        out = {
            "vp_kind": self.vp_kind,
            "records_in": self.records_in,
            "records_kept": self.records_kept,
            "skipped": self.skipped,
            "unoriented": self.unoriented,
            "blocks_before": self.blocks_before,
            "blocks_after": self.blocks_after,
            "filters": [t.to_dict() for t in self.tallies],
        }
        if self.validation_before is not None:
            out["before"] = self.validation_before.to_dict()
            out["after"] = self.validation_after.to_dict()
        return out


def _run_rule_chain(metrics, tallies, rules, rec, blk):
    dropped = False
    for tally, (_, pred) in zip(tallies, rules):
        if pred(rec):
            dropped = True
            tally.records += 1
            tally.blocks.add(blk)
    if not dropped:
        metrics.records_kept += 1
        metrics.after.add(blk)


# --- darknet ----------------------------------------------------------------


@dataclass
class DarknetConfig:
    ttl_max: int = 200
    traditional_protos: frozenset = TRADITIONAL_PROTOS
    specific_filters: tuple = ()


def curate_darknet(records, cfg=None):
    """Source-/24 inference from darknet packets with anti-spoofing filters.

    The rule chain drops packets with TTL above the threshold (unless ICMP),
    source last octet 0 or 255, a protocol outside {TCP, UDP, ICMP},
    source equal to destination, flagless TCP, payloadless UDP, and anything
    matching the configured event-specific filters.
    """
    cfg = cfg or DarknetConfig()
    rules = [
        ("ttl-over-{}-not-icmp".format(cfg.ttl_max),
         lambda r: r.ttl is not None and r.ttl > cfg.ttl_max and r.proto != ICMP),
        ("src-last-octet-0", lambda r: (r.src & 0xFF) == 0),
        ("src-last-octet-255", lambda r: (r.src & 0xFF) == 255),
        ("non-traditional-proto", lambda r: r.proto not in cfg.traditional_protos),
        ("same-src-dst", lambda r: r.src == r.dst),
        ("tcp-no-flags", lambda r: r.proto == TCP and not r.flags),
        ("udp-no-payload", lambda r: r.proto == UDP and not r.payload_len),
        *((f"specific:{rule.name}", rule.matches) for rule in cfg.specific_filters),
    ]
    metrics = CurationMetrics(vp_kind="darknet")
    tallies = [FilterTally(name) for name, _ in rules]
    metrics.tallies = tallies
    for rec in records:
        if rec.kind != "packet":
            metrics.skipped += 1
            continue
        metrics.records_in += 1
        blk = rec.src >> 8
        metrics.before.add(blk)
        _run_rule_chain(metrics, tallies, rules, rec, blk)
    return metrics.after, metrics


# --- flow logs ---------------------------------------------------------------


def _remote_addr(rec, monitored):
    """The non-monitored side of a flow, or None when undecidable.

    With a monitored set, exactly one side must be inside it.  Without one,
    the producer's direction label decides (locally initiated means the
    remote is the destination); unlabeled flows fall back to the source.
    """
    if monitored is not None:
        src_in = rec.src >> 8 in monitored
        dst_in = rec.dst >> 8 in monitored
        if src_in == dst_in:
            return None
        return rec.dst if src_in else rec.src
    if rec.local_init is None:
        return rec.src
    return rec.dst if rec.local_init else rec.src


def curate_flowlog(records, min_pkts=5, min_avg_bytes=80, monitored=None):
    """Keep bidirectional TCP flows with enough packets and bytes per packet.

    Thresholds are inclusive: exactly min_pkts packets at exactly
    min_avg_bytes bytes per packet passes.  Emits the remote-side /24s.
    """
    rules = [
        ("non-tcp", lambda r: r.proto != TCP),
        ("not-bidirectional", lambda r: not r.bidir),
        ("under-{}-packets".format(min_pkts), lambda r: r.pkts < min_pkts),
        # Cross-multiplied so the bytes-per-packet boundary stays exact.
        ("under-{}-bytes-per-packet".format(min_avg_bytes),
         lambda r: r.bytes < min_avg_bytes * r.pkts),
    ]
    metrics = CurationMetrics(vp_kind="flowlog")
    tallies = [FilterTally(name) for name, _ in rules]
    metrics.tallies = tallies
    for rec in records:
        if rec.kind != "flow":
            metrics.skipped += 1
            continue
        metrics.records_in += 1
        remote = _remote_addr(rec, monitored)
        if remote is None:
            metrics.unoriented += 1
            continue
        blk = remote >> 8
        metrics.before.add(blk)
        _run_rule_chain(metrics, tallies, rules, rec, blk)
    return metrics.after, metrics


def curate_bidirlog(records):
    """Curate producer-validated bidirectional flow logs.

    TCP rows pass unchanged (the producer only logs flows that completed the
    handshake).  UDP rows must be locally initiated with payload observed in
    both directions.  Other protocols are dropped.
    """
    rules = [
        ("non-tcp-udp", lambda r: r.proto not in (TCP, UDP)),
        ("udp-not-locally-initiated", lambda r: r.proto == UDP and not r.local_init),
        ("udp-without-two-way-payload",
         lambda r: r.proto == UDP and not (r.pl_fwd and r.pl_rev)),
    ]
    metrics = CurationMetrics(vp_kind="bidirlog")
    tallies = [FilterTally(name) for name, _ in rules]
    metrics.tallies = tallies
    for rec in records:
        if rec.kind != "flow":
            metrics.skipped += 1
            continue
        metrics.records_in += 1
        remote = rec.dst if rec.local_init else rec.src
        blk = remote >> 8
        metrics.before.add(blk)
        _run_rule_chain(metrics, tallies, rules, rec, blk)
    return metrics.after, metrics


# --- sampled packets ---------------------------------------------------------


@dataclass
class SampledConfig:
    min_packets_grid: tuple = tuple(range(1, 51))
    min_avg_size_grid: tuple = tuple(range(40, 1501, 10))
    epsilon_unrouted: float = 0.001
    dark_bound: int = 3
    include_udp: bool = False


@dataclass
class ThresholdChoice:
    role: str
    min_packets: int
    min_avg_size: int
    set_size: int
    error_count: int

    def to_dict(self):
        return {
            "role": self.role,
            "min_packets": self.min_packets,
            "min_avg_size": self.min_avg_size,
            "set_size": self.set_size,
            "error_count": self.error_count,
        }


def _search_thresholds(role, counts_by_block, bytes_by_block, p_grid, s_grid,
                       error_mask_full, mode, bound):
    """Pick the threshold pair keeping the most /24s within the error bound.

    Feasibility: mode 'fraction' bounds |selection outside reference| /
    |selection| (empty selections count as error zero); mode 'absolute'
    bounds |selection inside reference|.  Ties prefer the smallest
    (min_packets, min_avg_size) pair.
    """
    blocks = np.fromiter(counts_by_block.keys(), dtype=np.int64, count=len(counts_by_block))
    counts = np.fromiter(counts_by_block.values(), dtype=np.int64, count=len(counts_by_block))
    sizes = np.fromiter((bytes_by_block[b] for b in counts_by_block), dtype=np.float64,
                        count=len(counts_by_block))
    avgs = sizes / np.maximum(counts, 1)

    p_grid = np.asarray(sorted(set(p_grid)), dtype=np.int64)
    s_grid = np.asarray(sorted(set(s_grid)), dtype=np.float64)
    np_, ns = len(p_grid), len(s_grid)

    # Bucket each /24 by the largest thresholds it still satisfies; suffix
    # sums then give the selection size at every grid point at once.
    pi = np.searchsorted(p_grid, counts, side="right") - 1
    si = np.searchsorted(s_grid, avgs, side="right") - 1
    err = error_mask_full[blocks] if len(blocks) else np.zeros(0, dtype=bool)
    valid = (pi >= 0) & (si >= 0)

    hist = np.zeros((np_, ns), dtype=np.int64)
    err_hist = np.zeros((np_, ns), dtype=np.int64)
    np.add.at(hist, (pi[valid], si[valid]), 1)
    np.add.at(err_hist, (pi[valid & err], si[valid & err]), 1)
    sizes_mat = np.flip(np.flip(hist, 0).cumsum(0), 0)
    sizes_mat = np.flip(np.flip(sizes_mat, 1).cumsum(1), 1)
    err_mat = np.flip(np.flip(err_hist, 0).cumsum(0), 0)
    err_mat = np.flip(np.flip(err_mat, 1).cumsum(1), 1)

    if mode == "fraction":
        frac = err_mat / np.maximum(sizes_mat, 1)
        feasible = (sizes_mat == 0) | (frac <= bound)
    else:
        feasible = err_mat <= bound
    if not feasible.any():
        raise NoFeasibleThreshold(
            f"{role} role: no grid point keeps the error within {bound}"
        )
    best = sizes_mat[feasible].max()
    i, j = np.argwhere(feasible & (sizes_mat == best))[0]
    selected = (counts >= p_grid[i]) & (avgs >= s_grid[j])
    choice = ThresholdChoice(
        role=role,
        min_packets=int(p_grid[i]),
        min_avg_size=int(s_grid[j]),
        set_size=int(best),
        error_count=int(err_mat[i, j]),
    )
    return BlockSet.from_blocks(blocks[selected]), choice


def curate_sampled(records, routed, dark, cfg=None):
    """Threshold search for sampled packet data.

    SYN-flagged TCP packets are discarded outright (scanning); the rest
    aggregate per /24 separately in the source and destination roles.  A
    grid search then picks, per role, the (min packets, min average size)
    pair whose selection stays within the error bound while keeping the
    most /24s: the source role bounds the unrouted fraction, the destination
    role bounds the absolute count of known-dark blocks.  The final set is
    the union of both selections.
    """
    cfg = cfg or SampledConfig()
    protos = (TCP, UDP) if cfg.include_udp else (TCP,)
    metrics = CurationMetrics(vp_kind="sampled")
    syn_tally = FilterTally("tcp-syn")
    metrics.tallies = [syn_tally]

    src_cnt, src_bytes = {}, {}
    dst_cnt, dst_bytes = {}, {}
    for rec in records:
        if rec.kind != "packet" or rec.proto not in protos:
            metrics.skipped += 1
            continue
        metrics.records_in += 1
        sb, db = rec.src >> 8, rec.dst >> 8
        metrics.before.add(sb)
        metrics.before.add(db)
        if rec.proto == TCP and rec.flags is not None and rec.flags & TCP_SYN:
            syn_tally.records += 1
            syn_tally.blocks.add(sb)
            continue
        size = rec.payload_len or 0
        src_cnt[sb] = src_cnt.get(sb, 0) + 1
        src_bytes[sb] = src_bytes.get(sb, 0) + size
        dst_cnt[db] = dst_cnt.get(db, 0) + 1
        dst_bytes[db] = dst_bytes.get(db, 0) + size

    unrouted_mask = ~routed.mask
    src_set, src_choice = _search_thresholds(
        "src", src_cnt, src_bytes, cfg.min_packets_grid, cfg.min_avg_size_grid,
        unrouted_mask, "fraction", cfg.epsilon_unrouted)
    dst_set, dst_choice = _search_thresholds(
        "dst", dst_cnt, dst_bytes, cfg.min_packets_grid, cfg.min_avg_size_grid,
        dark.mask, "absolute", cfg.dark_bound)

    metrics.after = src_set | dst_set
    metrics.records_kept = metrics.records_in - syn_tally.records
    return metrics.after, metrics, {"src": src_choice, "dst": dst_choice}


# --- vantage-point profiles ---------------------------------------------------


@dataclass
class VantagePointProfile:
    """Everything needed to curate one vantage point's traffic.

    Darknet and flow-log profiles use monitored_blocks to orient records
    (the darknet infers from sources aimed at it, flow logs from the remote
    side); the sampling rate is metadata for sampled captures.
    """

    vp_kind: str  # 'darknet', 'flowlog', 'bidirlog', or 'sampled'
    monitored_blocks: BlockSet | None = None
    sampling_rate: int | None = None
    darknet_config: DarknetConfig | None = None
    flow_min_pkts: int = 5
    flow_min_avg_bytes: int = 80
    sampled_config: SampledConfig | None = None

    def curate(self, records, routed=None, dark=None):
        """Run this profile's curation; returns (blocks, metrics, choices).

        `choices` holds the chosen thresholds for sampled profiles and is
        None otherwise.  Sampled profiles need the routed and dark sets.
        """
        if self.vp_kind == "darknet":
            blocks, metrics = curate_darknet(records, self.darknet_config)
            return blocks, metrics, None
        if self.vp_kind == "flowlog":
            blocks, metrics = curate_flowlog(
                records, self.flow_min_pkts, self.flow_min_avg_bytes, self.monitored_blocks)
            return blocks, metrics, None
        if self.vp_kind == "bidirlog":
            blocks, metrics = curate_bidirlog(records)
            return blocks, metrics, None
        if self.vp_kind == "sampled":
            if routed is None or dark is None:
                raise ValueError("sampled curation needs routed and dark reference sets")
            return curate_sampled(records, routed, dark, self.sampled_config)
        raise ValueError(f"unknown vantage-point kind {self.vp_kind!r}")


# --- traffic composition -----------------------------------------------------


def traffic_component_tally(records, rules=(), default_class="unknown", address_role="src"):
    """Distinct-/24 counts per traffic class plus each class's unique blocks.

    A record's class is its producer tag when present, else the first
    matching rule, else `default_class`.  `address_role` picks which address
    feeds the tally: 'src', 'dst', or 'remote' (producer direction label).
    """
    per_class = {}
    for rec in records:
        if address_role == "src":
            addr = rec.src
        elif address_role == "dst":
            addr = rec.dst
        else:
            addr = rec.dst if rec.local_init else rec.src
        klass = rec.klass
        if klass is None:
            klass = next((r.name for r in rules if r.matches(rec)), default_class)
        per_class.setdefault(klass, set()).add(addr >> 8)

    seen_in = {}
    for blocks in per_class.values():
        for blk in blocks:
            seen_in[blk] = seen_in.get(blk, 0) + 1
    rows = [
        (klass, len(blocks), sum(1 for blk in blocks if seen_in[blk] == 1))
        for klass, blocks in per_class.items()
    ]
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows
