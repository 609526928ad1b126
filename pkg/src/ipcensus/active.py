"""Active-probe log ingestion: ICMP census, HTTP scans, traceroute hops."""

from __future__ import annotations

from dataclasses import dataclass, field

from .blockmap import BlockSet, ip_to_int
from .errors import ParseError

PROBE_KINDS = ("icmp_echo", "http_get", "ttl_exceeded")


@dataclass(slots=True)
class ProbeRecord:
    kind: str
    target: int
    responder: int
    count: int


def parse_probes(lines, path=None):
    """Parse 'kind|target|responder|count' lines."""
    records = []
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 4:
            raise ParseError("expected kind|target|responder|count", line_no, path)
        kind, target_text, responder_text, count_text = fields
        if kind not in PROBE_KINDS:
            raise ParseError(f"unknown probe kind {kind!r}", line_no, path)
        try:
            target = ip_to_int(target_text)
            responder = ip_to_int(responder_text)
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
        try:
            count = int(count_text)
        except ValueError:
            raise ParseError(f"bad count {count_text!r}", line_no, path) from None
        if count <= 0:
            raise ParseError(f"non-positive count {count}", line_no, path)
        records.append(ProbeRecord(kind, target, responder, count))
    return records


@dataclass
class ActiveObservations:
    """Per-probe-kind used-/24 sets plus side data for later analyses."""

    sets: dict
    icmp_octets: dict = field(default_factory=dict)  # block -> 256-bit responder-octet mask
    http_counts: dict = field(default_factory=dict)  # block -> responding address count
    icmp_mismatched: int = 0


def ingest_probes(records):
    """Fold probe records into per-kind block sets.

    ICMP echo replies count only when the responder matches the probed
    address (mismatches are tallied and discarded); the responding last
    octets are retained per /24.  HTTP keeps per-/24 responder counts.
    Traceroute contributes the /24 of each hop that sent a Time Exceeded.
    """
    obs = ActiveObservations(sets={kind: BlockSet() for kind in PROBE_KINDS})
    for rec in records:
        if rec.kind == "icmp_echo":
            if rec.responder != rec.target:
                obs.icmp_mismatched += 1
                continue
            blk = rec.responder >> 8
            obs.sets[rec.kind].add(blk)
            obs.icmp_octets[blk] = obs.icmp_octets.get(blk, 0) | (1 << (rec.responder & 0xFF))
        elif rec.kind == "http_get":
            blk = rec.responder >> 8
            obs.sets[rec.kind].add(blk)
            obs.http_counts[blk] = obs.http_counts.get(blk, 0) + rec.count
        else:  # ttl_exceeded: the hop that answered reveals its own /24
            obs.sets[rec.kind].add(rec.responder >> 8)
    return obs
