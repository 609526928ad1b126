"""Delegation parsing and per-block registry state (reserved / available / assigned)."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .blockmap import RegistryCode, UNIVERSE_SIZE, ip_to_int, parse_prefix, prefix_span
from .errors import ParseError

REGISTRIES = ("iana", "afrinic", "apnic", "arin", "lacnic", "ripencc")
ASSIGNED_STATUSES = frozenset({"assigned", "allocated"})
AVAILABLE_STATUSES = frozenset({"available", "ianapool"})
RESERVED_STATUSES = frozenset({"reserved_ietf"})
KNOWN_STATUSES = ASSIGNED_STATUSES | AVAILABLE_STATUSES | RESERVED_STATUSES

# Precedence when several records cover (part of) one /24: the most
# used-like status wins.  0 means "no record", which defaults to available.
_STATUS_RANK = {
    "reserved_ietf": 1,
    "available": 2,
    "ianapool": 2,
    "assigned": 3,
    "allocated": 3,
}
_RANK_TO_CODE = np.array(
    [RegistryCode.AVAILABLE, RegistryCode.RESERVED, RegistryCode.AVAILABLE, RegistryCode.ASSIGNED],
    dtype=np.uint8,
)


@dataclass
class DelegationRecord:
    registry: str
    cc: str
    start: int  # integer IPv4 address
    count: int  # number of addresses
    date: str
    status: str

    def block_span(self):
        """Covered block range [lo, hi); a partial /24 claims the whole block."""
        lo = self.start >> 8
        hi = (self.start + self.count + 255) >> 8
        return lo, min(hi, UNIVERSE_SIZE)


def parse_delegations(lines, path=None):
    """Parse 'registry|cc|ipv4|start|count|date|status' lines.

    Comment, version-header, summary, and non-ipv4 rows are skipped.  A bad
    IP, non-positive count, or unknown status raises ParseError with the
    offending line number.
    """
    records = []
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) < 3 or fields[2] != "ipv4":
            continue
        if len(fields) >= 6 and fields[5] == "summary":
            continue
        if len(fields) < 7:
            raise ParseError("expected registry|cc|ipv4|start|count|date|status", line_no, path)
        reg, cc, _, start_text, count_text, date, status = fields[:7]
        status = status.lower()
        if status not in KNOWN_STATUSES:
            raise ParseError(f"unknown status {status!r}", line_no, path)
        try:
            start = ip_to_int(start_text)
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
        try:
            count = int(count_text)
        except ValueError:
            raise ParseError(f"bad address count {count_text!r}", line_no, path) from None
        if count <= 0:
            raise ParseError(f"non-positive address count {count}", line_no, path)
        records.append(DelegationRecord(reg.lower(), (cc or "ZZ").upper(), start, count, date, status))
    return records


@dataclass
class RegistryState:
    codes: np.ndarray  # uint8 RegistryCode per block, full universe
    slash8_tags: tuple  # 256 entries: 'legacy', an RIR name, or 'iana'

    def counts(self, window=None):
        lo, hi = window or (0, UNIVERSE_SIZE)
        counts = np.bincount(self.codes[lo:hi], minlength=3)
        return {code: int(counts[code]) for code in RegistryCode}


def build_registry_state(records, rfc_reserved, legacy_slash8s=()):
    """Fold delegation records and the IETF-reserved list into per-block state.

    Reserved (from the rfc_reserved prefix list) wins over any delegation
    status; blocks covered by no record default to available.
    """
    rank = np.zeros(UNIVERSE_SIZE, dtype=np.uint8)
    for rec in records:
        lo, hi = rec.block_span()
        seg = rank[lo:hi]
        np.maximum(seg, _STATUS_RANK[rec.status], out=seg)
    codes = _RANK_TO_CODE[rank]
    for item in rfc_reserved:
        net, plen = parse_prefix(item) if isinstance(item, str) else item
        if plen > 24:
            lo = net >> 8
            hi = lo + 1
        else:
            lo, hi = prefix_span(net, plen)
        codes[lo:hi] = RegistryCode.RESERVED
    return RegistryState(codes=codes, slash8_tags=_slash8_tags(records, legacy_slash8s))


def _slash8_tags(records, legacy_slash8s):
    """Administrative tag per /8: 'legacy' from the static list, otherwise the
    RIR covering the most blocks in that /8 ('iana' when none does)."""
    legacy = {int(x) for x in legacy_slash8s}
    cover = {}
    for rec in records:
        lo, hi = rec.block_span()
        while lo < hi:
            s8 = lo >> 16
            edge = min(hi, (s8 + 1) << 16)
            per_rir = cover.setdefault(s8, {})
            per_rir[rec.registry] = per_rir.get(rec.registry, 0) + (edge - lo)
            lo = edge
    tags = []
    for s8 in range(256):
        if s8 in legacy:
            tags.append("legacy")
        elif s8 in cover:
            per_rir = cover[s8]
            tags.append(max(sorted(per_rir), key=lambda reg: per_rir[reg]))
        else:
            tags.append("iana")
    return tuple(tags)


def load_prefix_list(lines, path=None):
    """One CIDR prefix per line; '#' comments and blank lines ignored."""
    prefixes = []
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            prefixes.append(parse_prefix(line))
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
    return prefixes


def load_slash8_list(lines, path=None):
    """One /8 integer per line; '#' comments and blank lines ignored."""
    out = []
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not line.isdigit() or int(line) > 255:
            raise ParseError(f"bad /8 value {line!r}", line_no, path)
        out.append(int(line))
    return out


def _read_data(name):
    return resources.files("ipcensus").joinpath("data", name).read_text().splitlines()


def rfc5735_prefixes():
    """The IETF special-purpose ranges shipped with the package."""
    return load_prefix_list(_read_data("rfc5735.txt"), "rfc5735.txt")


def default_legacy_slash8s():
    """Pre-RIR legacy /8s shipped with the package (IANA registry designations)."""
    return load_slash8_list(_read_data("legacy8.txt"), "legacy8.txt")
