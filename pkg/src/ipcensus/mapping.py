"""Longest-prefix /24-to-ASN and /24-to-country mapping with exclusions.

Blocks that map to multiple origins (multi-origin prefixes, AS sets, or
equally specific disagreeing prefixes) or to multiple countries are
excluded from per-AS and per-country aggregates; the exclusion reason is
kept as a negative sentinel in the dense mapping arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmap import UNIVERSE_SIZE, ip_to_int, parse_prefix
from .errors import ParseError

UNMAPPED = -1
MULTI_ORIGIN = -2
AS_SET = -3
MULTI_COUNTRY = -4

EXCLUSION_NAMES = {
    UNMAPPED: "unmapped",
    MULTI_ORIGIN: "multi_origin",
    AS_SET: "as_set",
    MULTI_COUNTRY: "multi_country",
}


class PrefixTrie:
    """Binary trie over prefix bits; lookup returns the most specific payload."""

    __slots__ = ("children", "payload", "has_payload")

    def __init__(self):
        self.children = [None, None]
        self.payload = None
        self.has_payload = False

    def insert(self, net, plen, payload):
        node = self
        for i in range(plen):
            bit = (net >> (31 - i)) & 1
            if node.children[bit] is None:
                node.children[bit] = PrefixTrie()
            node = node.children[bit]
        node.payload = payload
        node.has_payload = True
        return node

    def lookup_block(self, block):
        """Payload of the most specific prefix covering the whole /24, or None."""
        addr = block << 8
        node = self
        best = self.payload if self.has_payload else None
        for i in range(24):
            node = node.children[(addr >> (31 - i)) & 1]
            if node is None:
                break
            if node.has_payload:
                best = node.payload
        return best


def parse_origin(token):
    """Classify an origin token: 'AS123' -> ('single', 123),
    'AS1_AS2' -> ('as_set', None), 'AS1,AS2' -> ('multi', None)."""
    if "_" in token:
        return ("as_set", None)
    if "," in token:
        return ("multi", None)
    if not token.startswith("AS") or not token[2:].isdigit():
        raise ValueError(f"bad origin {token!r}")
    asn = int(token[2:])
    if asn >= 1 << 31:
        raise ValueError(f"origin ASN out of range: {token!r}")
    return ("single", asn)


def parse_prefix2as(lines, path=None):
    """Yield (net, plen, kind, asn) from 'prefix|origin' lines."""
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 2:
            raise ParseError("expected prefix|origin", line_no, path)
        try:
            net, plen = parse_prefix(fields[0])
            kind, asn = parse_origin(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
        yield net, plen, kind, asn


def _group_origins(entries):
    """Merge entries by exact prefix into one decision value per prefix.

    Any AS-set origin poisons the prefix; otherwise more than one distinct
    single ASN (or an explicit multi-origin list) marks it multi-origin.
    Entries longer than /24 cannot cover a whole block and are tallied.
    """
    groups = {}
    ignored = 0
    for net, plen, kind, asn in entries:
        if plen > 24:
            ignored += 1
            continue
        groups.setdefault((net, plen), set()).add((kind, asn))
    decisions = {}
    for key, origins in groups.items():
        kinds = {k for k, _ in origins}
        if "as_set" in kinds:
            decisions[key] = AS_SET
        elif "multi" in kinds or len({a for k, a in origins if k == "single"}) > 1:
            decisions[key] = MULTI_ORIGIN
        else:
            decisions[key] = next(a for k, a in origins if k == "single")
    return decisions, ignored


@dataclass
class AsMapping:
    """Per-block resolved ASN; negative values are exclusion sentinels."""

    asn: np.ndarray  # int32 per block
    ignored_long_prefixes: int = 0

    def resolved(self):
        return self.asn >= 0

    def counts(self, window=None):
        lo, hi = window or (0, UNIVERSE_SIZE)
        seg = self.asn[lo:hi]
        out = {"resolved": int(np.count_nonzero(seg >= 0))}
        for sentinel, name in EXCLUSION_NAMES.items():
            if sentinel != MULTI_COUNTRY:
                out[name] = int(np.count_nonzero(seg == sentinel))
        return out


def build_as_mapping(entries):
    """Paint most-specific origins over the block universe."""
    decisions, ignored = _group_origins(entries)
    asn = np.full(UNIVERSE_SIZE, UNMAPPED, dtype=np.int32)
    for (net, plen), value in sorted(decisions.items(), key=lambda kv: kv[0][1]):
        lo = net >> 8
        asn[lo : lo + (1 << (24 - plen))] = value
    return AsMapping(asn=asn, ignored_long_prefixes=ignored)


def build_prefix_trie(entries):
    """The same per-prefix decisions as build_as_mapping, held in a lookup trie."""
    decisions, ignored = _group_origins(entries)
    trie = PrefixTrie()
    for (net, plen), value in decisions.items():
        trie.insert(net, plen, value)
    return trie, ignored


def cc_code(cc):
    """Pack a 2-letter country code into an int ('DE' -> 0x4445)."""
    if len(cc) != 2 or not cc.isascii() or not cc.isalpha():
        raise ValueError(f"bad country code {cc!r}")
    cc = cc.upper()
    return (ord(cc[0]) << 8) | ord(cc[1])


def code_cc(code):
    return chr((code >> 8) & 0xFF) + chr(code & 0xFF)


def parse_geo(lines, path=None):
    """Yield (start, end, cc) from 'start_ip|end_ip|cc' lines (inclusive ends)."""
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 3:
            raise ParseError("expected start_ip|end_ip|cc", line_no, path)
        try:
            start = ip_to_int(fields[0])
            end = ip_to_int(fields[1])
            cc = fields[2].upper()
            cc_code(cc)
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
        if end < start:
            raise ParseError(f"range end before start: {line}", line_no, path)
        yield start, end, cc


@dataclass
class GeoMapping:
    """Per-block packed country code; negative values are exclusion sentinels."""

    codes: np.ndarray  # int32 per block

    def resolved(self):
        return self.codes >= 0

    def country_of(self, block):
        value = int(self.codes[block])
        return code_cc(value) if value >= 0 else EXCLUSION_NAMES[value]

    def counts(self, window=None):
        lo, hi = window or (0, UNIVERSE_SIZE)
        seg = self.codes[lo:hi]
        return {
            "resolved": int(np.count_nonzero(seg >= 0)),
            "unmapped": int(np.count_nonzero(seg == UNMAPPED)),
            "multi_country": int(np.count_nonzero(seg == MULTI_COUNTRY)),
        }


def build_geo_mapping(entries):
    """A block maps to a country iff every overlapping range agrees on it."""
    codes = np.full(UNIVERSE_SIZE, UNMAPPED, dtype=np.int32)
    for start, end, cc in entries:
        value = cc_code(cc)
        seg = codes[start >> 8 : (end >> 8) + 1]
        conflict = (seg >= 0) & (seg != value)
        fresh = seg == UNMAPPED
        seg[fresh] = value
        seg[conflict] = MULTI_COUNTRY
    return GeoMapping(codes=codes)


def parse_continents(lines, path=None):
    """Country-to-continent table from 'cc|continent' lines."""
    table = {}
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 2 or not fields[1]:
            raise ParseError("expected cc|continent", line_no, path)
        try:
            cc_code(fields[0])
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
        table[fields[0].upper()] = fields[1]
    return table
