"""Routedness inference from per-peer BGP prefix-visibility snapshots.

A /24 counts as routed when a covering prefix was seen by at least
`threshold` distinct peers on some day, and the registry considers the
block assigned.  Available or reserved blocks never classify as routed,
no matter how many peers saw them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmap import BlockSet, RegistryCode, UNIVERSE_SIZE, parse_prefix, prefix_span
from .errors import ParseError

DEFAULT_PEER_THRESHOLD = 10


@dataclass
class PeerVisibilityIndex:
    """Per-block maximum over days of distinct peers seeing a covering prefix."""

    counts: np.ndarray  # uint16 per block
    ignored_long_prefixes: int = 0
    days: int = 0


def parse_visibility(lines, path=None):
    """Yield (day, peer_id, net, plen) from 'day|peer_id|prefix' lines."""
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 3:
            raise ParseError("expected day|peer_id|prefix", line_no, path)
        day, peer, prefix = fields
        try:
            net, plen = parse_prefix(prefix)
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from None
        yield day, peer, net, plen


def accumulate_visibility(records):
    """Fold visibility records into per-block max-over-days distinct peer counts.

    Records may arrive unsorted; repeated (day, peer, covering prefix)
    announcements count once.  A /23 contributes to both covered /24s;
    prefixes longer than /24 are ignored and tallied.
    """
    per_day = {}
    ignored = 0
    for day, peer, net, plen in records:
        if plen > 24:
            ignored += 1
            continue
        per_day.setdefault(day, {}).setdefault(peer, []).append(prefix_span(net, plen))

    index = np.zeros(UNIVERSE_SIZE, dtype=np.uint16)
    diff = np.zeros(UNIVERSE_SIZE + 1, dtype=np.int32)
    for day in sorted(per_day):
        diff[:] = 0
        for spans in per_day[day].values():
            # Merge one peer's covering prefixes so the peer counts once per block.
            spans.sort()
            cur_lo, cur_hi = spans[0]
            for lo, hi in spans[1:]:
                if lo > cur_hi:
                    diff[cur_lo] += 1
                    diff[cur_hi] -= 1
                    cur_lo, cur_hi = lo, hi
                else:
                    cur_hi = max(cur_hi, hi)
            diff[cur_lo] += 1
            diff[cur_hi] -= 1
        day_counts = np.cumsum(diff[:-1], dtype=np.int32)
        np.maximum(index, np.minimum(day_counts, 0xFFFF).astype(np.uint16), out=index)
    return PeerVisibilityIndex(counts=index, ignored_long_prefixes=ignored, days=len(per_day))


def classify_routed(index, registry, threshold=DEFAULT_PEER_THRESHOLD):
    """Blocks seen by >= threshold peers that the registry marks assigned."""
    if threshold < 1:
        raise ValueError("peer threshold must be >= 1")
    codes = registry.codes if hasattr(registry, "codes") else registry
    mask = (index.counts >= np.uint16(threshold)) & (codes == RegistryCode.ASSIGNED)
    return BlockSet(mask)
