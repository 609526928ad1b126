"""Merging curated sources over the routed universe plus contribution accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmap import MAX_SOURCES, UNIVERSE_SIZE, BlockSet

FAMILIES = ("active", "passive")
SPECIAL_OCTETS = (0, 1, 255)
_SPECIAL_MASK = (1 << 0) | (1 << 1) | (1 << 255)


@dataclass
class SourceSet:
    """One registered data source's inferred-used blocks."""

    source_id: str
    family: str  # 'active' or 'passive'
    blocks: BlockSet

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"bad source family {self.family!r}")


@dataclass
class ContributionRow:
    source_id: str
    family: str
    total: int
    unique_in_family: int
    unique_overall: int

    def to_dict(self):
        return {
            "source": self.source_id,
            "family": self.family,
            "total": self.total,
            "unique_in_family": self.unique_in_family,
            "unique_overall": self.unique_overall,
        }


@dataclass
class ContributionTable:
    rows: list
    family_totals: dict
    total_used: int
    routed_unused: int

    def to_dict(self):
        return {
            "rows": [row.to_dict() for row in self.rows],
            "family_totals": dict(self.family_totals),
            "total_used": self.total_used,
            "routed_unused": self.routed_unused,
        }


def merge_used(sources, routed):
    """Union the sources over the routed universe and account contributions.

    Per source: total observed routed blocks, blocks unique within its
    family, and blocks no other source saw at all.  Row order follows
    registration order.
    """
    if not sources:
        raise ValueError("at least one source required")
    if len(sources) > MAX_SOURCES:
        raise ValueError(f"at most {MAX_SOURCES} sources supported")

    masks = [s.blocks.mask & routed.mask for s in sources]
    overall = np.zeros(UNIVERSE_SIZE, dtype=np.uint8)
    family_counts = {fam: np.zeros(UNIVERSE_SIZE, dtype=np.uint8) for fam in FAMILIES}
    for source, mask in zip(sources, masks):
        overall += mask
        family_counts[source.family] += mask

    rows = []
    for source, mask in zip(sources, masks):
        rows.append(
            ContributionRow(
                source_id=source.source_id,
                family=source.family,
                total=int(np.count_nonzero(mask)),
                unique_in_family=int(np.count_nonzero(mask & (family_counts[source.family] == 1))),
                unique_overall=int(np.count_nonzero(mask & (overall == 1))),
            )
        )
    used = BlockSet(overall > 0)
    family_totals = {
        fam: int(np.count_nonzero(counts > 0)) for fam, counts in family_counts.items()
    }
    table = ContributionTable(
        rows=rows,
        family_totals=family_totals,
        total_used=len(used),
        routed_unused=len(routed) - len(used),
    )
    return used, table


def special_octet_analysis(icmp_octets, passive_sources):
    """Bucket lone-responder /24s by how many passive vantage points saw them.

    Only /24s whose ICMP census shows exactly one responding last octet
    qualify; 'special' means that octet is 0, 1, or 255.  Returns rows
    (vantage points seeing the block, special count, non-special count).
    """
    rows = [[n, 0, 0] for n in range(len(passive_sources) + 1)]
    for block, mask in icmp_octets.items():
        if mask.bit_count() != 1:
            continue
        seen = sum(1 for s in passive_sources if block in s.blocks)
        if mask & _SPECIAL_MASK:
            rows[seen][1] += 1
        else:
            rows[seen][2] += 1
    return [tuple(row) for row in rows]
