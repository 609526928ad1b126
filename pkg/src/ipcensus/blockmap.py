"""The /24-block universe: identifiers, block sets, and dense label maps.

Every IPv4 /24 block is identified by the top 24 bits of its network
address, an integer in [0, 2**24).  Label maps and block sets are always
backed by full-universe dense arrays; a scaled run restricts *counting*
to an iteration window [lo, hi) but never the backing storage.
"""

from __future__ import annotations

import struct
from enum import IntEnum

import numpy as np

from .errors import PartitionViolation

UNIVERSE_BITS = 24
UNIVERSE_SIZE = 1 << UNIVERSE_BITS  # 16,777,216 /24 blocks
FULL_WINDOW = (0, UNIVERSE_SIZE)
MAX_SOURCES = 16

SNAPSHOT_MAGIC = b"CENSUS01"
BLOCKSET_MAGIC = b"BSET0001"


class TaxonomyLabel(IntEnum):
    """Leaf categories; exactly one per block in a finalized census."""

    RESERVED = 0
    AVAILABLE = 1
    UNROUTED_ASSIGNED = 2
    ROUTED_UNUSED = 3
    USED = 4


LEAVES = tuple(TaxonomyLabel)


class RegistryCode(IntEnum):
    """Per-block registry state feeding the taxonomy."""

    RESERVED = 0
    AVAILABLE = 1
    ASSIGNED = 2


def ip_to_int(text):
    """Strict dotted-quad to 32-bit integer."""
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(f"bad IPv4 address {text!r}")
    value = 0
    for part in parts:
        if not part.isdigit():
            raise ValueError(f"bad IPv4 address {text!r}")
        octet = int(part)
        if octet > 255:
            raise ValueError(f"bad IPv4 address {text!r}")
        value = (value << 8) | octet
    return value


def int_to_ip(value):
    return f"{(value >> 24) & 255}.{(value >> 16) & 255}.{(value >> 8) & 255}.{value & 255}"


def block_of(addr):
    """Top 24 bits of an IPv4 address given in string or integer form."""
    if isinstance(addr, str):
        addr = ip_to_int(addr)
    if not 0 <= addr < (1 << 32):
        raise ValueError(f"address out of range: {addr}")
    return addr >> 8


def block_base_ip(block):
    """Network address of a block, e.g. 66051 -> '1.2.3.0'."""
    return int_to_ip(block << 8)


def parse_prefix(text):
    """Parse 'a.b.c.d/len' into (network_int, prefix_len); host bits are masked."""
    addr_text, sep, len_text = text.partition("/")
    if not sep or not len_text.isdigit():
        raise ValueError(f"bad prefix {text!r}")
    plen = int(len_text)
    if plen > 32:
        raise ValueError(f"bad prefix {text!r}: length out of range")
    addr = ip_to_int(addr_text)
    mask = ((1 << plen) - 1) << (32 - plen) if plen else 0
    return addr & mask, plen


def format_prefix(net, plen):
    return f"{int_to_ip(net)}/{plen}"


def prefix_span(net, plen):
    """Block index range [lo, hi) covered by a prefix of length <= 24."""
    if plen > UNIVERSE_BITS:
        raise ValueError(f"prefix longer than /24: /{plen}")
    lo = net >> 8
    return lo, lo + (1 << (UNIVERSE_BITS - plen))


def parse_window(text):
    """Window spec: either a CIDR ('10.0.0.0/8') or a block range ('lo:hi')."""
    if "/" in text:
        return prefix_span(*parse_prefix(text))
    lo_text, sep, hi_text = text.partition(":")
    if not sep:
        raise ValueError(f"bad window {text!r}")
    lo, hi = int(lo_text), int(hi_text)
    if not 0 <= lo < hi <= UNIVERSE_SIZE:
        raise ValueError(f"bad window {text!r}")
    return lo, hi


class BlockSet:
    """Mutable bitset over the full /24 universe with set algebra."""

    __slots__ = ("mask",)

    def __init__(self, mask=None):
        if mask is None:
            mask = np.zeros(UNIVERSE_SIZE, dtype=bool)
        else:
            mask = np.asarray(mask)
            if mask.shape != (UNIVERSE_SIZE,) or mask.dtype != np.bool_:
                raise ValueError("mask must be a bool array over the full universe")
        self.mask = mask

    @classmethod
    def from_blocks(cls, blocks):
        s = cls()
        idx = np.asarray(blocks if isinstance(blocks, np.ndarray) else list(blocks), dtype=np.int64)
        if idx.size:
            s.mask[idx] = True
        return s

    @classmethod
    def from_range(cls, lo, hi):
        s = cls()
        s.mask[lo:hi] = True
        return s

    @classmethod
    def from_prefixes(cls, prefixes):
        s = cls()
        for text in prefixes:
            lo, hi = prefix_span(*parse_prefix(text))
            s.mask[lo:hi] = True
        return s

    def add(self, block):
        self.mask[block] = True

    def copy(self):
        return BlockSet(self.mask.copy())

    def blocks(self):
        """Sorted array of member block indices."""
        return np.flatnonzero(self.mask)

    def count(self, window=None):
        lo, hi = window or FULL_WINDOW
        return int(np.count_nonzero(self.mask[lo:hi]))

    def restrict(self, window):
        lo, hi = window
        out = BlockSet()
        out.mask[lo:hi] = self.mask[lo:hi]
        return out

    def union(self, other):
        return BlockSet(self.mask | other.mask)

    def intersection(self, other):
        return BlockSet(self.mask & other.mask)

    def difference(self, other):
        return BlockSet(self.mask & ~other.mask)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other):
        return not bool(np.any(self.mask & ~other.mask))

    def __contains__(self, block):
        return bool(self.mask[block])

    def __len__(self):
        return int(np.count_nonzero(self.mask))

    def __bool__(self):
        return bool(self.mask.any())

    def __eq__(self, other):
        if not isinstance(other, BlockSet):
            return NotImplemented
        return bool(np.array_equal(self.mask, other.mask))

    __hash__ = None

    def __repr__(self):
        return f"BlockSet({len(self)} blocks)"

    def save(self, path):
        packed = np.packbits(self.mask, bitorder="little")
        with open(path, "wb") as fh:
            fh.write(BLOCKSET_MAGIC)
            fh.write(packed.tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            magic = fh.read(len(BLOCKSET_MAGIC))
            if magic != BLOCKSET_MAGIC:
                raise ValueError(f"{path}: not a block-set snapshot")
            packed = np.frombuffer(fh.read(), dtype=np.uint8)
        if packed.size != UNIVERSE_SIZE // 8:
            raise ValueError(f"{path}: truncated block-set snapshot")
        mask = np.unpackbits(packed, bitorder="little").astype(bool)
        return cls(mask)


class BlockLabelMap:
    """Dense per-block taxonomy labels plus per-source observation bits.

    Source bits record which registered data sources observed a block as
    used; bit positions follow registration order (at most 16 sources).
    """

    __slots__ = ("labels", "source_bits")

    def __init__(self, labels=None, source_bits=None):
        if labels is None:
            labels = np.full(UNIVERSE_SIZE, TaxonomyLabel.AVAILABLE, dtype=np.uint8)
        if source_bits is None:
            source_bits = np.zeros(UNIVERSE_SIZE, dtype=np.uint16)
        if labels.shape != (UNIVERSE_SIZE,) or source_bits.shape != (UNIVERSE_SIZE,):
            raise ValueError("label map arrays must cover the full universe")
        self.labels = labels
        self.source_bits = source_bits

    def leaf_counts(self, window=None):
        lo, hi = window or FULL_WINDOW
        counts = np.bincount(self.labels[lo:hi], minlength=len(LEAVES))
        return {label: int(counts[label]) for label in LEAVES}

    def label_set(self, label):
        return BlockSet(self.labels == np.uint8(label))

    def mark_source(self, bit, observed):
        if not 0 <= bit < MAX_SOURCES:
            raise ValueError(f"source bit {bit} outside [0, {MAX_SOURCES})")
        self.source_bits[observed.mask] |= np.uint16(1 << bit)

    def source_set(self, bit):
        if not 0 <= bit < MAX_SOURCES:
            raise ValueError(f"source bit {bit} outside [0, {MAX_SOURCES})")
        return BlockSet(((self.source_bits >> np.uint16(bit)) & 1).astype(bool))

    def save(self, path):
        """Binary snapshot: magic, little-endian universe size, one label byte
        per block, then two bytes of source bits per block."""
        with open(path, "wb") as fh:
            fh.write(SNAPSHOT_MAGIC)
            fh.write(struct.pack("<I", UNIVERSE_SIZE))
            fh.write(self.labels.tobytes())
            fh.write(self.source_bits.astype("<u2").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            magic = fh.read(len(SNAPSHOT_MAGIC))
            if magic != SNAPSHOT_MAGIC:
                raise ValueError(f"{path}: not a label-map snapshot")
            (size,) = struct.unpack("<I", fh.read(4))
            if size != UNIVERSE_SIZE:
                raise ValueError(f"{path}: unexpected universe size {size}")
            labels = np.frombuffer(fh.read(size), dtype=np.uint8).copy()
            source_bits = np.frombuffer(fh.read(2 * size), dtype="<u2").astype(np.uint16)
        if labels.size != size or source_bits.size != size:
            raise ValueError(f"{path}: truncated label-map snapshot")
        return cls(labels=labels, source_bits=source_bits)


def finalize_taxonomy(registry_codes, routed, used, window=None):
    """Assign exactly one leaf label to every block.

    Registry-reserved and available blocks keep those labels.  Assigned
    blocks become used, routed-unused, or unrouted-assigned depending on the
    routed and used sets.  Raises PartitionViolation when the inputs are
    inconsistent within the window (a used block outside the routed set, or
    a routed block that the registry does not consider assigned).
    """
    codes = registry_codes.codes if hasattr(registry_codes, "codes") else registry_codes
    lo, hi = window or FULL_WINDOW
    r = routed.mask
    u = used.mask

    bad_used = u[lo:hi] & ~r[lo:hi]
    if bad_used.any():
        first = int(np.flatnonzero(bad_used)[0]) + lo
        raise PartitionViolation(
            f"{int(np.count_nonzero(bad_used))} used blocks are not routed (first: {block_base_ip(first)}/24)"
        )
    bad_routed = r[lo:hi] & (codes[lo:hi] != RegistryCode.ASSIGNED)
    if bad_routed.any():
        first = int(np.flatnonzero(bad_routed)[0]) + lo
        raise PartitionViolation(
            f"{int(np.count_nonzero(bad_routed))} routed blocks are not assigned (first: {block_base_ip(first)}/24)"
        )

    labels = np.full(UNIVERSE_SIZE, TaxonomyLabel.UNROUTED_ASSIGNED, dtype=np.uint8)
    labels[r] = TaxonomyLabel.ROUTED_UNUSED
    labels[u] = TaxonomyLabel.USED
    labels[codes == RegistryCode.AVAILABLE] = TaxonomyLabel.AVAILABLE
    labels[codes == RegistryCode.RESERVED] = TaxonomyLabel.RESERVED
    return BlockLabelMap(labels=labels)
