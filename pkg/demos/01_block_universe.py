# The /24-block universe: identifiers, set algebra, and label maps.
#
# Every IPv4 /24 block is an integer in [0, 2**24): the top 24 bits of its
# network address.  Block sets are dense bitsets over that universe and the
# label map stores one taxonomy leaf per block.

import numpy as np

from ipcensus.blockmap import (
    BlockLabelMap,
    BlockSet,
    RegistryCode,
    UNIVERSE_SIZE,
    block_of,
    finalize_taxonomy,
)

print(f"universe size: {UNIVERSE_SIZE:,} /24 blocks")
print("block_of('1.2.3.45') =", block_of("1.2.3.45"))

# Set algebra is plain boolean work over numpy masks.
a = BlockSet.from_prefixes(["10.0.0.0/16"])      # 256 blocks
b = BlockSet.from_prefixes(["10.0.128.0/17"])    # the top half
print("|a| =", len(a), " |b| =", len(b))
print("|a & b| =", len(a & b), " |a - b| =", len(a - b), " |a | b| =", len(a | b))

# A tiny universe: 1000 assigned blocks, 300 of them routed, 120 used.
codes = np.full(UNIVERSE_SIZE, RegistryCode.AVAILABLE, dtype=np.uint8)
codes[:1000] = RegistryCode.ASSIGNED
routed = BlockSet.from_range(0, 300)
used = BlockSet.from_range(0, 120)
labelmap = finalize_taxonomy(codes, routed, used, window=(0, 1000))
for label, count in labelmap.leaf_counts((0, 1000)).items():
    print(f"  {label.name.lower():>18}: {count}")

# The label map serializes to a deterministic binary snapshot.
labelmap.mark_source(0, used)
labelmap.save("/tmp/demo_labelmap.bin")
reloaded = BlockLabelMap.load("/tmp/demo_labelmap.bin")
print("snapshot roundtrip ok:", bool(np.array_equal(reloaded.labels, labelmap.labels)))
