# Rendering the census as a Hilbert-curve map.
#
# A block's index is its distance along the order-12 Hilbert curve, so one
# pixel per /24 gives a 4096x4096 image where numerically adjacent blocks
# stay visually adjacent and whole allocations appear as solid patches.
# Lower orders aggregate 4**(12-order) blocks per pixel by majority label.

import tempfile
from pathlib import Path

import numpy as np

from ipcensus.blockmap import BlockLabelMap, TaxonomyLabel
from ipcensus.hilbert import DEFAULT_PALETTE, d2xy, render, save_png, save_ppm
from ipcensus.synth import ScenarioConfig, generate

# the curve itself: the first few cells of each order trace the pattern
for order in (1, 2):
    xs, ys = d2xy(order, np.arange(4 ** order))
    print(f"order {order} curve:", list(zip(xs.tolist(), ys.tolist())))

# label the universe from a synthetic /8 and paint it
scenario = generate(ScenarioConfig(seed=7))
labels = scenario.truth.labels
labelmap = BlockLabelMap(labels=labels)

out = Path(tempfile.mkdtemp(prefix="census-hilbert-"))
image = render(labelmap, order=9, threads=2)  # 512x512: one pixel per 64 blocks
save_ppm(out / "census_order9.ppm", image)
save_png(out / "census_order9.png", image)

print("\npalette:")
for label in TaxonomyLabel:
    print(f"  {label.name.lower():>18}: rgb{DEFAULT_PALETTE[label]}")
print("\nwrote", out / "census_order9.png")
print("the 10.0.0.0/8 window shows up as a colorful square amid the")
print("(default-available) green background; zoom in to see the runs.")
