"""Hilbert space-filling curve and the census raster renderer.

A block index is its distance along the order-12 Hilbert curve, so one
pixel per /24 yields a 4096x4096 raster where numerically close blocks
stay visually close.  Lower orders aggregate 4**(12-order) consecutive
blocks per pixel by majority label.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from PIL import Image

from .blockmap import LEAVES, TaxonomyLabel, UNIVERSE_SIZE

FULL_ORDER = 12

DEFAULT_PALETTE = {
    TaxonomyLabel.USED: (255, 0, 0),
    TaxonomyLabel.ROUTED_UNUSED: (128, 128, 128),
    TaxonomyLabel.UNROUTED_ASSIGNED: (0, 0, 0),
    TaxonomyLabel.AVAILABLE: (0, 255, 0),
    TaxonomyLabel.RESERVED: (0, 0, 255),
}


def _rotate(s, x, y, rx, ry):
    """Quadrant rotation shared by both curve directions (side length s)."""
    flip = (ry == 0) & (rx == 1)
    xf = np.where(flip, s - 1 - x, x)
    yf = np.where(flip, s - 1 - y, y)
    swap = ry == 0
    return np.where(swap, yf, xf), np.where(swap, xf, yf)


def d2xy(order, d):
    """Curve distance(s) to (x, y) coordinates on the 2**order square."""
    d = np.asarray(d, dtype=np.int64)
    scalar = d.ndim == 0
    t = np.atleast_1d(d).copy()
    if t.size and (t.min() < 0 or t.max() >= 1 << (2 * order)):
        raise ValueError(f"distance out of range for order {order}")
    x = np.zeros_like(t)
    y = np.zeros_like(t)
    s = 1
    side = 1 << order
    while s < side:
        rx = (t >> 1) & 1
        ry = (t ^ rx) & 1
        x, y = _rotate(s, x, y, rx, ry)
        x += s * rx
        y += s * ry
        t >>= 2
        s <<= 1
    if scalar:
        return int(x[0]), int(y[0])
    return x, y


def xy2d(order, x, y):
    """(x, y) coordinates to curve distance(s); inverse of d2xy."""
    x = np.asarray(x, dtype=np.int64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).copy()
    y = np.atleast_1d(np.asarray(y, dtype=np.int64)).copy()
    side = 1 << order
    if x.size and (x.min() < 0 or x.max() >= side or y.min() < 0 or y.max() >= side):
        raise ValueError(f"coordinate out of range for order {order}")
    d = np.zeros_like(x)
    s = side >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        x, y = _rotate(side, x, y, rx, ry)
        s >>= 1
    if scalar:
        return int(d[0])
    return d


def aggregate_labels(labels, order):
    """Majority label per order-`order` curve cell.

    Consecutive blocks share a cell because the high 2*order bits of a
    block index are its cell's distance.  Ties prefer the more used-like
    label (used > routed-unused > unrouted-assigned > available > reserved).
    """
    if order == FULL_ORDER:
        return labels
    cell = 1 << (2 * (FULL_ORDER - order))
    chunks = labels.reshape(-1, cell)
    best_count = np.full(len(chunks), -1, dtype=np.int64)
    best_label = np.zeros(len(chunks), dtype=np.uint8)
    for label in LEAVES:  # ascending, so the highest label wins ties via >=
        count = (chunks == np.uint8(label)).sum(axis=1)
        better = count >= best_count
        best_count = np.where(better, count, best_count)
        best_label = np.where(better, np.uint8(label), best_label)
    return best_label


def render(labelmap, order=FULL_ORDER, palette=None, threads=1):
    """Rasterize a label map into an RGB image, one curve cell per pixel.

    Pixel (x, y) lands at image row y, column x; rows render top-down.
    """
    if not 1 <= order <= FULL_ORDER:
        raise ValueError(f"order must be in [1, {FULL_ORDER}]")
    labels = labelmap.labels if hasattr(labelmap, "labels") else labelmap
    if labels.shape != (UNIVERSE_SIZE,):
        raise ValueError("label array must cover the full universe")
    palette = palette or DEFAULT_PALETTE
    lut = np.zeros((len(LEAVES), 3), dtype=np.uint8)
    for label, rgb in palette.items():
        lut[label] = rgb

    cells = aggregate_labels(labels, order)
    side = 1 << order
    image = np.empty((side, side, 3), dtype=np.uint8)
    xs = np.arange(side, dtype=np.int64)

    def paint(y0, y1):
        ys = np.arange(y0, y1, dtype=np.int64)[:, None]
        d = xy2d(order, np.broadcast_to(xs, (y1 - y0, side)), np.broadcast_to(ys, (y1 - y0, side)))
        image[y0:y1] = lut[cells[d]]

    band = max(1, side // max(threads * 4, 1))
    edges = list(range(0, side, band)) + [side]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda i: paint(edges[i], edges[i + 1]), range(len(edges) - 1)))
    else:
        for i in range(len(edges) - 1):
            paint(edges[i], edges[i + 1])
    return image


def save_ppm(path, image):
    """Binary portable pixmap (P6), byte-deterministic."""
    h, w, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def save_png(path, image):
    """Lossless compressed raster via Pillow."""
    Image.fromarray(image, "RGB").save(path, format="PNG")
