"""Census analytics: coverage, per-group breakdowns, overestimation error,
indicator correlation, and growth curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmap import FULL_WINDOW, LEAVES, TaxonomyLabel
from .errors import ZeroVariance
from .hilbert import render as render_hilbert  # noqa: F401  (part of this module's surface)
from .mapping import code_cc

# --- coverage -----------------------------------------------------------------


@dataclass
class CoverageBin:
    """One 2%-wide bin over the baseline source's intra-AS coverage."""

    lo: float
    hi: float
    n_ases: int
    baseline_min: float
    combined_min: float
    combined_q1: float
    combined_median: float
    combined_q3: float
    combined_max: float

    def to_dict(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "n_ases": self.n_ases,
            "baseline_min": self.baseline_min,
            "combined_min": self.combined_min,
            "combined_q1": self.combined_q1,
            "combined_median": self.combined_median,
            "combined_q3": self.combined_q3,
            "combined_max": self.combined_max,
        }


@dataclass
class CoverageReport:
    used_count: int
    routed_count: int
    global_coverage: float
    as_used: int
    as_total: int
    as_level_coverage: float
    intra_as: dict  # asn -> (used, routed)
    bins: list
    ases_without_routed: int

    def to_dict(self):
        return {
            "used_count": self.used_count,
            "routed_count": self.routed_count,
            "global_coverage": self.global_coverage,
            "as_used": self.as_used,
            "as_total": self.as_total,
            "as_level_coverage": self.as_level_coverage,
            "ases_without_routed": self.ases_without_routed,
            "bins": [b.to_dict() for b in self.bins],
        }


def _index_quartiles(values):
    """Min, quartiles, and max by sorted-index selection (no interpolation)."""
    v = sorted(values)
    k = len(v)
    return v[0], v[(k - 1) // 4], v[(k - 1) // 2], v[3 * (k - 1) // 4], v[-1]


def coverage(used, routed, as_map, baseline, bin_width=0.02):
    """Global, AS-level, and intra-AS coverage.

    Global coverage is used/routed (counts kept exact).  AS-level coverage
    divides ASes with at least one used block by all ASes in the mapping.
    Intra-AS coverage is computed per AS with routed blocks; ASes without
    any routed block are excluded and counted.  ASes are then binned by the
    baseline source's intra-AS coverage, reporting the bin's baseline
    minimum and index quartiles of the combined coverage.
    """
    resolved = as_map.resolved()
    asn = as_map.asn

    def per_as(mask):
        uniq, cnt = np.unique(asn[resolved & mask], return_counts=True)
        return dict(zip(uniq.tolist(), cnt.tolist()))

    routed_per = per_as(routed.mask)
    used_per = per_as(used.mask)
    baseline_set = baseline.blocks if hasattr(baseline, "source_id") else baseline
    baseline_per = per_as(baseline_set.mask)

    all_ases = int(np.unique(asn[resolved]).size)
    intra = {a: (used_per.get(a, 0), r) for a, r in routed_per.items()}
    as_used = sum(1 for u, _ in intra.values() if u > 0)

    n_bins = max(1, round(1.0 / bin_width))
    grouped = {}
    for a, (u, r) in intra.items():
        base_cov = baseline_per.get(a, 0) / r
        idx = min(int(base_cov / bin_width), n_bins - 1)
        grouped.setdefault(idx, []).append((base_cov, u / r))
    bins = []
    for idx in sorted(grouped):
        pairs = grouped[idx]
        mn, q1, med, q3, mx = _index_quartiles([c for _, c in pairs])
        bins.append(
            CoverageBin(
                lo=idx * bin_width,
                hi=(idx + 1) * bin_width,
                n_ases=len(pairs),
                baseline_min=min(b for b, _ in pairs),
                combined_min=mn,
                combined_q1=q1,
                combined_median=med,
                combined_q3=q3,
                combined_max=mx,
            )
        )

    used_count = len(used)
    routed_count = len(routed)
    return CoverageReport(
        used_count=used_count,
        routed_count=routed_count,
        global_coverage=used_count / routed_count if routed_count else 0.0,
        as_used=as_used,
        as_total=all_ases,
        as_level_coverage=as_used / all_ases if all_ases else 0.0,
        intra_as=intra,
        bins=bins,
        ases_without_routed=all_ases - len(intra),
    )


# --- breakdowns ---------------------------------------------------------------

GROUPINGS = ("rir_or_legacy", "country", "continent", "asn")


@dataclass
class BreakdownTable:
    """Per-group counts of each taxonomy leaf."""

    grouping: str
    rows: dict  # group key -> {TaxonomyLabel: count}
    excluded_blocks: int  # blocks without a group (unmapped or excluded)

    def group_total(self, group):
        return sum(self.rows[group].values())

    def percentages(self, group):
        total = self.group_total(group)
        return {label: (count / total if total else 0.0) for label, count in self.rows[group].items()}

    def top(self, label, n):
        """Top-n groups by one leaf, with each group's share of that leaf's total."""
        label_total = sum(row[label] for row in self.rows.values())
        ranked = sorted(self.rows.items(), key=lambda kv: (-kv[1][label], str(kv[0])))
        return [
            (group, row[label], row[label] / label_total if label_total else 0.0)
            for group, row in ranked[:n]
        ]

    def unused_of_assigned(self, group):
        """Share of a group's assigned space that sits unused: both the
        routed-unused and the unrouted-assigned leaves count as unused."""
        row = self.rows[group]
        assigned = (row[TaxonomyLabel.USED] + row[TaxonomyLabel.ROUTED_UNUSED]
                    + row[TaxonomyLabel.UNROUTED_ASSIGNED])
        unused = row[TaxonomyLabel.ROUTED_UNUSED] + row[TaxonomyLabel.UNROUTED_ASSIGNED]
        return unused / assigned if assigned else 0.0

    def to_dict(self):
        return {
            "grouping": self.grouping,
            "excluded_blocks": self.excluded_blocks,
            "rows": {
                str(group): {label.name.lower(): count for label, count in row.items()}
                for group, row in self.rows.items()
            },
        }


def _group_rows(labels, group_codes, window):
    """Count (group, leaf) pairs over the window; negative group codes are excluded."""
    lo, hi = window
    seg_labels = labels[lo:hi].astype(np.int64)
    seg_groups = group_codes[lo:hi].astype(np.int64)
    ok = seg_groups >= 0
    excluded = int(np.count_nonzero(~ok))
    combined = seg_groups[ok] * len(LEAVES) + seg_labels[ok]
    uniq, cnt = np.unique(combined, return_counts=True)
    rows = {}
    for value, count in zip(uniq.tolist(), cnt.tolist()):
        group, label = divmod(value, len(LEAVES))
        rows.setdefault(group, {label_: 0 for label_ in LEAVES})[TaxonomyLabel(label)] = count
    return rows, excluded


def breakdown(labelmap, grouping, registry=None, geo=None, as_map=None,
              continents=None, window=None):
    """Leaf counts per group for one of: rir_or_legacy, country, continent, asn.

    rir_or_legacy groups by the registry's per-/8 administrative tag;
    country and continent need the geo mapping (continent additionally a
    cc->continent table); asn needs the AS mapping.  Blocks excluded from
    the relevant mapping are left out and counted.
    """
    window = window or FULL_WINDOW
    labels = labelmap.labels if hasattr(labelmap, "labels") else labelmap
    if grouping == "rir_or_legacy":
        tag_names = sorted(set(registry.slash8_tags))
        tag_index = {name: i for i, name in enumerate(tag_names)}
        per_slash8 = np.array([tag_index[t] for t in registry.slash8_tags], dtype=np.int32)
        lo, hi = window
        codes = np.full(labels.shape, -1, dtype=np.int32)
        codes[lo:hi] = per_slash8[np.arange(lo, hi) >> 16]
        rows, excluded = _group_rows(labels, codes, window)
        rows = {tag_names[group]: row for group, row in rows.items()}
    elif grouping == "country":
        rows, excluded = _group_rows(labels, geo.codes, window)
        rows = {code_cc(group): row for group, row in rows.items()}
    elif grouping == "continent":
        continent_names = sorted(set(continents.values()))
        cont_index = {name: i for i, name in enumerate(continent_names)}
        codes = np.full(labels.shape, -1, dtype=np.int32)
        geo_codes = geo.codes
        for cc, continent in continents.items():
            from .mapping import cc_code

            codes[geo_codes == cc_code(cc)] = cont_index[continent]
        rows, excluded = _group_rows(labels, codes, window)
        rows = {continent_names[group]: row for group, row in rows.items()}
    elif grouping == "asn":
        rows, excluded = _group_rows(labels, as_map.asn, window)
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    return BreakdownTable(grouping=grouping, rows=rows, excluded_blocks=excluded)


# --- overestimation error -------------------------------------------------------


@dataclass
class GroupError:
    group: object
    routed: int
    used: int
    error: float  # (routed - used) / routed, in [0, 1]

    def to_dict(self):
        return {"group": self.group, "routed": self.routed, "used": self.used, "error": self.error}


def overestimation_error(group_codes, used, routed, window=None):
    """Per-group error of using routed space as a proxy for used space.

    error = (routed - used) / routed.  Groups without routed blocks in the
    window are skipped (the ratio is undefined for them).
    """
    lo, hi = window or FULL_WINDOW
    codes = group_codes[lo:hi].astype(np.int64)
    ok = codes >= 0
    routed_seg = routed.mask[lo:hi] & ok
    used_seg = used.mask[lo:hi] & ok

    uniq, routed_cnt = np.unique(codes[routed_seg], return_counts=True)
    used_per = dict(zip(*[arr.tolist() for arr in np.unique(codes[used_seg], return_counts=True)]))
    out = []
    for group, r in zip(uniq.tolist(), routed_cnt.tolist()):
        u = used_per.get(group, 0)
        out.append(GroupError(group=group, routed=r, used=u, error=(r - u) / r))
    return out


def as_error_bins(errors):
    """Median error per power-of-two bin of routed-/24 count."""
    bins = {}
    for err in errors:
        bins.setdefault(int(err.routed).bit_length() - 1, []).append(err.error)
    out = []
    for exp in sorted(bins):
        values = sorted(bins[exp])
        out.append({
            "min_routed": 1 << exp,
            "n_groups": len(values),
            "median_error": values[(len(values) - 1) // 2],
        })
    return out


# --- indicator correlation ------------------------------------------------------


@dataclass
class CorrelationResult:
    r: float
    n: int
    excluded: int


def indicator_correlation(per_country_used, indicator):
    """Pearson correlation between per-country used counts and an indicator.

    Countries missing either value are excluded and counted.  Raises
    ZeroVariance when either vector is constant.
    """
    common = sorted(set(per_country_used) & set(indicator))
    excluded = len(set(per_country_used) | set(indicator)) - len(common)
    if len(common) < 2:
        raise ValueError("need at least two countries with both values")
    x = np.array([float(per_country_used[cc]) for cc in common])
    y = np.array([float(indicator[cc]) for cc in common])
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0.0:
        raise ZeroVariance("correlation undefined: an input vector is constant")
    return CorrelationResult(r=float((xc * yc).sum() / denom), n=len(common), excluded=excluded)


# --- growth curves ----------------------------------------------------------------


@dataclass
class GrowthCurve:
    window_seconds: float
    window_starts: np.ndarray
    per_window: np.ndarray  # distinct blocks per window
    cumulative: np.ndarray  # distinct blocks seen up to each window's end
    relative_std: float  # population std of per-window counts over their mean

    def to_rows(self):
        return [
            (float(t), int(w), int(c))
            for t, w, c in zip(self.window_starts, self.per_window, self.cumulative)
        ]


def growth_curve(observations, window_seconds):
    """Distinct-/24 growth over (timestamp, block) observations.

    Windows tile absolute time at the given width; empty interior windows
    still appear.  The relative std over per-window counts flags unstable
    vantage points.
    """
    if window_seconds <= 0:
        raise ValueError("window must be positive")
    pairs = sorted(observations)
    if not pairs:
        return GrowthCurve(window_seconds, np.array([]), np.array([], dtype=np.int64),
                           np.array([], dtype=np.int64), 0.0)
    first = int(pairs[0][0] // window_seconds)
    last = int(pairs[-1][0] // window_seconds)
    n = last - first + 1
    per_window_sets = [set() for _ in range(n)]
    seen = set()
    cumulative = np.zeros(n, dtype=np.int64)
    for ts, block in pairs:
        idx = int(ts // window_seconds) - first
        per_window_sets[idx].add(block)
        seen.add(block)
        cumulative[idx] = len(seen)
    # carry the running total through empty windows
    for i in range(1, n):
        cumulative[i] = max(cumulative[i], cumulative[i - 1])
    per_window = np.array([len(s) for s in per_window_sets], dtype=np.int64)
    mean = per_window.mean()
    rel_std = float(per_window.std() / mean) if mean > 0 else 0.0
    starts = (np.arange(first, last + 1, dtype=np.float64)) * window_seconds
    return GrowthCurve(window_seconds, starts, per_window, cumulative, rel_std)
