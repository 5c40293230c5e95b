"""Turn dense label masks into a tiled classification dataset.

Each mask is cut into a grid of non-overlapping square tiles (leftover
margins discarded), every tile gets one class label from its pixel
histogram, and the resulting manifest can be rebalanced by undersampling a
class or dropping classes outright.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

# label rule scopes: does the background class compete in the majority vote
# on mixed tiles, or is it reserved for pure-background tiles only?
SCOPES = ("all", "non_soil")


@dataclass(frozen=True)
class MaskRaster:
    """A single-channel class-id raster with its class-name table."""

    source_id: str
    labels: np.ndarray  # (height, width) integer class ids
    class_names: dict  # id -> name
    soil_id: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError(f"{self.source_id}: labels must be 2-d, got {labels.ndim}-d")
        present = set(np.unique(labels).tolist())
        unknown = present - set(self.class_names)
        if unknown:
            raise ValueError(f"{self.source_id}: label ids {sorted(unknown)} missing from class table")
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class TileRecord:
    """One tile cut from a raster, with its label decision and evidence."""

    source_id: str
    x_offset: int
    y_offset: int
    tile_size: int
    assigned_label: int
    pixel_counts: dict  # class id -> pixel count within the tile


@dataclass(frozen=True)
class DatasetManifest:
    """Tile records plus provenance of the rules that produced them."""

    tiles: tuple
    class_names: dict
    soil_id: int
    tile_size: int
    rule_scope: str
    seed: int | None = None
    notes: tuple = ()

    def class_counts(self) -> dict:
        counts = {cid: 0 for cid in self.class_names}
        for t in self.tiles:
            counts[t.assigned_label] += 1
        return counts


def tile_grid(height: int, width: int, tile_size: int):
    """Row-major offsets of all full tiles; margins are discarded."""
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    xs = range(0, (width // tile_size) * tile_size, tile_size)
    ys = range(0, (height // tile_size) * tile_size, tile_size)
    return [(x, y) for y in ys for x in xs]


def assign_label(pixel_counts: dict, soil_id: int, rule_scope: str = "non_soil") -> int:
    """Label a tile from its pixel histogram.

    Pure-soil tiles are labeled soil. Otherwise the majority class wins;
    with scope 'non_soil' the soil pixels sit out the vote. Ties break by
    ascending class id.
    """
    if rule_scope not in SCOPES:
        raise ValueError(f"rule_scope must be one of {SCOPES}")
    counts = {int(c): int(n) for c, n in pixel_counts.items() if n > 0}
    if not counts or sum(counts.values()) <= 0:
        raise ValueError("empty pixel histogram")
    if set(counts) == {soil_id}:
        return soil_id
    if rule_scope == "non_soil":
        counts.pop(soil_id, None)
    return min(counts, key=lambda c: (-counts[c], c))


def tile_raster(raster: MaskRaster, tile_size: int, rule_scope: str = "non_soil"):
    """Cut one raster into labeled TileRecords."""
    h, w = raster.labels.shape
    n_ids = max(raster.class_names) + 1
    records = []
    for x, y in tile_grid(h, w, tile_size):
        window = raster.labels[y:y + tile_size, x:x + tile_size]
        hist = np.bincount(window.ravel(), minlength=n_ids)
        counts = {cid: int(hist[cid]) for cid in raster.class_names if hist[cid] > 0}
        label = assign_label(counts, raster.soil_id, rule_scope)
        records.append(TileRecord(source_id=raster.source_id, x_offset=x, y_offset=y,
                                  tile_size=tile_size, assigned_label=label,
                                  pixel_counts=counts))
    return records


def build_manifest(rasters, tile_size: int, rule_scope: str = "non_soil",
                   seed: int | None = None) -> DatasetManifest:
    """Tile every raster (in the given order) into one manifest."""
    if not rasters:
        raise ValueError("no rasters given")
    first = rasters[0]
    tiles = []
    for r in rasters:
        if r.class_names != first.class_names or r.soil_id != first.soil_id:
            raise ValueError(f"{r.source_id}: class table differs from {first.source_id}")
        tiles.extend(tile_raster(r, tile_size, rule_scope))
    return DatasetManifest(tiles=tuple(tiles), class_names=dict(first.class_names),
                           soil_id=first.soil_id, tile_size=tile_size,
                           rule_scope=rule_scope, seed=seed)


def undersample(manifest: DatasetManifest, class_id: int, target: int,
                seed: int) -> DatasetManifest:
    """Keep a uniform random subset of one class; other classes untouched."""
    if class_id not in manifest.class_names:
        raise ValueError(f"unknown class id {class_id}")
    idx = [i for i, t in enumerate(manifest.tiles) if t.assigned_label == class_id]
    if target > len(idx):
        raise ValueError(f"target {target} exceeds class {class_id} count {len(idx)}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    keep = set(rng.choice(np.asarray(idx), size=target, replace=False).tolist())
    tiles = tuple(t for i, t in enumerate(manifest.tiles)
                  if t.assigned_label != class_id or i in keep)
    note = f"undersample:{class_id}->{target}"
    return replace(manifest, tiles=tiles, seed=seed, notes=manifest.notes + (note,))


def drop_classes(manifest: DatasetManifest, class_ids) -> DatasetManifest:
    """Remove all tiles of the given classes and shrink the class table."""
    class_ids = set(int(c) for c in class_ids)
    unknown = class_ids - set(manifest.class_names)
    if unknown:
        raise ValueError(f"unknown class ids {sorted(unknown)}")
    if not class_ids:
        return manifest
    tiles = tuple(t for t in manifest.tiles if t.assigned_label not in class_ids)
    names = {c: n for c, n in manifest.class_names.items() if c not in class_ids}
    if len(names) == 1:
        warnings.warn("manifest reduced to a single class", stacklevel=2)
    note = "drop:" + ",".join(str(c) for c in sorted(class_ids))
    return replace(manifest, tiles=tiles, class_names=names,
                   notes=manifest.notes + (note,))


def write_manifest(manifest: DatasetManifest, path, header_lines=()) -> None:
    """Write the manifest as a delimited table with per-tile histograms."""
    ids = sorted(manifest.class_names)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# tile_size={manifest.tile_size} rule_scope={manifest.rule_scope} "
                 f"soil_id={manifest.soil_id} seed={manifest.seed} "
                 f"notes={';'.join(manifest.notes)}\n")
        fh.write("# classes=" + ",".join(f"{c}:{manifest.class_names[c]}" for c in ids) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "x_offset", "y_offset", "label"]
                        + [f"px_{c}" for c in ids])
        for t in manifest.tiles:
            writer.writerow([t.source_id, t.x_offset, t.y_offset, t.assigned_label]
                            + [t.pixel_counts.get(c, 0) for c in ids])


def write_class_summary(manifest: DatasetManifest, path, header_lines=()) -> None:
    """Write per-class tile totals (the bar-chart data)."""
    counts = manifest.class_counts()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class_id", "class_name", "n_tiles"])
        for cid in sorted(counts):
            writer.writerow([cid, manifest.class_names[cid], counts[cid]])
