import numpy as np

from confsets.dataprep import MaskRaster, tile_grid

CLASS_NAMES_18 = {0: "soil", **{i: f"plant_{i}" for i in range(1, 18)}}


def checker_raster(source="img0", h=1144, w=1600, names=None, soil_id=0):
    """Mask whose 224-tiles alternate pure-soil and mixed soil/plant."""
    labels = np.zeros((h, w), dtype=np.int64)
    for j, (x, y) in enumerate(tile_grid(h, w, 224)):
        if j % 2 == 1:
            cid = 1 + (j % 5)
            labels[y:y + 100, x:x + 100] = cid
    return MaskRaster(source_id=source, labels=labels,
                      class_names=names or CLASS_NAMES_18, soil_id=soil_id)
