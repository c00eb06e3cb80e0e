"""Exposure data on a shared hexagonal grid.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports its public surface.
"""

from ._core import (
    Crosswalk,
    Frame,
    Grid,
    aggregate,
    aqi_label,
    attainment,
    build_crosswalk,
    ceem,
    cell_boundary,
    cell_center,
    children,
    classify_aqi,
    cluster,
    hex_distance,
    hexify_features,
    hexify_raster,
    k_ring,
    locate,
    parent,
    pca_scores,
    point_to_cell,
    population_mask,
    query_catalog,
    read_crosswalk,
    read_frame,
    register_dataset,
    render_map,
    validate_record,
    write_crosswalk,
    write_frame,
)

__all__ = [
    "Crosswalk",
    "Frame",
    "Grid",
    "aggregate",
    "aqi_label",
    "attainment",
    "build_crosswalk",
    "ceem",
    "cell_boundary",
    "cell_center",
    "children",
    "classify_aqi",
    "cluster",
    "hex_distance",
    "hexify_features",
    "hexify_raster",
    "k_ring",
    "locate",
    "parent",
    "pca_scores",
    "point_to_cell",
    "population_mask",
    "query_catalog",
    "read_crosswalk",
    "read_frame",
    "register_dataset",
    "render_map",
    "validate_record",
    "write_crosswalk",
    "write_frame",
]

__version__ = "0.1.0"
