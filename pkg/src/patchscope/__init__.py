"""patchscope: exact-arithmetic searches for arithmetic patches, grid
dimension estimates, weak-tangent zooms, and number-theoretic point sets."""

from .geometry import (
    NormedSpace,
    Patch,
    Point,
    PointSet,
    Scalar,
    Similarity,
    apply_similarity,
    direction_set,
    dist_point_to_set,
    hausdorff_distance,
    patch_points,
    point,
    point_set,
    scalar,
)
from .griddim import (
    BoxReport,
    DimensionReport,
    GridSpec,
    ScalePair,
    assouad_estimate,
    best_tangent,
    box_estimate,
    cell_count,
    cell_of,
    cutting_bound,
    global_cell_count,
    power_scale_pairs,
    tangent_zoom,
)
from .patchsearch import (
    DefectReport,
    best_patch_defect,
    contains_patch_exact,
    optimal_subset_defect,
    steinhaus_defect,
)
from .pointset_io import (
    PointSetParseError,
    format_point_set,
    parse_point_set,
    read_point_set,
    write_point_set,
)

__version__ = "0.1.0"
