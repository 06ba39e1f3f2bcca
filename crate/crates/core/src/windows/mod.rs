//! Lattice windows: disks, Λ-rectangles, their certificates and counts.

mod counting;
mod disk;
mod rect;

pub use counting::{convex_count_error, lens_area, lens_count, ConvexRegion, CountReport};
pub use disk::{
    build_disk_window, certify_inner_regular, disk_window_by_bound, inner_core, reduced_bounding_sides,
    verify_diffset_covering, verify_inner_regular_pairs, CoveringReport, DiskWindow, InnerCore, InnerRegularCert,
    PairCountReport, DEFAULT_BUDGET_BYTES,
};
pub use rect::{
    extract_square_window, find_heavy_shifts, gap_hull, rect_energy_exact, rect_rep_count, GapHull, HeavyShifts,
    LambdaRectangle, SquareWindow,
};
