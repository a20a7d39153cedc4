//! Planar geometry kernel for shapes bounded by circular arcs and segments.

mod circle;
mod clip;
mod point;
mod segment;
mod shape;

pub use circle::{circle_boundary_trace, disk_intersection_area, AngularInterval, CircleTrace};
pub use clip::{
    disk_intersection_area_generic, disk_shape, polygon_intersection_area, polygonize,
    refined_intersection_area, symmetric_difference_area, RefinedArea, DEFAULT_SAGITTA,
};
pub use point::{BBox, Point, Vector};
pub use segment::ArcSegment;
pub use shape::{ArcShape, CurvatureRun, Location};
