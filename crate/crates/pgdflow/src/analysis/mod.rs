//! Accuracy measures of separated solutions against full-order references,
//! separated drag response surfaces and comparison reports.

pub mod errors;
pub mod report;
pub mod surface;

pub use errors::{
    errors_vs_modes, multidim_l2_error, relative_field_error, squared_norms, FieldErrors, ParamQuadrature,
    ReferenceCache,
};
pub use report::{
    comparison_report, report_summary, write_comparison, write_drag_surface, write_error_map, write_errors_vs_modes,
    write_matched_accuracy, write_pointwise_error, write_summary, Comparison, ComparisonRow, ErrorReport, Evaluator,
    MatchedAccuracy, DRAG_TARGETS,
};
pub use surface::{
    drag_errors, drag_errors_vs_modes, drag_l2_error, drag_response_surface, reference_drag, surface_drag, DragErrors,
    ElementError, PointError, ResponseSurface,
};
