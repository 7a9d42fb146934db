pub mod exact;
pub mod pl_line;
pub mod sweep;
pub mod circle;
pub mod theory;
pub mod scan;
pub mod graph;
pub mod plane;
pub mod datasets;
pub mod svg;
pub mod cli;
