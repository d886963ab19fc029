//! Element-level numerical integration for first-order tetrahedra and
//! prisms, with loop-order variants, batch layouts, traffic counters and a
//! roofline cost model.

#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod layout;
pub mod mesh;
pub mod oracle;
pub mod perfmodel;
pub mod refelem;
pub mod report;
pub mod verify;

pub use error::{Error, GeometryError, Result};
pub use geometry::ElementGeometry;
pub use kernels::{
    integrate_batch, integrate_element, BatchResult, CoefficientSet, ElementMatrix, Executor, GeometryPath,
    KernelDescriptor, ProblemClass, Variant,
};
pub use layout::{BatchLayout, ElementBatch, Scheme};
pub use perfmodel::ProcessorProfile;
pub use refelem::ElementType;
