//! Optimal transport between histograms: exact earth mover's distance,
//! entropically smoothed Sinkhorn distances and related baselines.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod alpha;
pub mod emd;
pub mod error;
pub mod histogram;
pub mod kernels;
pub mod linalg;
pub mod metric;
pub mod sinkhorn;
pub mod transport;

pub use alpha::{sinkhorn_alpha, AlphaConfig, AlphaSolveReport, Boundary};
pub use emd::{solve_emd, EmdSolution};
pub use error::{Error, Result};
pub use histogram::Histogram;
pub use linalg::Matrix;
pub use metric::CostMatrix;
pub use sinkhorn::{sinkhorn_batch, sinkhorn_divergence, SinkhornConfig, SinkhornResult, StopRule};
pub use transport::{AlphaBall, TransportPlan};
