//! Partial primal-dual gap, its theoretical certificate, and scalar metrics
//! (PSNR, classification accuracy, empirical convergence rates).

mod gap;
mod metrics;
mod monitor;

pub use gap::{
    certificate_bound, certificate_check, partial_gap, q_value, CertificateEntry,
    CertificateReport, GapEstimate, GapSpec,
};
pub use metrics::{accuracy, fit_rate, psnr, RateFit};
pub use monitor::DiagnosticMonitor;
