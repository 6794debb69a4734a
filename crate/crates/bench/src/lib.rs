//! Shared fixtures for the benchmarks.

use fractal_renorm::relations::RhoOptions;
use fractal_renorm::renorm;
use fractal_renorm::{parse_ratio, AngleContext, HarmonicStructure, MsStructure, SolveOptions};

/// Contexts exercised by the benchmarks, smallest first.
pub const CONTEXTS: [(u64, u64, &str); 3] = [(2, 1, "1/12"), (2, 3, "1/10"), (3, 2, "2/15")];

pub fn structure(n: u64, m: u64, theta: &str) -> MsStructure {
    let ctx = AngleContext::new(n, m, parse_ratio(theta).expect("valid ratio")).expect("valid context");
    MsStructure::build(ctx, false).expect("valid structure")
}

pub fn solved(s: &MsStructure) -> HarmonicStructure {
    renorm::solve_eigenform(s, &SolveOptions::default()).expect("converges")
}

/// A cheap search configuration so one iteration stays in the millisecond range.
pub fn quick_search() -> RhoOptions {
    RhoOptions { restarts: 1, max_evals: 400, ..RhoOptions::default() }
}
