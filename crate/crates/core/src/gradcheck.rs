//! Central finite-difference check of analytic parameter gradients.

use crate::model::ModelParams;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Coordinates whose ±h perturbation crossed a non-smooth point.
    pub skipped: usize,
    pub max_rel_err: f64,
    pub failures: Vec<(usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }
}

/// Compares `analytic` against `(f(θ+h e_i) − f(θ−h e_i)) / 2h` on every coordinate in
/// `coords`. `pattern` identifies the smooth piece of `f`; coordinates whose
/// perturbations change it are skipped.
pub fn check<F, P>(params: &ModelParams, analytic: &[f64], coords: &[usize], f: F, pattern: P) -> GradCheckReport
where
    F: Fn(&ModelParams) -> f64,
    P: Fn(&ModelParams) -> Vec<bool>,
{
    let base = pattern(params);
    let mut p = params.clone();
    let mut report = GradCheckReport { checked: 0, skipped: 0, max_rel_err: 0.0, failures: Vec::new() };
    for &i in coords {
        let orig = p.as_slice()[i];
        p.as_mut_slice()[i] = orig + FD_STEP;
        let (fp, pp) = (f(&p), pattern(&p));
        p.as_mut_slice()[i] = orig - FD_STEP;
        let (fm, pm) = (f(&p), pattern(&p));
        p.as_mut_slice()[i] = orig;
        if pp != base || pm != base {
            report.skipped += 1;
            continue;
        }
        let fd = (fp - fm) / (2.0 * FD_STEP);
        let g = analytic[i];
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(FD_REL_TOL);
        report.checked += 1;
        report.max_rel_err = report.max_rel_err.max(rel);
        if rel > FD_REL_TOL {
            report.failures.push((i, g, fd));
        }
    }
    report
}
