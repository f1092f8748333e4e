//! Dynamic-regret accounting against the round-wise comparator.

use serde::Serialize;

use crate::error::{Error, Result};

/// One round of a regret trace. `t` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRecord {
    pub t: usize,
    pub stage_cost: f64,
    pub comparator_stage_cost: f64,
    pub cumulative_regret: f64,
    pub eta: f64,
    pub certificate: f64,
    pub grad_norm_g: f64,
    /// Spectral radius of `A + BK_t` for the applied gain.
    pub closed_loop_radius: f64,
    /// `d̂(K_t, K*_t)`.
    pub surrogate_dist: f64,
}

/// `Σ_{τ≤t} (alg_τ − comparator_τ)` for every `t`.
pub fn cumulative_regret(alg: &[f64], comparator: &[f64]) -> Result<Vec<f64>> {
    if alg.len() != comparator.len() {
        return Err(Error::LengthMismatch {
            left: alg.len(),
            right: comparator.len(),
        });
    }
    let mut acc = 0.0;
    Ok(alg
        .iter()
        .zip(comparator)
        .map(|(a, c)| {
            acc += a - c;
            acc
        })
        .collect())
}

/// Per-round diagnostics attached to a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RoundDiagnostics {
    pub eta: f64,
    pub certificate: f64,
    pub grad_norm_g: f64,
    pub closed_loop_radius: f64,
    pub surrogate_dist: f64,
}

/// Builds the full trace from stage costs and per-round diagnostics.
///
/// Works for realized (per-seed) and expected (recursion) costs alike.
pub fn compute_regret(alg: &[f64], comparator: &[f64], diagnostics: &[RoundDiagnostics]) -> Result<Vec<RegretRecord>> {
    let cumulative = cumulative_regret(alg, comparator)?;
    if diagnostics.len() != alg.len() {
        return Err(Error::LengthMismatch {
            left: alg.len(),
            right: diagnostics.len(),
        });
    }
    Ok((0..alg.len())
        .map(|i| {
            let d = diagnostics[i];
            RegretRecord {
                t: i + 1,
                stage_cost: alg[i],
                comparator_stage_cost: comparator[i],
                cumulative_regret: cumulative[i],
                eta: d.eta,
                certificate: d.certificate,
                grad_norm_g: d.grad_norm_g,
                closed_loop_radius: d.closed_loop_radius,
                surrogate_dist: d.surrogate_dist,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_traces_have_zero_regret() {
        let c = [1.0, 2.5, 0.3];
        assert_eq!(cumulative_regret(&c, &c).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn sums_differences() {
        let r = cumulative_regret(&[2.0, 3.0, 1.0], &[1.0, 1.0, 1.5]).unwrap();
        assert_eq!(r, vec![1.0, 3.0, 2.5]);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            cumulative_regret(&[1.0], &[]),
            Err(Error::LengthMismatch { left: 1, right: 0 })
        ));
        let d = [RoundDiagnostics::default()];
        assert!(compute_regret(&[1.0, 2.0], &[1.0, 2.0], &d).is_err());
    }
}
