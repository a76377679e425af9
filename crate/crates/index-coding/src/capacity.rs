//! Membership in the code-constrained capacity region and boundary probes.
//!
//! A rate vector is supportable by time-sharing a finite action set iff
//! some probability distribution over actions serves every type at least
//! as fast as it arrives:
//!
//!   lambda_m * sum_a p(a) T(a) <= sum_a p(a) mu_m(a)   for all m.
//!
//! The decision is a pure feasibility LP over the probability simplex.
//! Sets of up to [`EXACT_ACTION_LIMIT`] actions are decided in exact
//! rational arithmetic; larger ones fall back to f64.

use std::collections::BTreeMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::actions::ActionSet;
use crate::lp::{simplex_feasible, LpScalar};

/// Largest action set decided with exact rational arithmetic.
pub const EXACT_ACTION_LIMIT: usize = 200;
/// Absolute tolerance of the boundary bisection.
pub const BISECTION_TOL: f64 = 1e-4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CapacityError {
    #[error("capacity decisions need a concrete (non-template) action set")]
    TemplateActions,
    #[error("rate vector length {got} does not match {expected} traffic types")]
    RateCount { expected: usize, got: usize },
    #[error("rates must be finite and non-negative")]
    BadRate,
    #[error("direction must be non-negative with at least one positive entry")]
    EmptyDirection,
}

/// Witness that a rate vector lies in the region: the time-sharing
/// distribution and the per-type service slack.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCertificate<S> {
    /// action id -> probability, positive entries only
    pub probabilities: BTreeMap<usize, S>,
    /// per-type residual of the service inequality (>= 0 up to tolerance)
    pub slack: Vec<S>,
}

impl<S: LpScalar> CapacityCertificate<S> {
    pub fn to_f64(&self) -> CapacityCertificate<f64> {
        CapacityCertificate {
            probabilities: self
                .probabilities
                .iter()
                .map(|(id, p)| (*id, p.to_f64()))
                .collect(),
            slack: self.slack.iter().map(|s| s.to_f64()).collect(),
        }
    }
}

/// (id, frame length, clearance) per action.
fn concrete_params(actions: &ActionSet) -> Result<Vec<(usize, usize, Vec<u32>)>, CapacityError> {
    let concrete = actions
        .concrete_actions()
        .ok_or(CapacityError::TemplateActions)?;
    Ok(concrete
        .iter()
        .map(|a| (a.id(), a.frame_len(), a.clearance().to_vec()))
        .collect())
}

/// Feasibility of a rate vector over a concrete action set, in the chosen
/// scalar arithmetic. Returns the certificate when feasible.
pub fn feasibility<S: LpScalar>(
    actions: &ActionSet,
    rates: &[S],
) -> Result<Option<CapacityCertificate<S>>, CapacityError> {
    let params = concrete_params(actions)?;
    let m = actions.num_types();
    if rates.len() != m {
        return Err(CapacityError::RateCount {
            expected: m,
            got: rates.len(),
        });
    }
    if rates.iter().any(|r| *r < S::zero()) {
        return Err(CapacityError::BadRate);
    }
    let n = params.len();
    // row m, column a: mu_m(a) - lambda_m T(a)
    let rows: Vec<Vec<S>> = (0..m)
        .map(|ty| {
            params
                .iter()
                .map(|(_, t, mu)| {
                    S::from_f64_exact(mu[ty] as f64)
                        - rates[ty].clone() * S::from_f64_exact(*t as f64)
                })
                .collect()
        })
        .collect();
    let Some(p) = simplex_feasible::<S>(&rows, n) else {
        return Ok(None);
    };
    let mut probabilities = BTreeMap::new();
    for (j, prob) in p.iter().enumerate() {
        if *prob > S::zero() {
            probabilities.insert(params[j].0, prob.clone());
        }
    }
    let slack = (0..m)
        .map(|ty| {
            rows[ty]
                .iter()
                .zip(&p)
                .map(|(c, v)| c.clone() * v.clone())
                .fold(S::zero(), |acc, x| acc + x)
        })
        .collect();
    Ok(Some(CapacityCertificate {
        probabilities,
        slack,
    }))
}

/// Decide membership of a rate vector, dispatching to exact arithmetic on
/// small action sets. The returned certificate is reported in f64 either
/// way.
pub fn in_capacity_region(
    actions: &ActionSet,
    rates: &[f64],
) -> Result<Option<CapacityCertificate<f64>>, CapacityError> {
    if rates.iter().any(|r| !r.is_finite()) {
        return Err(CapacityError::BadRate);
    }
    if actions.len() <= EXACT_ACTION_LIMIT {
        let exact: Vec<BigRational> = rates
            .iter()
            .map(|&r| BigRational::from_f64_exact(r))
            .collect();
        Ok(feasibility::<BigRational>(actions, &exact)?.map(|c| c.to_f64()))
    } else {
        feasibility::<f64>(actions, rates)
    }
}

/// Largest scale theta with theta * direction inside the region, by
/// bisection to [`BISECTION_TOL`]. Returns the last feasible scale.
pub fn max_scaled_rate(actions: &ActionSet, direction: &[f64]) -> Result<f64, CapacityError> {
    if direction.is_empty()
        || direction.iter().any(|d| !d.is_finite() || *d < 0.0)
        || direction.iter().all(|&d| d == 0.0)
    {
        return Err(CapacityError::EmptyDirection);
    }
    let scaled = |theta: f64| -> Vec<f64> { direction.iter().map(|d| d * theta).collect() };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    // grow until infeasible; clearance per slot is bounded, so this ends
    let mut grow = 0;
    while in_capacity_region(actions, &scaled(hi))?.is_some() {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 64 {
            return Ok(lo);
        }
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if in_capacity_region(actions, &scaled(mid))?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{generate_action_set, ActionSetOptions};
    use crate::workloads::three_user_broadcast;
    use num_traits::Zero;

    fn direct_only() -> ActionSet {
        generate_action_set(&three_user_broadcast(), ActionSetOptions::direct_only())
    }

    fn coded() -> ActionSet {
        generate_action_set(&three_user_broadcast(), ActionSetOptions::default())
    }

    #[test]
    fn zero_rates_are_always_feasible() {
        let cert = in_capacity_region(&direct_only(), &[0.0; 12]).unwrap().unwrap();
        let total: f64 = cert.probabilities.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(cert.slack.iter().all(|&s| s >= -1e-9));
    }

    #[test]
    fn direct_only_boundary_is_total_rate_one() {
        let set = direct_only();
        // total rate 1 - eps feasible, 1 + eps not
        let under = vec![(1.0 - 1e-6) / 12.0; 12];
        assert!(in_capacity_region(&set, &under).unwrap().is_some());
        let over = vec![(1.0 + 1e-6) / 12.0; 12];
        assert!(in_capacity_region(&set, &over).unwrap().is_none());
        // and exactly 1 is feasible: the region is closed
        let exact: Vec<BigRational> = (0..12)
            .map(|_| BigRational::new(1.into(), 12.into()))
            .collect();
        assert!(feasibility::<BigRational>(&set, &exact).unwrap().is_some());
    }

    #[test]
    fn coded_boundary_is_four_sevenths_per_user() {
        let set = coded();
        // per-user rate 4/7 splits as 1/7 per type; exactly on the boundary
        let boundary: Vec<BigRational> = (0..12)
            .map(|_| BigRational::new(1.into(), 7.into()))
            .collect();
        assert!(feasibility::<BigRational>(&set, &boundary).unwrap().is_some());
        let beyond: Vec<BigRational> = (0..12)
            .map(|_| BigRational::new(1.into(), 7.into()) + BigRational::new(1.into(), 10000.into()))
            .collect();
        assert!(feasibility::<BigRational>(&set, &beyond).unwrap().is_none());
    }

    #[test]
    fn certificate_satisfies_the_service_inequalities() {
        let set = coded();
        let rates = vec![0.55 / 4.0; 12];
        let cert = in_capacity_region(&set, &rates).unwrap().unwrap();
        let total: f64 = cert.probabilities.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
        // recompute slack from the definition
        let concrete = set.concrete_actions().unwrap();
        for ty in 0..12 {
            let mut service = 0.0;
            let mut time = 0.0;
            for a in &concrete {
                let p = cert.probabilities.get(&a.id()).copied().unwrap_or(0.0);
                service += p * a.clearance()[ty] as f64;
                time += p * a.frame_len() as f64;
            }
            assert!(service - rates[ty] * time >= -1e-9, "type {ty}");
            assert!((service - rates[ty] * time - cert.slack[ty]).abs() < 1e-9);
        }
    }

    #[test]
    fn feasibility_is_monotone() {
        let set = coded();
        let r = vec![0.5 / 4.0; 12];
        assert!(in_capacity_region(&set, &r).unwrap().is_some());
        let mut smaller = r.clone();
        for v in smaller.iter_mut() {
            *v *= 0.7;
        }
        assert!(in_capacity_region(&set, &smaller).unwrap().is_some());
    }

    #[test]
    fn template_sets_are_rejected() {
        let set = generate_action_set(
            &three_user_broadcast(),
            ActionSetOptions::default().templated(),
        );
        assert_eq!(
            in_capacity_region(&set, &[0.0; 12]).unwrap_err(),
            CapacityError::TemplateActions
        );
    }

    #[test]
    fn scaled_boundaries() {
        // uniform direction over the 12 types: uncoded boundary at total 1
        let d = vec![0.25; 12];
        let theta = max_scaled_rate(&direct_only(), &d).unwrap();
        let total = theta * 3.0; // 12 types x 0.25 direction
        assert!((total - 1.0).abs() < 1e-3, "total {total}");
        // coded boundary at 4/7 per user
        let theta = max_scaled_rate(&coded(), &d).unwrap();
        assert!((theta - 4.0 / 7.0).abs() < 2.0 * BISECTION_TOL, "theta {theta}");
        assert!(theta >= 0.57);
        // single-type direction on a direct-only set: one packet per slot
        let mut e1 = vec![0.0; 12];
        e1[0] = 1.0;
        let theta = max_scaled_rate(&direct_only(), &e1).unwrap();
        assert!((theta - 1.0).abs() < 1e-3);
        assert!(max_scaled_rate(&coded(), &[0.0; 12]).is_err());
    }

    #[test]
    fn exact_certificate_sums_to_exactly_one() {
        let set = coded();
        let rates: Vec<BigRational> = (0..12)
            .map(|_| BigRational::new(1.into(), 8.into()))
            .collect();
        let cert = feasibility::<BigRational>(&set, &rates).unwrap().unwrap();
        let total: BigRational = cert.probabilities.values().cloned().sum();
        assert_eq!(total, BigRational::new(1.into(), 1.into()));
        assert!(cert.slack.iter().all(|s| *s >= BigRational::zero()));
    }
}
