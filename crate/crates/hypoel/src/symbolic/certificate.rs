//! Bracket generations and the pointwise spanning certificate.
//!
//! Starting from a family of first-order operators, generation `n+1` adds
//! every bracket of an original field with a member of generation `n`. The
//! certificate checks, at each point of a sample grid, that the coefficient
//! vectors of some generation span all spatial directions; the first level
//! that does so is `n0`, and the per-step regularity gain is `eta = 2^-n0`.
//!
//! Spanning is decided by a relative singular-value test on the member
//! coefficient matrix, which is exact on fine grids for the
//! trigonometric-polynomial coefficient families this crate targets.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;

use super::expr::Expr;
use super::operator::{lie_bracket, FirstOrderOperator, SymbolicError};

/// One level of the bracket hierarchy. Members are deduplicated under
/// canonical simplification with sign canonicalization, and the zero
/// operator is removed. Levels are cumulative: every member of level `n`
/// is a member of level `n+1`.
#[derive(Clone, Debug)]
pub struct Generation {
    level: usize,
    members: Vec<FirstOrderOperator>,
}

impl Generation {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn members(&self) -> &[FirstOrderOperator] {
        &self.members
    }
}

/// Build generations `0..=n_max`. Level 0 holds the (deduplicated, nonzero)
/// input fields; level `n+1` adds all brackets `[L_k, V]` of original fields
/// with level-`n` members.
pub fn build_generations(
    fields: &[FirstOrderOperator],
    n_max: usize,
) -> Result<Vec<Generation>, SymbolicError> {
    if fields.is_empty() {
        return Err(SymbolicError::EmptyFamily);
    }
    let dim = fields[0].dim();
    for f in fields {
        if f.dim() != dim {
            return Err(SymbolicError::DimensionMismatch {
                left: dim,
                right: f.dim(),
            });
        }
    }

    let mut members: Vec<FirstOrderOperator> = Vec::new();
    let mut seen: BTreeSet<Vec<Expr>> = BTreeSet::new();
    let push_unique = |ops: &mut Vec<FirstOrderOperator>,
                       seen: &mut BTreeSet<Vec<Expr>>,
                       op: FirstOrderOperator| {
        if op.is_zero() {
            return;
        }
        let canon = op.sign_canonical();
        if seen.insert(canon.coeffs().to_vec()) {
            ops.push(canon);
        }
    };

    for f in fields {
        push_unique(&mut members, &mut seen, f.clone());
    }
    let mut out = vec![Generation {
        level: 0,
        members: members.clone(),
    }];

    let base = members.clone();
    let mut frontier = members.clone();
    for level in 1..=n_max {
        let mut fresh = Vec::new();
        for v in &frontier {
            for l in &base {
                let br = lie_bracket(l, v)?;
                let before = seen.len();
                push_unique(&mut members, &mut seen, br);
                if seen.len() > before {
                    fresh.push(members.last().unwrap().clone());
                }
            }
        }
        out.push(Generation {
            level,
            members: members.clone(),
        });
        if fresh.is_empty() {
            // The hierarchy has stabilized; higher levels repeat this one.
            for l in (level + 1)..=n_max {
                out.push(Generation {
                    level: l,
                    members: members.clone(),
                });
            }
            break;
        }
        frontier = fresh;
    }
    Ok(out)
}

/// Spanning witness at a single sample point: the singular values of the
/// member coefficient matrix and the relative gap used by the rank test.
#[derive(Clone, Debug, Serialize)]
pub struct PointWitness {
    pub point: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// `sigma_d / sigma_1`, zero when fewer than `d` nonzero directions.
    pub relative_sv: f64,
}

/// A successful spanning certificate.
#[derive(Clone, Debug)]
pub struct HormanderCertificate {
    pub n0: usize,
    /// Exactly `2^-n0`.
    pub eta: f64,
    pub tolerance: f64,
    pub generations: Vec<Generation>,
    /// One witness per sample point, for the certified level `n0`.
    pub witnesses: Vec<PointWitness>,
    /// Index into `witnesses` of the point with the smallest relative gap.
    pub worst: usize,
}

impl HormanderCertificate {
    pub fn worst_point(&self) -> &PointWitness {
        &self.witnesses[self.worst]
    }

    pub fn min_relative_sv(&self) -> f64 {
        self.witnesses[self.worst].relative_sv
    }
}

/// Diagnostics when no level up to `n_max` spans everywhere.
#[derive(Clone, Debug)]
pub struct NotSatisfied {
    pub levels_checked: usize,
    /// Worst point at the deepest level checked.
    pub worst_point: Vec<f64>,
    /// Rank achieved there (number of singular values above the threshold).
    pub rank_achieved: usize,
    pub min_relative_sv: f64,
}

/// Outcome of the certificate check. Failure is a value, not an error.
#[derive(Clone, Debug)]
pub enum CertificateOutcome {
    Satisfied(HormanderCertificate),
    NotSatisfied(NotSatisfied),
}

impl CertificateOutcome {
    pub fn certificate(&self) -> Option<&HormanderCertificate> {
        match self {
            CertificateOutcome::Satisfied(c) => Some(c),
            CertificateOutcome::NotSatisfied(_) => None,
        }
    }
}

/// `2^-n0`, exact in floating point for every representable level.
pub fn eta_for_level(n0: usize) -> f64 {
    2f64.powi(-(n0 as i32))
}

/// Check the spanning condition with coefficients frozen at time zero.
/// See [`check_hormander_at`].
pub fn check_hormander(
    fields: &[FirstOrderOperator],
    sample_points: &[Vec<f64>],
    tol: f64,
    n_max: usize,
) -> Result<CertificateOutcome, SymbolicError> {
    check_hormander_at(fields, sample_points, tol, n_max, 0.0)
}

/// Check the spanning condition at time `t`: find the minimal level `n0 <=
/// n_max` whose generation has full-rank coefficient vectors at every sample
/// point, using the relative singular-value threshold `tol`.
pub fn check_hormander_at(
    fields: &[FirstOrderOperator],
    sample_points: &[Vec<f64>],
    tol: f64,
    n_max: usize,
    t: f64,
) -> Result<CertificateOutcome, SymbolicError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(SymbolicError::BadTolerance { tol });
    }
    if sample_points.is_empty() {
        return Err(SymbolicError::EmptySampleGrid);
    }
    let generations = build_generations(fields, n_max)?;
    let dim = fields[0].dim();
    for p in sample_points {
        if p.len() != dim {
            return Err(SymbolicError::BadSamplePoint {
                got: p.len(),
                expected: dim,
            });
        }
    }

    let mut last_witnesses: Vec<PointWitness> = Vec::new();
    for gen in &generations {
        // Compile coefficient evaluators once per level.
        let evals: Vec<Vec<crate::symbolic::Evaluator>> = gen
            .members()
            .iter()
            .map(|m| m.coeffs().iter().map(Expr::evaluator).collect())
            .collect();

        let witnesses: Vec<PointWitness> = sample_points
            .par_iter()
            .map(|p| {
                let rows = evals.len();
                let mut mat = DMatrix::<f64>::zeros(rows, dim);
                for (r, member) in evals.iter().enumerate() {
                    for (c, e) in member.iter().enumerate() {
                        mat[(r, c)] = e.eval(p, t);
                    }
                }
                let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
                sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let relative_sv = if sv.len() < dim || sv[0] <= 0.0 {
                    0.0
                } else {
                    sv[dim - 1] / sv[0]
                };
                PointWitness {
                    point: p.clone(),
                    singular_values: sv,
                    relative_sv,
                }
            })
            .collect();

        let worst = witnesses
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.relative_sv.partial_cmp(&b.1.relative_sv).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if witnesses[worst].relative_sv >= tol {
            let n0 = gen.level();
            return Ok(CertificateOutcome::Satisfied(HormanderCertificate {
                n0,
                eta: eta_for_level(n0),
                tolerance: tol,
                generations,
                witnesses,
                worst,
            }));
        }
        last_witnesses = witnesses;
    }

    let worst = last_witnesses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.relative_sv.partial_cmp(&b.1.relative_sv).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let w = &last_witnesses[worst];
    let rank_achieved = if w.singular_values.is_empty() || w.singular_values[0] <= 0.0 {
        0
    } else {
        w.singular_values
            .iter()
            .filter(|s| **s >= tol * w.singular_values[0])
            .count()
    };
    Ok(CertificateOutcome::NotSatisfied(NotSatisfied {
        levels_checked: n_max,
        worst_point: w.point.clone(),
        rank_achieved,
        min_relative_sv: w.relative_sv,
    }))
}

/// A uniform lattice of sample points on the torus `[0, 2*pi*period)^d`,
/// `per_axis` points per axis.
pub fn sample_lattice(dim: usize, per_axis: usize, period: f64) -> Vec<Vec<f64>> {
    assert!(dim >= 1 && per_axis >= 1);
    let len = 2.0 * std::f64::consts::PI * period;
    let h = len / per_axis as f64;
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; dim];
            for slot in p.iter_mut().rev() {
                *slot = (idx % per_axis) as f64 * h;
                idx /= per_axis;
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_expr;

    fn rotating_family() -> Vec<FirstOrderOperator> {
        vec![
            FirstOrderOperator::coordinate(1, 2),
            FirstOrderOperator::new(vec![Expr::zero(), parse_expr("sin(x1)", 2).unwrap()]),
        ]
    }

    #[test]
    fn generations_add_cos_bracket_once() {
        let gens = build_generations(&rotating_family(), 1).unwrap();
        assert_eq!(gens[0].members().len(), 2);
        // Level 1 adds cos(x1) D2; its negation from [sin D2, ...] brackets
        // is identified by sign canonicalization.
        assert_eq!(gens[1].members().len(), 3);
        let cos_d2 = FirstOrderOperator::new(vec![Expr::zero(), parse_expr("cos(x1)", 2).unwrap()]);
        assert!(gens[1]
            .members()
            .iter()
            .any(|m| m.coeffs() == cos_d2.coeffs()));
    }

    #[test]
    fn lone_coordinate_field_never_grows() {
        let fam = vec![FirstOrderOperator::coordinate(1, 2)];
        let gens = build_generations(&fam, 3).unwrap();
        for g in &gens {
            assert_eq!(g.members().len(), 1);
        }
    }

    #[test]
    fn n_max_zero_returns_only_level_zero() {
        let gens = build_generations(&rotating_family(), 0).unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[0].level(), 0);
    }

    #[test]
    fn certificate_for_rotating_family() {
        let grid = sample_lattice(2, 32, 1.0);
        let out = check_hormander(&rotating_family(), &grid, 1e-8, 3).unwrap();
        let cert = out.certificate().expect("family is certified");
        assert_eq!(cert.n0, 1);
        assert_eq!(cert.eta, 0.5);
        assert!(cert.min_relative_sv() >= 1e-8);
    }

    #[test]
    fn already_spanning_family_is_level_zero() {
        let fam = vec![
            FirstOrderOperator::coordinate(1, 2),
            FirstOrderOperator::coordinate(2, 2),
        ];
        let grid = sample_lattice(2, 8, 1.0);
        let out = check_hormander(&fam, &grid, 1e-8, 2).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.n0, 0);
        assert_eq!(cert.eta, 1.0);
    }

    #[test]
    fn degenerate_family_reports_not_satisfied() {
        let fam = vec![FirstOrderOperator::coordinate(1, 2)];
        let grid = sample_lattice(2, 8, 1.0);
        match check_hormander(&fam, &grid, 1e-8, 3).unwrap() {
            CertificateOutcome::NotSatisfied(ns) => {
                assert_eq!(ns.levels_checked, 3);
                assert_eq!(ns.rank_achieved, 1);
            }
            CertificateOutcome::Satisfied(_) => panic!("must not certify"),
        }
    }

    #[test]
    fn rank_test_is_monotone_across_levels() {
        // Once a generation spans, every later (larger) generation spans
        // with the same tolerance: check each level's member set directly.
        let grid = sample_lattice(2, 16, 1.0);
        let gens = build_generations(&rotating_family(), 3).unwrap();
        for (level, gen) in gens.iter().enumerate().skip(1) {
            let out = check_hormander(gen.members(), &grid, 1e-8, 0).unwrap();
            assert!(
                out.certificate().is_some(),
                "level {level} member set must span"
            );
        }
    }

    #[test]
    fn eta_is_exact_dyadic() {
        for n0 in 0..=30usize {
            let eta = eta_for_level(n0);
            assert_eq!(eta, 2f64.powi(-(n0 as i32)));
            assert_eq!(eta * (1u64 << n0) as f64, 1.0);
        }
    }
}
