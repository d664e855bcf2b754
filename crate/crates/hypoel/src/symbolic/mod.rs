//! Symbolic coefficient expressions, first-order operators, Lie brackets,
//! and bracket-generation spanning certificates.

mod certificate;
mod expr;
mod operator;
mod parser;

pub use certificate::{
    build_generations, check_hormander, check_hormander_at, eta_for_level, sample_lattice,
    CertificateOutcome, Generation, HormanderCertificate, NotSatisfied, PointWitness,
};
pub use expr::{Evaluator, Expr};
pub use operator::{
    adjoint_zeroth, hormander_drift, lie_bracket, ExprMatrix, FirstOrderOperator, SymbolicError,
};
pub use parser::{parse_expr, ParseError, ParseErrorKind};

/// Partial derivative of an expression with respect to `x{axis}`, validating
/// the axis against a declared dimension.
pub fn diff_expr(e: &Expr, axis: usize, dim: usize) -> Result<Expr, SymbolicError> {
    if axis == 0 || axis > dim {
        return Err(SymbolicError::AxisOutOfRange { axis, dim });
    }
    Ok(e.diff(axis))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_expr_validates_the_axis() {
        let e = parse_expr("sin(x1)", 2).unwrap();
        assert_eq!(
            diff_expr(&e, 1, 2).unwrap(),
            parse_expr("cos(x1)", 2).unwrap()
        );
        assert!(diff_expr(&e, 2, 2).unwrap().is_zero());
        assert!(matches!(
            diff_expr(&e, 3, 2),
            Err(SymbolicError::AxisOutOfRange { axis: 3, dim: 2 })
        ));
        assert!(diff_expr(&e, 0, 2).is_err());
    }
}
