//! First-order differential operators `a^j D_j`, their Lie brackets, and
//! the drift transform between the Itô and divergence-free generator forms.

use std::fmt;
use thiserror::Error;

use super::expr::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolicError {
    #[error("operator dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("axis {axis} out of range 1..={dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("matrix shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("empty operator family")]
    EmptyFamily,
    #[error("tolerance {tol} outside (0, 1)")]
    BadTolerance { tol: f64 },
    #[error("empty sample grid")]
    EmptySampleGrid,
    #[error("sample point dimension {got}, expected {expected}")]
    BadSamplePoint { got: usize, expected: usize },
}

/// A purely first-order operator `F = sum_j a^j(x) D_j` with no zeroth-order
/// part. The class is closed under Lie brackets.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FirstOrderOperator {
    coeffs: Vec<Expr>,
    label: Option<String>,
}

impl FirstOrderOperator {
    /// Build from the coefficient vector `(a^1, ..., a^d)`.
    pub fn new(coeffs: Vec<Expr>) -> Self {
        assert!(!coeffs.is_empty(), "operator needs at least one axis");
        FirstOrderOperator {
            coeffs,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// The unit direction `D_axis` in dimension `dim` (1-based axis).
    pub fn coordinate(axis: usize, dim: usize) -> Self {
        assert!(axis >= 1 && axis <= dim);
        let coeffs = (1..=dim)
            .map(|j| if j == axis { Expr::one() } else { Expr::zero() })
            .collect();
        FirstOrderOperator::new(coeffs).with_label(format!("D{axis}"))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Coefficient of `D_axis` (1-based).
    pub fn coeff(&self, axis: usize) -> &Expr {
        &self.coeffs[axis - 1]
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// True if every coefficient is the structural zero expression.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    /// Apply to an expression: `F(phi) = sum_j a^j D_j phi`.
    pub fn apply_expr(&self, phi: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            acc = acc.add(&a.mul(&phi.diff(j + 1)));
        }
        acc
    }

    /// Evaluate the coefficient vector at a spatial point and time.
    pub fn eval_coeffs(&self, point: &[f64], t: f64) -> Vec<f64> {
        self.coeffs.iter().map(|a| a.eval(point, t)).collect()
    }

    /// Negate every coefficient.
    pub fn neg(&self) -> Self {
        FirstOrderOperator {
            coeffs: self.coeffs.iter().map(Expr::neg).collect(),
            label: None,
        }
    }

    /// Sign-canonical representative of `{F, -F}`: the first structurally
    /// nonzero coefficient is made leading-positive. Used when deduplicating
    /// bracket generations, where a field and its negation span the same
    /// direction.
    pub fn sign_canonical(&self) -> Self {
        for a in &self.coeffs {
            if !a.is_zero() {
                return if a.leading_negative() {
                    self.neg()
                } else {
                    self.clone()
                };
            }
        }
        self.clone()
    }
}

impl fmt::Display for FirstOrderOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            return write!(f, "{l}");
        }
        let mut wrote = false;
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "({a})*D{}", j + 1)?;
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for FirstOrderOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FirstOrderOperator[")?;
        for (j, a) in self.coeffs.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// Lie bracket `[F, G] = FG - GF`, again a first-order operator with
/// coefficients `[F,G]^j = F^i D_i G^j - G^i D_i F^j`.
pub fn lie_bracket(
    f: &FirstOrderOperator,
    g: &FirstOrderOperator,
) -> Result<FirstOrderOperator, SymbolicError> {
    if f.dim() != g.dim() {
        return Err(SymbolicError::DimensionMismatch {
            left: f.dim(),
            right: g.dim(),
        });
    }
    let coeffs = (1..=f.dim())
        .map(|j| f.apply_expr(g.coeff(j)).sub(&g.apply_expr(f.coeff(j))))
        .collect();
    Ok(FirstOrderOperator::new(coeffs))
}

/// Zeroth-order part of the formal adjoint: for `F = a^j D_j`,
/// `F = F' + c_F` with `F' = D_j(a^j ·)` and `c_F = -sum_j D_j a^j`.
pub fn adjoint_zeroth(f: &FirstOrderOperator) -> Expr {
    let mut acc = Expr::zero();
    for (j, a) in f.coeffs().iter().enumerate() {
        acc = acc.sub(&a.diff(j + 1));
    }
    acc
}

/// A dense matrix of expressions, row-major, used for the diffusion
/// coefficient families (`rows` = spatial dimension, `cols` = noise
/// dimension).
#[derive(Clone, PartialEq, Eq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Expr>) -> Result<Self, SymbolicError> {
        if entries.len() != rows * cols {
            return Err(SymbolicError::ShapeMismatch {
                expected_rows: rows,
                expected_cols: cols,
                rows: entries.len() / cols.max(1),
                cols,
            });
        }
        Ok(ExprMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExprMatrix {
            rows,
            cols,
            entries: vec![Expr::zero(); rows * cols],
        }
    }

    /// From row slices, validating a rectangular shape.
    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self, SymbolicError> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        for row in &rows {
            if row.len() != c {
                return Err(SymbolicError::ShapeMismatch {
                    expected_rows: r,
                    expected_cols: c,
                    rows: r,
                    cols: row.len(),
                });
            }
        }
        Ok(ExprMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(i, k)`, both 1-based.
    pub fn get(&self, i: usize, k: usize) -> &Expr {
        &self.entries[(i - 1) * self.cols + (k - 1)]
    }

    /// Column `k` (1-based) as a first-order operator `sum_j m^{jk} D_j`.
    pub fn column_operator(&self, k: usize) -> FirstOrderOperator {
        let coeffs = (1..=self.rows).map(|i| self.get(i, k).clone()).collect();
        FirstOrderOperator::new(coeffs)
    }

    /// All column operators.
    pub fn column_operators(&self) -> Vec<FirstOrderOperator> {
        (1..=self.cols).map(|k| self.column_operator(k)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Expr::is_zero)
    }

    pub fn uses_time(&self) -> bool {
        self.entries.iter().any(Expr::uses_time)
    }
}

impl fmt::Debug for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprMatrix({}x{})", self.rows, self.cols)
    }
}

/// Drift transform between the plain Itô form and the generator written with
/// squared first-order operators:
/// `bt^j = b^j - (1/2) sum_{i,k} (s^{ik} D_i s^{jk} + th^{ik} D_i th^{jk})`.
pub fn hormander_drift(
    b: &[Expr],
    sigma: &ExprMatrix,
    theta: &ExprMatrix,
) -> Result<Vec<Expr>, SymbolicError> {
    let d = b.len();
    if sigma.rows() != d || theta.rows() != d || sigma.cols() != theta.cols() {
        return Err(SymbolicError::ShapeMismatch {
            expected_rows: d,
            expected_cols: sigma.cols(),
            rows: theta.rows(),
            cols: theta.cols(),
        });
    }
    let d1 = sigma.cols();
    let mut out = Vec::with_capacity(d);
    for j in 1..=d {
        let mut corr = Expr::zero();
        for k in 1..=d1 {
            for i in 1..=d {
                corr = corr.add(&sigma.get(i, k).mul(&sigma.get(j, k).diff(i)));
                corr = corr.add(&theta.get(i, k).mul(&theta.get(j, k).diff(i)));
            }
        }
        out.push(b[j - 1].sub(&corr.scale(0.5)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_expr;

    fn op(coeffs: &[&str], d: usize) -> FirstOrderOperator {
        FirstOrderOperator::new(coeffs.iter().map(|s| parse_expr(s, d).unwrap()).collect())
    }

    #[test]
    fn bracket_of_coordinate_and_rotating_field() {
        // [D1, sin(x1) D2] = cos(x1) D2
        let d1 = FirstOrderOperator::coordinate(1, 2);
        let f = op(&["0", "sin(x1)"], 2);
        let br = lie_bracket(&d1, &f).unwrap();
        assert!(br.coeff(1).is_zero());
        assert_eq!(*br.coeff(2), parse_expr("cos(x1)", 2).unwrap());
    }

    #[test]
    fn bracket_self_and_constants_vanish() {
        let f = op(&["sin(x1)", "x1*x2"], 2);
        assert!(lie_bracket(&f, &f).unwrap().is_zero());
        let d1 = FirstOrderOperator::coordinate(1, 2);
        let d2 = FirstOrderOperator::coordinate(2, 2);
        assert!(lie_bracket(&d1, &d2).unwrap().is_zero());
    }

    #[test]
    fn bracket_antisymmetry_structural() {
        let f = op(&["sin(x2)", "cos(x1)"], 2);
        let g = op(&["x2", "exp(x1)"], 2);
        let fg = lie_bracket(&f, &g).unwrap();
        let gf = lie_bracket(&g, &f).unwrap();
        for j in 1..=2 {
            assert!(fg.coeff(j).add(gf.coeff(j)).is_zero());
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = op(&["1"], 1);
        let g = op(&["1", "0"], 2);
        assert!(matches!(
            lie_bracket(&f, &g),
            Err(SymbolicError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_zeroth_examples() {
        // Constant coefficients: zero.
        let d1 = FirstOrderOperator::coordinate(1, 2);
        assert!(adjoint_zeroth(&d1).is_zero());
        // sin(x1) D1 -> -cos(x1)
        let f = op(&["sin(x1)"], 1);
        assert_eq!(adjoint_zeroth(&f), parse_expr("-cos(x1)", 1).unwrap());
        // Divergence-free field: zero.
        let g = op(&["sin(x2)", "cos(x1)"], 2);
        assert!(adjoint_zeroth(&g).is_zero());
    }

    #[test]
    fn drift_transform_examples() {
        // Constant sigma, theta: unchanged drift.
        let b = vec![parse_expr("x1", 1).unwrap()];
        let sigma = ExprMatrix::from_rows(vec![vec![Expr::constant(2.0)]]).unwrap();
        let theta = ExprMatrix::from_rows(vec![vec![Expr::constant(-1.0)]]).unwrap();
        let bt = hormander_drift(&b, &sigma, &theta).unwrap();
        assert_eq!(bt[0], b[0]);

        // d = d1 = 1, sigma = sin(x1), theta = 0: bt = -1/2 sin cos.
        let b = vec![Expr::zero()];
        let sigma = ExprMatrix::from_rows(vec![vec![parse_expr("sin(x1)", 1).unwrap()]]).unwrap();
        let theta = ExprMatrix::zeros(1, 1);
        let bt = hormander_drift(&b, &sigma, &theta).unwrap();
        assert_eq!(bt[0], parse_expr("-1/2*sin(x1)*cos(x1)", 1).unwrap());

        // sigma = 0, theta = cos(x1): bt = +1/2 cos sin.
        let sigma = ExprMatrix::zeros(1, 1);
        let theta = ExprMatrix::from_rows(vec![vec![parse_expr("cos(x1)", 1).unwrap()]]).unwrap();
        let bt = hormander_drift(&b, &sigma, &theta).unwrap();
        assert_eq!(bt[0], parse_expr("1/2*cos(x1)*sin(x1)", 1).unwrap());
    }
}
