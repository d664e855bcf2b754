//! Canonical symbolic expressions.
//!
//! An [`Expr`] is kept in a canonical form at all times: a sum of monomials
//! with exact rational coefficients, each monomial a sorted list of primitive
//! factors (`x_i`, `t`, `sin`, `cos`, `exp`, reciprocals) raised to nonzero
//! integer powers. Products distribute over sums, constants fold, and the
//! arguments of odd/even primitives carry a normalized sign. Two expressions
//! are mathematically equal under these rewrites exactly when they compare
//! equal with `==`, which is what the bracket-generation dedup and the
//! structural identity tests rely on.
//!
//! Coefficient arithmetic is exact (arbitrary-precision rationals), so
//! algebraic cancellations like `[F,G] + [G,F]` produce the zero expression
//! bit-for-bit rather than a small floating-point residue.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

/// A symbolic expression in the coefficient grammar: constants, spatial
/// variables `x1..xd`, time `t`, `neg`, `sin`, `cos`, `exp`, sums, products,
/// quotients and integer powers.
///
/// Values are immutable and cheap to clone (shared subtrees). Equality is
/// structural equality of the canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Expr {
    sum: Arc<Sum>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Sum {
    /// Sorted by monomial, monomials unique, coefficients nonzero.
    terms: Vec<Term>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Term {
    monomial: Monomial,
    coeff: BigRational,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Monomial {
    /// Sorted by factor, factors unique, powers nonzero.
    factors: Vec<(Factor, i32)>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Factor {
    Var(u32),
    Time,
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    /// Reciprocal of a sum that is not a single monomial.
    Inv(Expr),
}

impl Sum {
    fn zero() -> Self {
        Sum { terms: Vec::new() }
    }

    fn from_map(map: BTreeMap<Monomial, BigRational>) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(monomial, coeff)| Term { monomial, coeff })
            .collect();
        Sum { terms }
    }

    fn into_map(self) -> BTreeMap<Monomial, BigRational> {
        self.terms
            .into_iter()
            .map(|t| (t.monomial, t.coeff))
            .collect()
    }
}

impl Monomial {
    fn unit() -> Self {
        Monomial {
            factors: Vec::new(),
        }
    }

    fn single(f: Factor) -> Self {
        Monomial {
            factors: vec![(f, 1)],
        }
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut factors: Vec<(Factor, i32)> =
            Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            match self.factors[i].0.cmp(&other.factors[j].0) {
                std::cmp::Ordering::Less => {
                    factors.push(self.factors[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    factors.push(other.factors[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let p = self.factors[i].1 + other.factors[j].1;
                    if p != 0 {
                        factors.push((self.factors[i].0.clone(), p));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&self.factors[i..]);
        factors.extend_from_slice(&other.factors[j..]);
        Monomial { factors }
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("expression constant must be finite")
}

impl Expr {
    fn from_sum(sum: Sum) -> Expr {
        Expr { sum: Arc::new(sum) }
    }

    /// The zero expression.
    pub fn zero() -> Expr {
        Expr::from_sum(Sum::zero())
    }

    /// The constant one.
    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    /// A real constant. Panics if `x` is NaN or infinite.
    pub fn constant(x: f64) -> Expr {
        Expr::from_rational(rational(x))
    }

    pub(crate) fn from_rational(c: BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::unit(),
                coeff: c,
            }],
        })
    }

    /// The spatial variable `x{index}`; indices start at 1.
    pub fn var(index: usize) -> Expr {
        assert!(index >= 1, "variable indices start at 1");
        Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::single(Factor::Var(index as u32)),
                coeff: BigRational::one(),
            }],
        })
    }

    /// The time variable `t`.
    pub fn time() -> Expr {
        Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::single(Factor::Time),
                coeff: BigRational::one(),
            }],
        })
    }

    /// True if this is the zero expression.
    pub fn is_zero(&self) -> bool {
        self.sum.terms.is_empty()
    }

    /// If the expression is a constant, its value.
    pub fn as_constant(&self) -> Option<f64> {
        match self.sum.terms.len() {
            0 => Some(0.0),
            1 if self.sum.terms[0].monomial.factors.is_empty() => self.sum.terms[0].coeff.to_f64(),
            _ => None,
        }
    }

    fn as_rational(&self) -> Option<&BigRational> {
        match self.sum.terms.len() {
            1 if self.sum.terms[0].monomial.factors.is_empty() => Some(&self.sum.terms[0].coeff),
            _ => None,
        }
    }

    /// Sign of the leading (first canonical) term; zero for the zero expression.
    pub(crate) fn leading_negative(&self) -> bool {
        self.sum
            .terms
            .first()
            .map(|t| t.coeff.is_negative())
            .unwrap_or(false)
    }

    /// Largest spatial variable index that occurs, 0 if none.
    pub fn max_var_index(&self) -> usize {
        fn factor_max(f: &Factor) -> usize {
            match f {
                Factor::Var(i) => *i as usize,
                Factor::Time => 0,
                Factor::Sin(e) | Factor::Cos(e) | Factor::Exp(e) | Factor::Inv(e) => {
                    e.max_var_index()
                }
            }
        }
        self.sum
            .terms
            .iter()
            .flat_map(|t| t.monomial.factors.iter())
            .map(|(f, _)| factor_max(f))
            .max()
            .unwrap_or(0)
    }

    /// True if the time variable occurs anywhere in the expression.
    pub fn uses_time(&self) -> bool {
        fn factor_uses(f: &Factor) -> bool {
            match f {
                Factor::Time => true,
                Factor::Var(_) => false,
                Factor::Sin(e) | Factor::Cos(e) | Factor::Exp(e) | Factor::Inv(e) => e.uses_time(),
            }
        }
        self.sum
            .terms
            .iter()
            .flat_map(|t| t.monomial.factors.iter())
            .any(|(f, _)| factor_uses(f))
    }

    /// Every reciprocal (division) denominator occurring in the expression.
    pub fn denominators(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        fn walk(e: &Expr, out: &mut Vec<Expr>) {
            for t in &e.sum.terms {
                for (f, p) in &t.monomial.factors {
                    match f {
                        Factor::Inv(inner) => {
                            out.push(inner.clone());
                            walk(inner, out);
                        }
                        Factor::Sin(inner) | Factor::Cos(inner) | Factor::Exp(inner) => {
                            walk(inner, out)
                        }
                        Factor::Var(_) | Factor::Time => {}
                    }
                    // A primitive factor with a negative power is also a denominator.
                    if *p < 0 {
                        if let Factor::Var(i) = f {
                            out.push(Expr::var(*i as usize));
                        }
                    }
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Sum of two expressions.
    pub fn add(&self, other: &Expr) -> Expr {
        let mut map = (*self.sum).clone().into_map();
        for t in &other.sum.terms {
            let entry = map
                .entry(t.monomial.clone())
                .or_insert_with(BigRational::zero);
            *entry += &t.coeff;
        }
        Expr::from_sum(Sum::from_map(map))
    }

    /// Difference of two expressions.
    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Expr {
        let terms = self
            .sum
            .terms
            .iter()
            .map(|t| Term {
                monomial: t.monomial.clone(),
                coeff: -t.coeff.clone(),
            })
            .collect();
        Expr::from_sum(Sum { terms })
    }

    /// Product of two expressions (distributes over sums).
    pub fn mul(&self, other: &Expr) -> Expr {
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for a in &self.sum.terms {
            for b in &other.sum.terms {
                let m = a.monomial.mul(&b.monomial);
                let c = &a.coeff * &b.coeff;
                let entry = map.entry(m).or_insert_with(BigRational::zero);
                *entry += c;
            }
        }
        Expr::from_sum(Sum::from_map(map))
    }

    /// Multiplication by an exact rational scalar.
    pub fn scale(&self, c: f64) -> Expr {
        self.mul(&Expr::constant(c))
    }

    /// Integer power. `e.powi(0)` is 1 (including for the zero expression).
    /// Panics on a negative power of the zero expression; use
    /// [`Expr::checked_powi`] to handle that case.
    pub fn powi(&self, n: i32) -> Expr {
        self.checked_powi(n)
            .expect("negative power of the zero expression")
    }

    /// Integer power, returning `None` for a negative power of zero.
    pub fn checked_powi(&self, n: i32) -> Option<Expr> {
        if n == 0 {
            return Some(Expr::one());
        }
        if n < 0 {
            let inv = self.checked_recip()?;
            return Some(inv.powi(-n));
        }
        // Binary exponentiation over the canonical product.
        let mut base = self.clone();
        let mut acc = Expr::one();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Some(acc)
    }

    /// Quotient, `None` when the divisor is the structural zero expression.
    pub fn checked_div(&self, other: &Expr) -> Option<Expr> {
        Some(self.mul(&other.checked_recip()?))
    }

    fn checked_recip(&self) -> Option<Expr> {
        if self.is_zero() {
            return None;
        }
        if self.sum.terms.len() == 1 {
            // Invert a monomial factor by factor. Reciprocal factors flip
            // back to plain sums so that stored Inv powers stay positive.
            let t = &self.sum.terms[0];
            let mut plain: Vec<(Factor, i32)> = Vec::new();
            let mut extra = Expr::from_rational(t.coeff.recip());
            for (f, p) in &t.monomial.factors {
                match f {
                    Factor::Inv(base) => extra = extra.mul(&base.powi(*p)),
                    _ => plain.push((f.clone(), -p)),
                }
            }
            let mono = Expr::from_sum(Sum {
                terms: vec![Term {
                    monomial: Monomial { factors: plain },
                    coeff: BigRational::one(),
                }],
            });
            return Some(mono.mul(&extra));
        }
        // Multi-term denominator: opaque reciprocal factor, with the leading
        // coefficient pulled out so 1/(c*E) and (1/c)*(1/E) canonicalize
        // identically (this also normalizes the sign).
        let lead = self.sum.terms[0].coeff.clone();
        let base = self.mul(&Expr::from_rational(lead.recip()));
        let inv = Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::single(Factor::Inv(base)),
                coeff: lead.recip(),
            }],
        });
        Some(inv)
    }

    /// Sine of the expression.
    pub fn sin(&self) -> Expr {
        if let Some(c) = self.as_rational() {
            if c.is_zero() {
                return Expr::zero();
            }
            return Expr::constant(c.to_f64().unwrap_or(f64::NAN).sin());
        }
        if self.leading_negative() {
            return self.neg().sin().neg();
        }
        Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::single(Factor::Sin(self.clone())),
                coeff: BigRational::one(),
            }],
        })
    }

    /// Cosine of the expression.
    pub fn cos(&self) -> Expr {
        if let Some(c) = self.as_rational() {
            if c.is_zero() {
                return Expr::one();
            }
            return Expr::constant(c.to_f64().unwrap_or(f64::NAN).cos());
        }
        if self.leading_negative() {
            return self.neg().cos();
        }
        Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::single(Factor::Cos(self.clone())),
                coeff: BigRational::one(),
            }],
        })
    }

    /// Exponential of the expression.
    pub fn exp(&self) -> Expr {
        if let Some(c) = self.as_rational() {
            if c.is_zero() {
                return Expr::one();
            }
            return Expr::constant(c.to_f64().unwrap_or(f64::NAN).exp());
        }
        Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: Monomial::single(Factor::Exp(self.clone())),
                coeff: BigRational::one(),
            }],
        })
    }

    /// Partial derivative with respect to `x{axis}` (axis ≥ 1). Time is
    /// treated as a frozen parameter. Differentiating past the largest
    /// variable index yields zero.
    pub fn diff(&self, axis: usize) -> Expr {
        assert!(axis >= 1, "axes start at 1");
        let axis = axis as u32;
        let mut acc = Expr::zero();
        for term in &self.sum.terms {
            let dm = diff_monomial(&term.monomial, axis);
            acc = acc.add(&dm.mul(&Expr::from_rational(term.coeff.clone())));
        }
        acc
    }

    /// Evaluate at a spatial point and time. Convenient for small one-off
    /// evaluations; hot loops should compile an [`Evaluator`] once.
    pub fn eval(&self, point: &[f64], t: f64) -> f64 {
        self.evaluator().eval(point, t)
    }

    /// Compile to a float-only evaluation tree.
    pub fn evaluator(&self) -> Evaluator {
        Evaluator::compile(self)
    }
}

fn diff_monomial(m: &Monomial, axis: u32) -> Expr {
    let mut acc = Expr::zero();
    for (idx, (factor, power)) in m.factors.iter().enumerate() {
        let df = diff_factor(factor, axis);
        if df.is_zero() {
            continue;
        }
        // d(f^p) = p f^{p-1} df, times the remaining factors untouched.
        let mut rest = Monomial {
            factors: Vec::with_capacity(m.factors.len()),
        };
        for (j, fp) in m.factors.iter().enumerate() {
            if j == idx {
                if fp.1 != 1 {
                    rest.factors.push((fp.0.clone(), fp.1 - 1));
                }
            } else {
                rest.factors.push(fp.clone());
            }
        }
        let rest_expr = Expr::from_sum(Sum {
            terms: vec![Term {
                monomial: rest,
                coeff: BigRational::from(BigInt::from(*power)),
            }],
        });
        acc = acc.add(&rest_expr.mul(&df));
    }
    acc
}

fn diff_factor(f: &Factor, axis: u32) -> Expr {
    match f {
        Factor::Var(i) => {
            if *i == axis {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Factor::Time => Expr::zero(),
        Factor::Sin(e) => e.cos().mul(&e.diff(axis as usize)),
        Factor::Cos(e) => e.sin().neg().mul(&e.diff(axis as usize)),
        Factor::Exp(e) => e.exp().mul(&e.diff(axis as usize)),
        Factor::Inv(e) => {
            // d(1/E) = -E'/E^2
            let inv = Expr::from_sum(Sum {
                terms: vec![Term {
                    monomial: Monomial {
                        factors: vec![(Factor::Inv(e.clone()), 2)],
                    },
                    coeff: BigRational::one(),
                }],
            });
            inv.neg().mul(&e.diff(axis as usize))
        }
    }
}

// ----- operator sugar --------------------------------------------------

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}
impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}
impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}
impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(&self, &rhs)
    }
}
impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(&self, &rhs)
    }
}
impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(&self, &rhs)
    }
}
impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

// ----- display ----------------------------------------------------------

fn write_coeff(f: &mut fmt::Formatter<'_>, c: &BigRational) -> fmt::Result {
    if c.denom().is_one() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, factor: &Factor, power: i32) -> fmt::Result {
    match factor {
        Factor::Var(i) => write!(f, "x{i}")?,
        Factor::Time => write!(f, "t")?,
        Factor::Sin(e) => write!(f, "sin({e})")?,
        Factor::Cos(e) => write!(f, "cos({e})")?,
        Factor::Exp(e) => write!(f, "exp({e})")?,
        Factor::Inv(e) => {
            // Rendered as a parenthesized power; the exponent below is negated.
            write!(f, "({e})")?;
        }
    }
    let shown = match factor {
        Factor::Inv(_) => -power,
        _ => power,
    };
    if shown != 1 {
        write!(f, "^{shown}")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    /// Prints the canonical form in the input grammar; parsing the output
    /// reproduces the expression exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sum.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, term) in self.sum.terms.iter().enumerate() {
            let c = if i == 0 {
                term.coeff.clone()
            } else {
                if term.coeff.is_negative() {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                term.coeff.abs()
            };
            if term.monomial.factors.is_empty() {
                write_coeff(f, &c)?;
                continue;
            }
            if c == -BigRational::one() {
                write!(f, "-")?;
            } else if c != BigRational::one() {
                write_coeff(f, &c)?;
                write!(f, "*")?;
            }
            for (j, (factor, power)) in term.monomial.factors.iter().enumerate() {
                if j > 0 {
                    write!(f, "*")?;
                }
                write_factor(f, factor, *power)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

// ----- compiled evaluation ----------------------------------------------

/// Float-only evaluation tree compiled from an [`Expr`].
#[derive(Clone, Debug)]
pub struct Evaluator {
    terms: Vec<(f64, Vec<(EvalFactor, i32)>)>,
}

#[derive(Clone, Debug)]
enum EvalFactor {
    Var(usize),
    Time,
    Sin(Evaluator),
    Cos(Evaluator),
    Exp(Evaluator),
    Inv(Evaluator),
}

impl Evaluator {
    fn compile(e: &Expr) -> Evaluator {
        let terms = e
            .sum
            .terms
            .iter()
            .map(|t| {
                let c = t.coeff.to_f64().unwrap_or(f64::NAN);
                let fs = t
                    .monomial
                    .factors
                    .iter()
                    .map(|(f, p)| {
                        let ef = match f {
                            Factor::Var(i) => EvalFactor::Var(*i as usize),
                            Factor::Time => EvalFactor::Time,
                            Factor::Sin(e) => EvalFactor::Sin(Evaluator::compile(e)),
                            Factor::Cos(e) => EvalFactor::Cos(Evaluator::compile(e)),
                            Factor::Exp(e) => EvalFactor::Exp(Evaluator::compile(e)),
                            Factor::Inv(e) => EvalFactor::Inv(Evaluator::compile(e)),
                        };
                        (ef, *p)
                    })
                    .collect();
                (c, fs)
            })
            .collect();
        Evaluator { terms }
    }

    /// Evaluate at a spatial point and time. Variables beyond `point.len()`
    /// panic; validate expressions against the dimension beforehand.
    pub fn eval(&self, point: &[f64], t: f64) -> f64 {
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut term = *c;
            for (f, p) in factors {
                let base = match f {
                    EvalFactor::Var(i) => point[*i - 1],
                    EvalFactor::Time => t,
                    EvalFactor::Sin(e) => e.eval(point, t).sin(),
                    EvalFactor::Cos(e) => e.eval(point, t).cos(),
                    EvalFactor::Exp(e) => e.eval(point, t).exp(),
                    EvalFactor::Inv(e) => 1.0 / e.eval(point, t),
                };
                term *= base.powi(*p);
            }
            acc += term;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_zero_from_cancellation() {
        let x = Expr::var(1);
        let e = x.mul(&x).sub(&x.mul(&x));
        assert!(e.is_zero());
        assert_eq!(e, Expr::zero());
    }

    #[test]
    fn product_rule_square() {
        // d/dx1 (x1*x1) = 2*x1
        let x = Expr::var(1);
        let d = x.mul(&x).diff(1);
        assert_eq!(d, x.scale(2.0));
    }

    #[test]
    fn sin_diff_and_independence() {
        let e = Expr::var(1).sin();
        assert_eq!(e.diff(1), Expr::var(1).cos());
        assert!(e.diff(2).is_zero());
    }

    #[test]
    fn sign_normalization_of_trig_args() {
        let x = Expr::var(1);
        assert_eq!(x.neg().sin(), x.sin().neg());
        assert_eq!(x.neg().cos(), x.cos());
    }

    #[test]
    fn division_by_monomial_is_exact() {
        // (x1^2) / (3*x1) = (1/3) x1, and evaluation agrees.
        let x = Expr::var(1);
        let q = x.powi(2).checked_div(&x.scale(3.0)).unwrap();
        let v = q.eval(&[2.5], 0.0);
        assert!((v - 2.5 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn eval_matches_formula() {
        // e = sin(x1)*x2 + exp(t)*x1^2
        let e = Expr::var(1)
            .sin()
            .mul(&Expr::var(2))
            .add(&Expr::time().exp().mul(&Expr::var(1).powi(2)));
        let (x1, x2, t) = (0.7f64, -1.3f64, 0.4f64);
        let want = x1.sin() * x2 + t.exp() * x1 * x1;
        assert!((e.eval(&[x1, x2], t) - want).abs() < 1e-14);
    }

    #[test]
    fn expressions_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Expr>();
        assert_send_sync::<crate::symbolic::FirstOrderOperator>();
        assert_send_sync::<crate::spectral::GridField>();
        assert_send_sync::<crate::spectral::TorusGrid>();
    }

    #[test]
    fn chain_rule_through_inv() {
        // d/dx (1/(1+x^2)) = -2x/(1+x^2)^2
        let x = Expr::var(1);
        let den = Expr::one().add(&x.powi(2));
        let e = Expr::one().checked_div(&den).unwrap();
        let d = e.diff(1);
        let x0 = 0.8f64;
        let want = -2.0 * x0 / (1.0 + x0 * x0).powi(2);
        assert!((d.eval(&[x0], 0.0) - want).abs() < 1e-14);
    }
}
