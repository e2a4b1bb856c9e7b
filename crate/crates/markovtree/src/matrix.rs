//! Stochastic matrices and Markov generators, with validation and the
//! conversions between them.

use thiserror::Error;

use crate::scalar::{Scalar, ScalarMode};

/// Absolute tolerance on float-mode row sums (1 for stochastic, 0 for generators).
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Entry-sign regime of a stochastic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    /// Non-negative entries, rows sum to 1.
    Strict,
    /// Rows sum to 1; entries may be negative.
    Generalized,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is empty (need at least one state)")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },
    #[error("row {row} sums to {sum}, expected {expected}")]
    RowSumViolation { row: usize, sum: String, expected: String },
    #[error("negative entry at ({row}, {col}) in strict mode")]
    NegativeEntry { row: usize, col: usize },
    #[error("entries mix exact and float arithmetic (first at ({row}, {col}))")]
    MixedArithmetic { row: usize, col: usize },
    #[error("negative off-diagonal generator entry at ({row}, {col})")]
    NegativeOffDiagonal { row: usize, col: usize },
    #[error("positive diagonal generator entry at ({row}, {row})")]
    PositiveDiagonal { row: usize },
    #[error("alpha {alpha} is too large: alpha * max|a_ii| = {product} exceeds 1")]
    AlphaTooLarge { alpha: String, product: String },
    #[error("alpha must be positive, got {alpha}")]
    AlphaNotPositive { alpha: String },
    #[error("operation requires a strict-mode matrix")]
    StrictModeRequired,
}

/// Square matrix with unit row sums; the transition kernel of a finite chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    entries: Vec<Scalar>,
    mode: MatrixMode,
    scalar_mode: ScalarMode,
}

/// Square matrix with zero row sums, non-negative off-diagonal and
/// non-positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovGenerator {
    n: usize,
    entries: Vec<Scalar>,
    scalar_mode: ScalarMode,
}

/// Scale factor for [`generator_to_stochastic`].
#[derive(Debug, Clone)]
pub enum Alpha {
    /// `1 / max_i |a_ii|` (1 for the zero generator).
    Auto,
    Fixed(Scalar),
}

fn check_square(rows: &[Vec<Scalar>]) -> Result<(usize, ScalarMode), MatrixError> {
    let n = rows.len();
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(MatrixError::NonSquare { row: i, len: row.len(), expected: n });
        }
    }
    let scalar_mode = rows[0][0].mode();
    for (i, row) in rows.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            if entry.mode() != scalar_mode {
                return Err(MatrixError::MixedArithmetic { row: i, col: j });
            }
        }
    }
    Ok((n, scalar_mode))
}

fn row_sum_ok(sum: &Scalar, target: f64) -> bool {
    match sum {
        Scalar::Exact(r) => {
            use num::traits::{One, Zero};
            if target == 1.0 {
                r.is_one()
            } else {
                r.is_zero()
            }
        }
        Scalar::Float(x) => (x - target).abs() <= ROW_SUM_TOL,
    }
}

impl StochasticMatrix {
    /// Validates and builds a stochastic matrix; this is the only constructor.
    ///
    /// Errors name the first violated row or entry.
    pub fn new(rows: Vec<Vec<Scalar>>, mode: MatrixMode) -> Result<Self, MatrixError> {
        let (n, scalar_mode) = check_square(&rows)?;
        for (i, row) in rows.iter().enumerate() {
            if mode == MatrixMode::Strict {
                for (j, entry) in row.iter().enumerate() {
                    if entry.is_negative() {
                        return Err(MatrixError::NegativeEntry { row: i, col: j });
                    }
                }
            }
            let mut sum = Scalar::zero(scalar_mode);
            for entry in row {
                sum += entry;
            }
            if !row_sum_ok(&sum, 1.0) {
                return Err(MatrixError::RowSumViolation {
                    row: i,
                    sum: sum.to_string(),
                    expected: "1".into(),
                });
            }
        }
        let entries = rows.into_iter().flatten().collect();
        Ok(StochasticMatrix { n, entries, mode, scalar_mode })
    }

    /// n-state identity matrix (every state absorbing).
    pub fn identity(n: usize, scalar_mode: ScalarMode) -> Result<Self, MatrixError> {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Scalar::one(scalar_mode)
                        } else {
                            Scalar::zero(scalar_mode)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(rows, MatrixMode::Strict)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    pub fn scalar_mode(&self) -> ScalarMode {
        self.scalar_mode
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Scalar]> {
        self.entries.chunks(self.n)
    }

    /// The restriction to a subset of states (rows and columns kept as given,
    /// in order). Valid on its own only when the subset is closed.
    pub fn submatrix(&self, states: &[usize]) -> Result<StochasticMatrix, MatrixError> {
        let rows = states
            .iter()
            .map(|&i| states.iter().map(|&j| self.get(i, j).clone()).collect())
            .collect();
        StochasticMatrix::new(rows, self.mode)
    }

    /// Convenience constructor from plain float rows.
    pub fn from_floats(rows: Vec<Vec<f64>>, mode: MatrixMode) -> Result<Self, MatrixError> {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(Scalar::float).collect())
            .collect();
        Self::new(rows, mode)
    }

    /// Lossy conversion to float arithmetic (identity on float matrices).
    pub fn to_float(&self) -> StochasticMatrix {
        let rows = self
            .rows()
            .map(|row| row.iter().map(|s| Scalar::float(s.to_f64())).collect())
            .collect();
        StochasticMatrix::new(rows, self.mode).expect("float image of a valid matrix stays valid")
    }
}

impl MarkovGenerator {
    /// Validates zero row sums and the off-diagonal/diagonal sign pattern.
    pub fn new(rows: Vec<Vec<Scalar>>) -> Result<Self, MatrixError> {
        let (n, scalar_mode) = check_square(&rows)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                if i == j && entry.is_positive() {
                    return Err(MatrixError::PositiveDiagonal { row: i });
                }
                if i != j && entry.is_negative() {
                    return Err(MatrixError::NegativeOffDiagonal { row: i, col: j });
                }
            }
            let mut sum = Scalar::zero(scalar_mode);
            for entry in row {
                sum += entry;
            }
            if !row_sum_ok(&sum, 0.0) {
                return Err(MatrixError::RowSumViolation {
                    row: i,
                    sum: sum.to_string(),
                    expected: "0".into(),
                });
            }
        }
        let entries = rows.into_iter().flatten().collect();
        Ok(MarkovGenerator { n, entries, scalar_mode })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scalar_mode(&self) -> ScalarMode {
        self.scalar_mode
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Scalar]> {
        self.entries.chunks(self.n)
    }

    fn max_abs_diagonal(&self) -> Scalar {
        let mut max = Scalar::zero(self.scalar_mode);
        for i in 0..self.n {
            let a = self.get(i, i).abs();
            if a > max {
                max = a;
            }
        }
        max
    }
}

/// `M = alpha * A + I`, a strict stochastic matrix.
///
/// `Alpha::Auto` picks `1 / max_i |a_ii|` (1 if `A = 0`), the largest scale
/// that keeps the diagonal non-negative.
pub fn generator_to_stochastic(
    generator: &MarkovGenerator,
    alpha: Alpha,
) -> Result<StochasticMatrix, MatrixError> {
    let mode = generator.scalar_mode();
    let max_diag = generator.max_abs_diagonal();
    let alpha = match alpha {
        Alpha::Auto => {
            if max_diag.is_zero() {
                Scalar::one(mode)
            } else {
                max_diag.recip().expect("nonzero")
            }
        }
        Alpha::Fixed(a) => {
            if !a.is_positive() {
                return Err(MatrixError::AlphaNotPositive { alpha: a.to_string() });
            }
            a
        }
    };
    let product = &alpha * &max_diag;
    let too_large = match &product {
        Scalar::Exact(_) => product > Scalar::one(mode),
        Scalar::Float(x) => *x > 1.0 + ROW_SUM_TOL,
    };
    if too_large {
        return Err(MatrixError::AlphaTooLarge {
            alpha: alpha.to_string(),
            product: product.to_string(),
        });
    }

    let n = generator.n();
    let one = Scalar::one(mode);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut m = &alpha * generator.get(i, j);
                    if i == j {
                        m = &m + &one;
                        // 1 - alpha*|a_ii| can round just below zero in floats.
                        if let Scalar::Float(x) = m {
                            if x < 0.0 && x >= -ROW_SUM_TOL {
                                m = Scalar::float(0.0);
                            }
                        }
                    }
                    m
                })
                .collect()
        })
        .collect();
    StochasticMatrix::new(rows, MatrixMode::Strict)
}

/// `A = M - I`, the generator whose unit-time kernel approximates `M`.
pub fn stochastic_to_generator(matrix: &StochasticMatrix) -> Result<MarkovGenerator, MatrixError> {
    if matrix.mode() != MatrixMode::Strict {
        return Err(MatrixError::StrictModeRequired);
    }
    let one = Scalar::one(matrix.scalar_mode());
    let rows = (0..matrix.n())
        .map(|i| {
            (0..matrix.n())
                .map(|j| {
                    if i == j {
                        matrix.get(i, j) - &one
                    } else {
                        matrix.get(i, j).clone()
                    }
                })
                .collect()
        })
        .collect();
    MarkovGenerator::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn float_rows(rows: &[&[f64]]) -> Vec<Vec<Scalar>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| Scalar::float(x)).collect())
            .collect()
    }

    fn int_rows(rows: &[&[i64]]) -> Vec<Vec<Scalar>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|&x| Scalar::from_int(x, ScalarMode::Exact))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn validates_strict_matrix() {
        let m = StochasticMatrix::new(
            float_rows(&[&[0.5, 0.5], &[0.25, 0.75]]),
            MatrixMode::Strict,
        )
        .unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.scalar_mode(), ScalarMode::Float);
    }

    #[test]
    fn signed_matrix_needs_generalized_mode() {
        let rows = || int_rows(&[&[1, -1, 1], &[1, 1, -1], &[-1, 1, 1]]);
        assert_eq!(
            StochasticMatrix::new(rows(), MatrixMode::Strict),
            Err(MatrixError::NegativeEntry { row: 0, col: 1 })
        );
        let m = StochasticMatrix::new(rows(), MatrixMode::Generalized).unwrap();
        assert_eq!(m.n(), 3);
    }

    #[test]
    fn reports_first_bad_row_sum() {
        let err = StochasticMatrix::new(
            float_rows(&[&[0.5, 0.6], &[0.25, 0.75]]),
            MatrixMode::Strict,
        )
        .unwrap_err();
        match err {
            MatrixError::RowSumViolation { row, sum, .. } => {
                assert_eq!(row, 0);
                assert_eq!(sum, "1.1");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_square_and_empty() {
        assert_eq!(
            StochasticMatrix::new(vec![], MatrixMode::Strict),
            Err(MatrixError::Empty)
        );
        let err =
            StochasticMatrix::new(float_rows(&[&[1.0], &[0.5, 0.5]]), MatrixMode::Strict)
                .unwrap_err();
        assert_eq!(err, MatrixError::NonSquare { row: 0, len: 1, expected: 2 });
    }

    #[test]
    fn single_state_matrix_is_legal() {
        let m = StochasticMatrix::new(int_rows(&[&[1]]), MatrixMode::Strict).unwrap();
        assert_eq!(m.n(), 1);
    }

    #[test]
    fn zero_generator_converts_to_identity() {
        let a = MarkovGenerator::new(int_rows(&[&[0, 0], &[0, 0]])).unwrap();
        let m = generator_to_stochastic(&a, Alpha::Auto).unwrap();
        assert_eq!(m, StochasticMatrix::identity(2, ScalarMode::Exact).unwrap());
    }

    #[test]
    fn two_state_generator_with_unit_alpha() {
        let a = MarkovGenerator::new(int_rows(&[&[-1, 1], &[1, -1]])).unwrap();
        let m = generator_to_stochastic(&a, Alpha::Fixed(Scalar::one(ScalarMode::Exact))).unwrap();
        let expected =
            StochasticMatrix::new(int_rows(&[&[0, 1], &[1, 0]]), MatrixMode::Strict).unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn oversized_alpha_is_rejected() {
        let a = MarkovGenerator::new(int_rows(&[&[-2, 2], &[2, -2]])).unwrap();
        let err = generator_to_stochastic(&a, Alpha::Fixed(Scalar::one(ScalarMode::Exact)))
            .unwrap_err();
        assert!(matches!(err, MatrixError::AlphaTooLarge { .. }));
        assert!(matches!(
            generator_to_stochastic(&a, Alpha::Fixed(Scalar::from_int(-1, ScalarMode::Exact))),
            Err(MatrixError::AlphaNotPositive { .. })
        ));
    }

    #[test]
    fn generator_round_trip() {
        let m = StochasticMatrix::new(int_rows(&[&[0, 1], &[1, 0]]), MatrixMode::Strict).unwrap();
        let a = stochastic_to_generator(&m).unwrap();
        let expected = MarkovGenerator::new(int_rows(&[&[-1, 1], &[1, -1]])).unwrap();
        assert_eq!(a, expected);
        let back = generator_to_stochastic(&a, Alpha::Fixed(Scalar::one(ScalarMode::Exact)));
        assert_eq!(back.unwrap(), m);
    }

    #[test]
    fn identity_round_trips_to_zero_generator() {
        let m = StochasticMatrix::identity(3, ScalarMode::Exact).unwrap();
        let a = stochastic_to_generator(&m).unwrap();
        assert!(a.rows().all(|row| row.iter().all(|s| s.is_zero())));
    }

    #[test]
    fn generator_sign_violations() {
        assert!(matches!(
            MarkovGenerator::new(int_rows(&[&[1, -1], &[0, 0]])),
            Err(MatrixError::PositiveDiagonal { row: 0 })
        ));
        assert!(matches!(
            MarkovGenerator::new(int_rows(&[&[1, -1], &[1, -1]])),
            Err(MatrixError::PositiveDiagonal { .. })
        ));
        assert!(matches!(
            MarkovGenerator::new(int_rows(&[&[-1, 1], &[-1, 1]])),
            Err(MatrixError::NegativeOffDiagonal { row: 1, col: 0 })
        ));
    }

    #[test]
    fn mixed_arithmetic_is_rejected() {
        let rows = vec![
            vec![Scalar::float(0.5), Scalar::ratio(1, 2)],
            vec![Scalar::float(0.5), Scalar::float(0.5)],
        ];
        assert_eq!(
            StochasticMatrix::new(rows, MatrixMode::Strict),
            Err(MatrixError::MixedArithmetic { row: 0, col: 1 })
        );
    }
}
