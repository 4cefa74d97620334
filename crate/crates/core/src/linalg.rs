//! Exact rational matrices: rank, right kernel and affine solution sets.
//!
//! Elimination runs fraction-free (Bareiss) over big integers after each row
//! is cleared of denominators; rationals only reappear in the final reduced
//! row echelon form. Pivots are the first nonzero entry in column order.

use num::{BigInt, Integer, One, Zero};

use crate::model::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    /// `cols` is needed to describe matrices with no rows.
    pub fn from_rows(cols: usize, rows: Vec<Vec<Rational>>) -> Self {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix row");
            data.extend(row);
        }
        Self {
            rows: nrows,
            cols,
            data,
        }
    }

    pub fn from_integers<R: AsRef<[i64]>>(cols: usize, rows: &[R]) -> Self {
        Self::from_rows(
            cols,
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| Rational::from_integer(v.into())).collect())
                .collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_rows(self.cols, rows.iter().map(|&r| self.row(r).to_vec()).collect())
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        Self::from_rows(
            cols.len(),
            (0..self.rows)
                .map(|r| cols.iter().map(|&c| self.get(r, c).clone()).collect())
                .collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_rows(self.rows, (0..self.cols).map(|c| self.column(c)).collect())
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// Matrix whose columns are the given vectors (each of length `nrows`).
    pub fn from_columns(nrows: usize, columns: &[Vec<Rational>]) -> Self {
        Self::from_rows(
            columns.len(),
            (0..nrows)
                .map(|r| columns.iter().map(|c| c[r].clone()).collect())
                .collect(),
        )
    }

    pub fn mul(&self, other: &RationalMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let cols: Vec<Vec<Rational>> = (0..other.cols).map(|c| self.mul_vec(&other.column(c))).collect();
        Self::from_columns(self.rows, &cols)
    }

    pub fn rank(&self) -> usize {
        echelon(&integer_rows(&self.row_vecs()), self.cols).pivots.len()
    }

    /// Reduced row echelon form.
    pub fn rref(&self) -> Rref {
        Rref::of(&self.row_vecs(), self.cols)
    }

    /// Basis of `{v : M v = 0}`, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        self.rref().kernel_basis()
    }

    /// Full solution set of `M x = b`.
    pub fn solve(&self, b: &[Rational]) -> AffineSolutionSet {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let augmented: Vec<Vec<Rational>> = (0..self.rows)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.push(b[r].clone());
                row
            })
            .collect();
        let rref = Rref::of(&augmented, self.cols + 1);
        if rref.pivots.last() == Some(&self.cols) {
            return AffineSolutionSet::empty();
        }
        let mut particular = vec![Rational::zero(); self.cols];
        for (row, &p) in rref.rows.iter().zip(&rref.pivots) {
            particular[p] = row[self.cols].clone();
        }
        let coefficient_part = Rref {
            cols: self.cols,
            pivots: rref.pivots.clone(),
            rows: rref
                .rows
                .iter()
                .map(|r| r[..self.cols].to_vec())
                .collect(),
        };
        AffineSolutionSet {
            particular: Some(particular),
            kernel_basis: coefficient_part.kernel_basis(),
        }
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// `{particular + span(kernel_basis)}`, or the empty set when `particular`
/// is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolutionSet {
    pub particular: Option<Vec<Rational>>,
    pub kernel_basis: Vec<Vec<Rational>>,
}

impl AffineSolutionSet {
    pub fn empty() -> Self {
        Self {
            particular: None,
            kernel_basis: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.particular.is_none()
    }

    /// Dimension of the solution set, `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.particular.as_ref().map(|_| self.kernel_basis.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rref {
    pub cols: usize,
    /// Pivot column of each nonzero row.
    pub pivots: Vec<usize>,
    /// The nonzero rows; pivot entries are 1 and pivot columns are otherwise 0.
    pub rows: Vec<Vec<Rational>>,
}

impl Rref {
    fn of(rows: &[Vec<Rational>], cols: usize) -> Self {
        let ech = echelon(&integer_rows(rows), cols);
        let rank = ech.pivots.len();
        let mut out: Vec<Vec<Rational>> = ech.rows[..rank]
            .iter()
            .zip(&ech.pivots)
            .map(|(row, &p)| {
                let lead = &row[p];
                row.iter()
                    .map(|v| Rational::new(v.clone(), lead.clone()))
                    .collect()
            })
            .collect();
        for i in (0..rank).rev() {
            let p = ech.pivots[i];
            let (above, rest) = out.split_at_mut(i);
            let pivot_row = &rest[0];
            for row in above.iter_mut() {
                if row[p].is_zero() {
                    continue;
                }
                let factor = row[p].clone();
                for (v, w) in row.iter_mut().zip(pivot_row).skip(p) {
                    *v -= &factor * w;
                }
            }
        }
        Self {
            cols,
            pivots: ech.pivots,
            rows: out,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|c| !self.pivots.contains(c)).collect()
    }

    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        self.free_columns()
            .into_iter()
            .map(|f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    v[p] = -row[f].clone();
                }
                v
            })
            .collect()
    }
}

/// Each row multiplied by the lcm of its denominators.
fn integer_rows(rows: &[Vec<Rational>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter()
                .map(|v| v.numer() * (&lcm / v.denom()))
                .collect()
        })
        .collect()
}

struct Echelon {
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

/// Fraction-free Gaussian elimination. Every division is exact: after `k`
/// pivots each trailing entry is a `(k+1)`-minor of the input.
fn echelon(rows: &[Vec<BigInt>], cols: usize) -> Echelon {
    let mut a = rows.to_vec();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == a.len() {
            break;
        }
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let (head, tail) = a.split_at_mut(r + 1);
        let pivot_row = &head[r];
        let lead = &pivot_row[c];
        for row in tail.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let num = lead * &row[j] - &factor * &pivot_row[j];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                row[j] = q;
            }
            row[c] = BigInt::zero();
        }
        prev = lead.clone();
        pivots.push(c);
        r += 1;
    }
    Echelon { rows: a, pivots }
}
