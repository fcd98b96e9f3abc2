use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dims(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on 0, and a 0-column matrix has no data anyway
        let width = self.cols.max(1);
        self.data
            .chunks_exact(width)
            .take(if self.cols == 0 { 0 } else { self.rows })
    }

    pub fn col_vec(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        matmul(self, other)
    }

    /// `self · v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dims(format!(
                "matvec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(self.row_iter().map(|row| dot(row, v)).collect())
    }

    /// `selfᵀ · self`, exploiting symmetry.
    #[allow(clippy::needless_range_loop)]
    pub fn gram(&self) -> Matrix {
        let k = self.cols;
        let mut g = Matrix::zeros(k, k);
        for row in self.row_iter() {
            for i in 0..k {
                let ri = row[i];
                for j in i..k {
                    g.data[i * k + j] += ri * row[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                g.data[i * k + j] = g.data[j * k + i];
            }
        }
        g
    }

    /// `selfᵀ · v`.
    pub fn t_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::dims(format!(
                "transpose-matvec: {}x{} with vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &vi) in self.row_iter().zip(v) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x * vi;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard matrix product `a · b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::dims(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a`. A pivot is rejected when it is not above
    /// `n · ε · max|a_ii|`, which catches exact rank deficiency that rounding
    /// would otherwise leave as a tiny positive pivot.
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows;
        if a.cols != n {
            return Err(Error::dims(format!(
                "cholesky: matrix is {}x{}, not square",
                a.rows, a.cols
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let (x, y) = (a.get(i, j), a.get(j, i));
                let scale = x.abs().max(y.abs()).max(1.0);
                if (x - y).abs() > 1e-10 * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(a.get(i, i).abs()));
        let floor = n as f64 * f64::EPSILON * max_diag;

        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = a.get(j, j);
            for k in 0..j {
                pivot -= l[j * n + k] * l[j * n + k];
            }
            if !(pivot > floor) {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            let ljj = pivot.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::dims(format!(
                "cholesky solve: system of size {n}, right-hand side has {} rows",
                b.rows
            )));
        }
        let l = &self.lower;
        let mut x = b.clone();
        for c in 0..b.cols {
            // forward: L z = b
            for i in 0..n {
                let mut s = x.get(i, c);
                for k in 0..i {
                    s -= l[i * n + k] * x.get(k, c);
                }
                x.set(i, c, s / l[i * n + i]);
            }
            // backward: Lᵀ x = z
            for i in (0..n).rev() {
                let mut s = x.get(i, c);
                for k in i + 1..n {
                    s -= l[k * n + i] * x.get(k, c);
                }
                x.set(i, c, s / l[i * n + i]);
            }
        }
        if !x.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: n.saturating_sub(1),
                pivot: f64::NAN,
            });
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve(&Matrix::column(b))?.into_data())
    }
}

/// Solves `a · x = b` for symmetric positive definite `a`.
pub fn cholesky_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if b.rows != a.rows {
        return Err(Error::dims(format!(
            "cholesky solve: {}x{} system, right-hand side has {} rows",
            a.rows, a.cols, b.rows
        )));
    }
    Cholesky::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let i2 = Matrix::identity(2);
        assert_eq!(
            matmul(&i2, &m(&[&[2.0], &[3.0]])).unwrap(),
            m(&[&[2.0], &[3.0]])
        );
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            matmul(&a, &Matrix::zeros(2, 2)).unwrap(),
            Matrix::zeros(2, 2)
        );
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), m(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cholesky_examples() {
        let x = cholesky_solve(&Matrix::identity(3), &Matrix::column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(x.data(), &[1.0, 2.0, 3.0]);

        let x = cholesky_solve(
            &m(&[&[4.0, 0.0], &[0.0, 9.0]]),
            &Matrix::column(&[8.0, 27.0]),
        )
        .unwrap();
        assert_eq!(x.data(), &[2.0, 3.0]);

        let x = cholesky_solve(
            &m(&[&[4.0, 2.0], &[2.0, 3.0]]),
            &Matrix::column(&[10.0, 8.0]),
        )
        .unwrap();
        assert!((x.get(0, 0) - 1.75).abs() < 1e-14);
        assert!((x.get(1, 0) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn cholesky_errors() {
        let indefinite = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            cholesky_solve(&indefinite, &Matrix::column(&[1.0, 1.0])),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let asym = m(&[&[2.0, 1.0], &[0.0, 2.0]]);
        assert!(matches!(
            cholesky_solve(&asym, &Matrix::column(&[1.0, 1.0])),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            cholesky_solve(&Matrix::identity(2), &Matrix::column(&[1.0])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn gram_matches_explicit_product() {
        let a = m(&[
            &[1.0, 2.0, 0.5],
            &[3.0, -1.0, 2.0],
            &[0.0, 4.0, 1.0],
            &[2.0, 2.0, 2.0],
        ]);
        assert_eq!(a.gram(), matmul(&a.transpose(), &a).unwrap());
        let v = [1.0, -2.0, 0.5, 3.0];
        let via_t = a.transpose().matvec(&v).unwrap();
        assert_eq!(a.t_matvec(&v).unwrap(), via_t);
    }

    #[test]
    fn serde_rejects_inconsistent_shape() {
        let bad = r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }
}
