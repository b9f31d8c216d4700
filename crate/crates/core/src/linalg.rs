//! Small fixed-size dense matrices over any [`Real`] scalar.
//!
//! Only what the propagator and the observables need: products, the matrix
//! exponential, an LU determinant, a semidefinite Cholesky factor and the
//! eigenvalues of a symmetric matrix.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<T, const N: usize> {
    data: [[T; N]; N],
}

pub type Mat4<T = f64> = Matrix<T, 4>;
pub type Mat8<T = f64> = Matrix<T, 8>;
pub type Vec4<T = f64> = [T; 4];

impl<T: Real, const N: usize> Matrix<T, N> {
    pub fn from_rows(data: [[T; N]; N]) -> Self {
        Self { data }
    }

    pub fn zeros() -> Self {
        Self { data: [[T::zero(); N]; N] }
    }

    pub fn identity() -> Self {
        Self::from_diagonal(&[T::one(); N])
    }

    pub fn from_diagonal(diag: &[T; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = diag[i];
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> &[[T; N]; N] {
        &self.data
    }

    pub fn map<U: Real>(&self, mut f: impl FnMut(T) -> U) -> Matrix<U, N> {
        Matrix::from_fn(|i, j| f(self.data[i][j]))
    }

    pub fn to_f64(&self) -> Matrix<f64, N> {
        self.map(T::to_f64)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..N {
            t += self.data[i][i];
        }
        t
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let mut best = T::zero();
        for j in 0..N {
            let mut col = T::zero();
            for i in 0..N {
                col += self.data[i][j].abs();
            }
            best = best.max(col);
        }
        best
    }

    pub fn frobenius(&self) -> T {
        let mut s = T::zero();
        for row in &self.data {
            for &x in row {
                s += x * x;
            }
        }
        s.sqrt()
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        let half = T::from_f64(0.5);
        Self::from_fn(|i, j| (self.data[i][j] + self.data[j][i]) * half)
    }

    pub fn mul_vec(&self, v: &[T; N]) -> [T; N] {
        let mut out = [T::zero(); N];
        for i in 0..N {
            let mut acc = T::zero();
            for j in 0..N {
                acc += self.data[i][j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// `A · B · Aᵀ`.
    pub fn congruence(&self, b: &Self) -> Self {
        *self * *b * self.transpose()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    ///
    /// Backward stable: the relative error is bounded by the condition
    /// number times the unit roundoff, unlike cofactor expansion whose error
    /// scales with the product of the entry magnitudes.
    pub fn determinant(&self) -> T {
        let mut a = self.data;
        let mut det = T::one();
        for k in 0..N {
            let mut p = k;
            for i in k + 1..N {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            if a[p][k] == T::zero() {
                return T::zero();
            }
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            let pivot = a[k][k];
            det *= pivot;
            for i in k + 1..N {
                let f = a[i][k] / pivot;
                for j in k + 1..N {
                    let t = a[k][j];
                    a[i][j] -= f * t;
                }
            }
        }
        det
    }

    /// Lower-triangular `L` with `L·Lᵀ = self` for a symmetric positive
    /// semidefinite matrix. Pivots below `tol` times the largest diagonal
    /// entry are treated as exact zeros, which zeroes the corresponding column.
    pub fn cholesky_semidefinite(&self, tol: T) -> Self {
        let mut scale = T::zero();
        for i in 0..N {
            scale = scale.max(self.data[i][i].abs());
        }
        let floor = tol * scale;
        let mut l = Self::zeros();
        for j in 0..N {
            let mut d = self.data[j][j];
            for k in 0..j {
                d -= l.data[j][k] * l.data[j][k];
            }
            if d <= floor {
                continue;
            }
            let root = d.sqrt();
            l.data[j][j] = root;
            for i in j + 1..N {
                let mut s = self.data[i][j];
                for k in 0..j {
                    s -= l.data[i][k] * l.data[j][k];
                }
                l.data[i][j] = s / root;
            }
        }
        l
    }

    /// Matrix exponential by scaling and squaring of a truncated Taylor series.
    ///
    /// The argument is scaled by `2⁻ˢ` until its 1-norm is at most 1/2; the
    /// series then runs for at least 20 terms and until the last term falls
    /// below the unit roundoff of `T` relative to the partial sum. No
    /// eigendecomposition is involved, so defective matrices are handled
    /// like any other.
    pub fn exp(&self) -> Self {
        let norm = self.norm1().to_f64();
        assert!(norm.is_finite(), "matrix exponential of a non-finite matrix");
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let mut scale = T::one();
        let half = T::from_f64(0.5);
        for _ in 0..squarings {
            scale *= half;
        }
        let a = self.scale(scale);

        let eps = T::epsilon();
        let mut sum = Self::identity();
        let mut term = Self::identity();
        let mut k = 1usize;
        loop {
            term = (term * a).scale(T::one() / T::from_usize(k));
            sum = sum + term;
            if k >= 20 && term.norm1() <= eps * sum.norm1() {
                break;
            }
            k += 1;
            assert!(k < 200, "Taylor series failed to converge");
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    /// Eigenvalues of a symmetric matrix in ascending order.
    ///
    /// Householder reduction to tridiagonal form followed by implicit QL
    /// iterations with Wilkinson shifts; the absolute error is a small
    /// multiple of `ε·‖A‖`.
    pub fn symmetric_eigenvalues(&self) -> [T; N] {
        let (mut d, mut e) = self.tridiagonalize();
        tridiagonal_ql(&mut d, &mut e);
        d.sort_by(|a, b| a.partial_cmp(b).expect("NaN eigenvalue"));
        d
    }

    /// Householder tridiagonalization: returns (diagonal, subdiagonal) with
    /// `e[i]` coupling `d[i]` and `d[i + 1]`.
    fn tridiagonalize(&self) -> ([T; N], [T; N]) {
        let mut a = self.symmetrized().data;
        let mut d = [T::zero(); N];
        let mut e = [T::zero(); N];
        for k in 0..N.saturating_sub(2) {
            // Reflect column k below the subdiagonal onto a multiple of e_{k+1}.
            let mut alpha = T::zero();
            for i in k + 1..N {
                alpha += a[i][k] * a[i][k];
            }
            alpha = alpha.sqrt();
            if alpha == T::zero() {
                continue;
            }
            if a[k + 1][k] > T::zero() {
                alpha = -alpha;
            }
            let mut v = [T::zero(); N];
            v[k + 1] = a[k + 1][k] - alpha;
            for i in k + 2..N {
                v[i] = a[i][k];
            }
            let mut vnorm2 = T::zero();
            for i in k + 1..N {
                vnorm2 += v[i] * v[i];
            }
            if vnorm2 == T::zero() {
                continue;
            }
            let two = T::from_f64(2.0);
            // p = 2 A v / (vᵀv), K = (vᵀp)/(vᵀv), w = p − K v; A ← A − v wᵀ − w vᵀ.
            let mut p = [T::zero(); N];
            for i in k..N {
                let mut s = T::zero();
                for j in k + 1..N {
                    s += a[i][j] * v[j];
                }
                p[i] = two * s / vnorm2;
            }
            let mut vp = T::zero();
            for i in k + 1..N {
                vp += v[i] * p[i];
            }
            let kk = vp / (two * vnorm2);
            let mut w = [T::zero(); N];
            for i in k..N {
                w[i] = p[i] - kk * two * v[i];
            }
            for i in k..N {
                for j in k..N {
                    a[i][j] = a[i][j] - v[i] * w[j] - w[i] * v[j];
                }
            }
        }
        for i in 0..N {
            d[i] = a[i][i];
            if i + 1 < N {
                e[i] = a[i + 1][i];
            }
        }
        (d, e)
    }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// On return `d` holds the eigenvalues (unordered); `e` is destroyed.
fn tridiagonal_ql<T: Real, const N: usize>(d: &mut [T; N], e: &mut [T; N]) {
    if N == 0 {
        return;
    }
    let eps = T::epsilon();
    let two = T::from_f64(2.0);
    e[N - 1] = T::zero();
    for l in 0..N {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < N {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = T::hypot(g, T::one());
            let signed_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = T::hypot(f, g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
}

impl<T, const N: usize> Index<(usize, usize)> for Matrix<T, N> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i][j]
    }
}

impl<T, const N: usize> IndexMut<(usize, usize)> for Matrix<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i][j]
    }
}

impl<T: Real, const N: usize> Add for Matrix<T, N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl<T: Real, const N: usize> Sub for Matrix<T, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl<T: Real, const N: usize> Neg for Matrix<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|x| -x)
    }
}

impl<T: Real, const N: usize> Mul for Matrix<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..N {
                    out.data[i][j] += a * rhs.data[k][j];
                }
            }
        }
        out
    }
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, tiny)`.
pub fn relative_frobenius<T: Real, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> f64 {
    let denom = b.frobenius().to_f64().max(f64::MIN_POSITIVE);
    (*a - *b).frobenius().to_f64() / denom
}
