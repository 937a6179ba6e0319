//! Real-rank, least-squares, and matrix-exponential utilities.
//!
//! All rank and membership decisions in this crate are made over ℝ after
//! "realification" (splitting complex data into real ‖ imaginary parts):
//! the algebras under study are real Lie algebras of skew-Hermitian
//! operators, and tangent spaces to the unit sphere of states are real,
//! so a complex rank would overcount controllable directions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Flattens a complex vector into the real vector (Re v ‖ Im v).
pub fn realify_vector(v: &DVector<Complex64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Flattens a complex matrix column-major into (Re vec M ‖ Im vec M).
pub fn realify_matrix(m: &DMatrix<Complex64>) -> DVector<f64> {
    let n = m.nrows() * m.ncols();
    let flat = m.as_slice();
    DVector::from_fn(2 * n, |i, _| if i < n { flat[i].re } else { flat[i - n].im })
}

/// Rank over ℝ of a set of complex vectors, via SVD of the realified stack.
///
/// Rank counts singular values exceeding `tol · σ_max`; an empty or all-zero
/// set has rank 0. All vectors must share one length.
pub fn realified_rank(vectors: &[DVector<Complex64>], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let len = vectors[0].len();
    assert!(
        vectors.iter().all(|v| v.len() == len),
        "realified_rank requires equal-length vectors"
    );
    let cols: Vec<DVector<f64>> = vectors.iter().map(realify_vector).collect();
    real_rank(&cols, tol)
}

/// Rank over ℝ of real column vectors, via SVD thresholding at `tol · σ_max`.
pub fn real_rank(cols: &[DVector<f64>], tol: f64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let m = DMatrix::from_columns(cols);
    let svals = m.singular_values();
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return 0;
    }
    svals.iter().filter(|&&s| s > tol * smax).count()
}

/// Maximum entry magnitude of (M + M†): 0 for an exactly skew-Hermitian M.
pub fn skew_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = (m[(i, j)] + m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// True when every entry of the matrix is finite.
pub fn all_finite(m: &DMatrix<Complex64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Commutator [X, Y] = XY − YX.
pub fn commutator(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    x * y - y * x
}

/// Matrix exponential by scaling-and-squaring with a degree-13 Padé
/// approximant (Higham's method, fixed at the top degree for simplicity:
/// desk-scale matrices make the extra few multiplies irrelevant).
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    const THETA_13: f64 = 5.371920351148152;
    // Padé-13 numerator coefficients b₀..b₁₃.
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");

    // 1-norm (max column sum of entry magnitudes).
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::new(0.5f64.powi(s), 0.0);
    let m = a * scale;

    let id = DMatrix::<Complex64>::identity(n, n);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let cb = |k: usize| Complex64::new(B[k], 0.0);

    let u_inner = &m6 * (&m6 * cb(13) + &m4 * cb(11) + &m2 * cb(9))
        + &m6 * cb(7)
        + &m4 * cb(5)
        + &m2 * cb(3)
        + &id * cb(1);
    let u = &m * u_inner;
    let v = &m6 * (&m6 * cb(12) + &m4 * cb(10) + &m2 * cb(8))
        + &m6 * cb(6)
        + &m4 * cb(4)
        + &m2 * cb(2)
        + &id * cb(0);

    // Solve (V − U)·R = (V + U).
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("Padé denominator is singular; matrix norm out of range");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Solves the real least-squares problem min_λ ‖x − Σ λᵢ·basisᵢ‖ and returns
/// `(λ, residual_norm)`. An empty basis yields `([], ‖x‖)`.
pub fn lstsq(basis: &[DVector<f64>], x: &DVector<f64>) -> (Vec<f64>, f64) {
    if basis.is_empty() {
        return (Vec::new(), x.norm());
    }
    let a = DMatrix::from_columns(basis);
    let svd = a.clone().svd(true, true);
    let lambda = svd
        .solve(x, 1e-13)
        .expect("SVD solve cannot fail when U/V are computed");
    let residual = (x - &a * &lambda).norm();
    (lambda.iter().cloned().collect(), residual)
}

/// Incremental real-span tracker used by closure sweeps: candidates are
/// admitted exactly when they raise the rank of the tracked set.
///
/// Admission is screened with twice-applied Gram–Schmidt projection (DGKS
/// re-orthogonalization); closure re-certifies the final count with a full
/// SVD, so the screening never silently degrades the basis invariant.
pub struct SpanTracker {
    ortho: Vec<DVector<f64>>,
    tol: f64,
    scale: f64,
}

impl SpanTracker {
    /// Creates a tracker with the given relative admission tolerance.
    pub fn new(tol: f64) -> Self {
        SpanTracker {
            ortho: Vec::new(),
            tol,
            scale: 0.0,
        }
    }

    /// Number of independent directions admitted so far.
    pub fn count(&self) -> usize {
        self.ortho.len()
    }

    /// Norm of the component of `v` orthogonal to the tracked span.
    pub fn residual_norm(&self, v: &DVector<f64>) -> f64 {
        self.project_residual(v).norm()
    }

    fn project_residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.ortho {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        r
    }

    /// Whether `v` would raise the rank, without admitting it. Used when a
    /// size cap is hit, to distinguish a saturated span from a truncation.
    pub fn would_admit(&self, v: &DVector<f64>) -> bool {
        let vn = v.norm();
        vn.is_finite() && vn > 0.0 && self.residual_norm(v) > self.tol * self.scale.max(vn)
    }

    /// Admits `v` iff it raises the rank; returns whether it was admitted.
    pub fn try_add(&mut self, v: &DVector<f64>) -> bool {
        let vn = v.norm();
        if !(vn.is_finite()) || vn == 0.0 {
            return false;
        }
        let r = self.project_residual(v);
        let rn = r.norm();
        if rn > self.tol * self.scale.max(vn) {
            self.ortho.push(&r / rn);
            self.scale = self.scale.max(vn);
            true
        } else {
            false
        }
    }
}
