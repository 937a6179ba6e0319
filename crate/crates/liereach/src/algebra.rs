//! Abstract Lie algebras given by structure constants.
//!
//! A [`LieAlgebraSpec`] fixes a basis e_1 … e_n and the real table
//! c_{ij}^k with [e_i, e_j] = Σ_k c_{ij}^k e_k. Elements are coordinate
//! vectors over this basis — numeric for point evaluations, exp-poly for
//! exact time-dependent work — and brackets reduce to bilinear contraction
//! against the table, so no truncation or rounding enters beyond the
//! constants themselves.

use crate::error::{Error, Result};
use crate::exppoly::ExpPoly;
use nalgebra::DVector;

/// Validation tolerance for the Jacobi identity (scaled by the square of the
/// largest structure constant).
pub const JACOBI_TOL: f64 = 1e-12;

/// A finite-dimensional real Lie algebra presented by structure constants.
#[derive(Clone, Debug)]
pub struct LieAlgebraSpec {
    names: Vec<String>,
    /// Dense row-major table: constants[(i*n + j)*n + k] = c_{ij}^k.
    constants: Vec<f64>,
}

impl LieAlgebraSpec {
    /// Builds and validates an algebra. `constants[i][j][k]` is c_{ij}^k.
    ///
    /// Fails when the table shape is wrong, antisymmetry c_{ij}^k = −c_{ji}^k
    /// is violated, or the Jacobi identity fails beyond [`JACOBI_TOL`]
    /// (scaled).
    pub fn new(names: Vec<String>, constants: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidAlgebra("algebra must have dimension ≥ 1".into()));
        }
        if constants.len() != n
            || constants
                .iter()
                .any(|o| o.len() != n || o.iter().any(|r| r.len() != n))
        {
            return Err(Error::InvalidAlgebra(format!(
                "structure-constant table must be {n}×{n}×{n}"
            )));
        }
        let mut dense = vec![0.0; n * n * n];
        for (i, plane) in constants.iter().enumerate() {
            for (j, row) in plane.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::InvalidAlgebra(format!(
                            "non-finite structure constant at [{i}][{j}][{k}]"
                        )));
                    }
                    // Normalize -0.0 so downstream comparisons and canonical
                    // output never see a signed zero.
                    dense[(i * n + j) * n + k] = if v == 0.0 { 0.0 } else { v };
                }
            }
        }
        let alg = LieAlgebraSpec {
            names,
            constants: dense,
        };
        alg.validate()?;
        Ok(alg)
    }

    /// Convenience constructor from a sparse list of (i, j, k, value)
    /// entries; the antisymmetric counterpart c_{ji}^k = −v is filled in
    /// automatically.
    pub fn from_sparse(names: Vec<String>, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let n = names.len();
        let mut table = vec![vec![vec![0.0; n]; n]; n];
        for &(i, j, k, v) in entries {
            if i >= n || j >= n || k >= n {
                return Err(Error::InvalidAlgebra(format!(
                    "structure-constant index ({i},{j},{k}) out of range for dimension {n}"
                )));
            }
            table[i][j][k] = v;
            table[j][i][k] = -v;
        }
        Self::new(names, table)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        // Antisymmetry must hold exactly: the tables we accept are written
        // down, not computed, so there is no rounding to forgive.
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.c(i, j, k) != -self.c(j, i, k) {
                        return Err(Error::InvalidAlgebra(format!(
                            "antisymmetry violated at [{i}][{j}][{k}]: {} vs {}",
                            self.c(i, j, k),
                            self.c(j, i, k)
                        )));
                    }
                }
            }
        }
        let defect = self.jacobi_defect();
        let scale = self.max_constant().max(1.0);
        if defect > JACOBI_TOL * scale * scale {
            return Err(Error::InvalidAlgebra(format!(
                "Jacobi identity violated: worst defect {defect:.3e} exceeds {:.3e}",
                JACOBI_TOL * scale * scale
            )));
        }
        Ok(())
    }

    /// Algebra dimension n.
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Basis element names.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index of a named basis element.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Structure constant c_{ij}^k.
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.constants[(i * n + j) * n + k]
    }

    /// Dense table reshaped to `[i][j][k]`, for serialization.
    pub fn table(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.c(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    /// Largest |c_{ij}^k|.
    pub fn max_constant(&self) -> f64 {
        self.constants.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Worst Jacobi defect max over (i,j,k,l) of
    /// |Σ_m (c_{jk}^m c_{im}^l + c_{ki}^m c_{jm}^l + c_{ij}^m c_{km}^l)|.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += self.c(j, k, m) * self.c(i, m, l)
                                + self.c(k, i, m) * self.c(j, m, l)
                                + self.c(i, j, m) * self.c(k, m, l);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Bracket of real coordinate vectors: [a, b]^k = Σ_{ij} a_i b_j c_{ij}^k.
    ///
    /// Accumulated over antisymmetrized pairs i < j, so swapping the
    /// arguments negates every addend in place and [b, a] = −[a, b] holds
    /// bit for bit, not merely up to rounding.
    pub fn bracket_real(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch {
                left: a.len(),
                right: b.len(),
                context: "structure-algebra coordinate vectors",
            });
        }
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let w = a[i] * b[j] - a[j] * b[i];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let c = self.c(i, j, k);
                    if c != 0.0 {
                        out[k] += w * c;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Bracket of exp-poly coordinate vectors, computed exactly:
    /// [a(t), b(t)]^k = Σ_{ij} a_i(t)·b_j(t)·c_{ij}^k.
    pub fn bracket_exppoly(&self, a: &[ExpPoly], b: &[ExpPoly]) -> Result<Vec<ExpPoly>> {
        let n = self.dim();
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch {
                left: a.len(),
                right: b.len(),
                context: "structure-algebra coordinate vectors",
            });
        }
        let mut out = vec![ExpPoly::zero(); n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let prod = ai.mul(bj);
                if prod.is_zero() {
                    continue;
                }
                for (k, slot) in out.iter_mut().enumerate() {
                    let c = self.c(i, j, k);
                    if c != 0.0 {
                        *slot = slot.add(&prod.scale_real(c));
                    }
                }
            }
        }
        Ok(out)
    }
}
