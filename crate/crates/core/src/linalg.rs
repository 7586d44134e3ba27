//! Small helpers over dense complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Largest absolute entry of `m`, 0 for an empty matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// max |M - M†| over all entries.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Relative Hermiticity check: max|M - M†| < tol·max|M| (absolute for near-zero M).
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    let scale = max_abs(m).max(1.0);
    hermiticity_defect(m) < tol * scale
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Identity of dimension n.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Trace of a complex matrix.
pub fn trace(m: &CMat) -> Complex64 {
    let mut t = Complex64::ZERO;
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// Matrix 1-norm (maximum absolute column sum).
fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a 13th-order Padé
/// approximant. Intended for small generators (Liouvillian superoperators);
/// the cost is a handful of dense products per call.
pub fn expm(a: &CMat) -> CMat {
    const PADE13: [f64; 14] = [
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
    let norm = one_norm(a);
    // θ13 ≈ 5.37 is the Padé-13 accuracy bound.
    let s = if norm > 5.37 { (norm / 5.37).log2().ceil() as i32 } else { 0 };
    let scaled = a * Complex64::new(0.5f64.powi(s), 0.0);

    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let id = eye(n);
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);

    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &id * c(0);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular for scaled inputs");
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_dimensions_and_entries() {
        let a = CMat::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let b = eye(3);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(0, 3)], Complex64::new(2.0, 0.0));
        assert_eq!(k[(1, 4)], Complex64::new(2.0, 0.0));
        assert_eq!(k[(3, 0)], Complex64::ZERO);
    }

    #[test]
    fn expm_matches_eigendecomposition_for_hermitian_generators() {
        // Oracle: exp(−iH) via the spectral decomposition.
        let mut h = CMat::zeros(3, 3);
        h[(0, 0)] = Complex64::new(120.0, 0.0);
        h[(2, 2)] = Complex64::new(-40.0, 0.0);
        h[(0, 1)] = Complex64::new(7.0, 2.0);
        h[(1, 0)] = Complex64::new(7.0, -2.0);
        h[(1, 2)] = Complex64::new(3.0, 0.0);
        h[(2, 1)] = Complex64::new(3.0, 0.0);
        let gen = &h * Complex64::new(0.0, -1.0);
        let direct = expm(&gen);
        let eig = h.clone().symmetric_eigen();
        let mut scaled = eig.eigenvectors.clone();
        for c in 0..3 {
            let phase = Complex64::from_polar(1.0, -eig.eigenvalues[c]);
            for r in 0..3 {
                scaled[(r, c)] *= phase;
            }
        }
        let spectral = &scaled * eig.eigenvectors.adjoint();
        let defect = max_abs(&(direct - spectral));
        assert!(defect < 1e-11, "expm vs spectral defect {defect}");
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMat::zeros(4, 4);
        assert!(max_abs(&(expm(&z) - eye(4))) < 1e-15);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let mut m = eye(2);
        assert_eq!(hermiticity_defect(&m), 0.0);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0); // not the conjugate
        assert!(hermiticity_defect(&m) > 1.9);
    }
}
