//! Orthogonal Procrustes alignment between two embedding spaces.

use nalgebra::DMatrix;

use super::space::EmbeddingSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Alignment {
    /// Orthogonal `dim x dim` matrix applied on the right of source row vectors.
    pub rotation: DMatrix<f64>,
    /// The source space with every vector rotated.
    pub aligned: EmbeddingSpace,
    /// Number of shared words the rotation was fitted on.
    pub shared: usize,
}

/// Stacks the rows of the words present in both spaces, in source order.
pub(crate) fn shared_rows(
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = source.dim();
    let shared: Vec<(&[f32], &[f32])> = source
        .words()
        .iter()
        .filter_map(|w| Some((source.row(w)?, target.row(w)?)))
        .collect();
    let n = shared.len();
    let x = DMatrix::from_fn(n, dim, |i, j| f64::from(shared[i].0[j]));
    let y = DMatrix::from_fn(n, dim, |i, j| f64::from(shared[i].1[j]));
    (x, y)
}

/// Finds the orthogonal `R` minimising `||XR - Y||_F` over the shared
/// vocabulary, where `X` holds source rows and `Y` target rows.
///
/// With `Y^T X = U S V^T`, the minimiser is `R = V U^T`. No centring or
/// scaling is applied and reflections are allowed.
pub fn align_procrustes(source: &EmbeddingSpace, target: &EmbeddingSpace) -> Result<Alignment> {
    if source.dim() != target.dim() {
        return Err(Error::Alignment(format!(
            "dimension mismatch: source {} vs target {}",
            source.dim(),
            target.dim()
        )));
    }
    let dim = source.dim();
    let (x, y) = shared_rows(source, target);
    let shared = x.nrows();
    if shared < dim {
        return Err(Error::Alignment(format!(
            "only {shared} shared words between decades {} and {}; need at least {dim}",
            source.decade(),
            target.decade()
        )));
    }

    let rotation = orthogonal_procrustes(&x, &y)?;

    let aligned = source.map_rows(source.decade(), |src, dst| {
        for (j, out) in dst.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (k, &v) in src.iter().enumerate() {
                acc += f64::from(v) * rotation[(k, j)];
            }
            *out = acc as f32;
        }
    });

    Ok(Alignment {
        rotation,
        aligned,
        shared,
    })
}

pub(crate) fn orthogonal_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = y.transpose() * x;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite cross-covariance".into()));
    }
    let svd = m
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD returned no singular vectors".into())),
    };
    Ok(v_t.transpose() * u.transpose())
}

/// `||X R - Y||_F` for the shared vocabulary of two spaces.
pub fn residual(source: &EmbeddingSpace, target: &EmbeddingSpace, rotation: &DMatrix<f64>) -> f64 {
    let (x, y) = shared_rows(source, target);
    (x * rotation - y).norm()
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_space(rng: &mut ChaCha8Rng, decade: i32, n: usize, dim: usize) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(
            decade,
            dim,
            (0..n).map(|i| {
                (
                    format!("w{i}"),
                    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>(),
                )
            }),
        )
        .unwrap()
    }

    fn orthogonality_residual(r: &DMatrix<f64>) -> f64 {
        let n = r.nrows();
        (r.transpose() * r - DMatrix::<f64>::identity(n, n)).amax()
    }

    #[test]
    fn self_alignment_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let space = random_space(&mut rng, 1900, 40, 6);
        let al = align_procrustes(&space, &space).unwrap();
        assert!((&al.rotation - DMatrix::<f64>::identity(6, 6)).amax() < 1e-8);
        for w in space.words() {
            let a = al.aligned.row(w).unwrap();
            let b = space.row(w).unwrap();
            for (p, q) in a.iter().zip(b) {
                assert!((f64::from(*p) - f64::from(*q)).abs() < 1e-8);
            }
        }
        assert!(orthogonality_residual(&al.rotation) < 1e-8);
    }

    #[test]
    fn too_few_shared_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_space(&mut rng, 1900, 3, 5);
        let b = random_space(&mut rng, 1910, 3, 5);
        assert!(matches!(align_procrustes(&a, &b), Err(Error::Alignment(_))));
        let c = random_space(&mut rng, 1910, 10, 4);
        assert!(matches!(align_procrustes(&a, &c), Err(Error::Alignment(_))));
    }

    #[test]
    fn residual_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..10 {
            let a = random_space(&mut rng, 1900, 30, 5);
            let b = random_space(&mut rng, 1910, 30, 5);
            let al = align_procrustes(&a, &b).unwrap();
            let before = residual(&a, &b, &DMatrix::identity(5, 5));
            let after = residual(&a, &b, &al.rotation);
            assert!(after <= before + 1e-12, "trial {trial}: {after} > {before}");
        }
    }
}
