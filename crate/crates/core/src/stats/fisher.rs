//! Two-dimensional Fisher discriminant projection of virtue, vice and
//! irrelevance seeds.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::embedding_store::QueryVector;
use crate::error::{Error, Result};

/// Ridge added to the within-class scatter so it stays invertible when there
/// are fewer seeds than dimensions.
pub const WITHIN_SCATTER_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ProjectedPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct FisherProjection {
    /// `dim x 2` matrix of discriminant directions, normalised so that
    /// `a^T S_w a = 1` for each column `a`.
    pub axes: DMatrix<f64>,
    /// Top two generalised eigenvalues, descending.
    pub eigenvalues: [f64; 2],
    pub queries: Vec<ProjectedPoint>,
    /// Projected means of the discriminated classes.
    pub class_centroids: Vec<ProjectedPoint>,
    /// Projected means of any extra labelled sets (e.g. fine-grained categories).
    pub anchors: Vec<ProjectedPoint>,
}

impl FisherProjection {
    pub fn project(&self, v: &[f64]) -> [f64; 2] {
        let v = DVector::from_column_slice(v);
        let p = self.axes.transpose() * v;
        [p[0], p[1]]
    }
}

fn mean_of(vectors: &[Vec<f64>], dim: usize) -> DVector<f64> {
    let mut m = DVector::zeros(dim);
    for v in vectors {
        m += DVector::from_column_slice(v);
    }
    m / vectors.len() as f64
}

/// Projects `queries` onto the top two discriminant directions of exactly
/// three labelled classes. `anchors` are further labelled sets whose means
/// are projected alongside.
pub fn fisher_projection(
    classes: &[(String, Vec<Vec<f64>>)],
    queries: &[QueryVector],
    anchors: &[(String, Vec<Vec<f64>>)],
) -> Result<FisherProjection> {
    if classes.len() != 3 {
        return Err(Error::Input(format!(
            "Fisher projection needs exactly 3 classes, got {}",
            classes.len()
        )));
    }
    let dim = classes[0]
        .1
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Input(format!("class `{}` is empty", classes[0].0)))?;
    for (label, vs) in classes {
        if vs.len() < 2 {
            return Err(Error::Input(format!(
                "class `{label}` needs at least 2 vectors, has {}",
                vs.len()
            )));
        }
        if vs.iter().any(|v| v.len() != dim) {
            return Err(Error::Input(format!("class `{label}` has mixed dimensions")));
        }
    }
    for q in queries {
        if q.dim() != dim {
            return Err(Error::Input(format!(
                "query `{}` has {} dimensions, expected {dim}",
                q.source,
                q.dim()
            )));
        }
    }

    let means: Vec<DVector<f64>> = classes.iter().map(|(_, vs)| mean_of(vs, dim)).collect();
    let total: usize = classes.iter().map(|(_, vs)| vs.len()).sum();
    let grand = classes
        .iter()
        .zip(&means)
        .fold(DVector::zeros(dim), |acc, ((_, vs), m)| acc + m * vs.len() as f64)
        / total as f64;

    let mut sw = DMatrix::<f64>::identity(dim, dim) * WITHIN_SCATTER_RIDGE;
    let mut sb = DMatrix::<f64>::zeros(dim, dim);
    for ((_, vs), m) in classes.iter().zip(&means) {
        for v in vs {
            let d = DVector::from_column_slice(v) - m;
            sw.ger(1.0, &d, &d, 1.0);
        }
        let d = m - &grand;
        sb.ger(vs.len() as f64, &d, &d, 1.0);
    }

    // S_w = L L^T; eigenvectors u of L^-1 S_b L^-T give a = L^-T u.
    let chol = sw
        .cholesky()
        .ok_or_else(|| Error::Numerical("within-class scatter is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(dim, dim))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let mut m = &l_inv * sb * l_inv.transpose();
    m = (&m + m.transpose()) * 0.5;
    let eig = m
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigen-decomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if dim < 2 {
        return Err(Error::Input("need at least 2 dimensions to project".into()));
    }
    let mut axes = DMatrix::<f64>::zeros(dim, 2);
    for (col, &idx) in order.iter().take(2).enumerate() {
        let u = eig.eigenvectors.column(idx);
        let a = l_inv.transpose() * u;
        axes.set_column(col, &a);
    }
    let eigenvalues = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]];

    let mut proj = FisherProjection {
        axes,
        eigenvalues,
        queries: Vec::new(),
        class_centroids: Vec::new(),
        anchors: Vec::new(),
    };
    let point = |proj: &FisherProjection, label: &str, v: &[f64]| {
        let [x, y] = proj.project(v);
        ProjectedPoint {
            label: label.to_string(),
            x,
            y,
        }
    };
    proj.queries = queries
        .iter()
        .map(|q| point(&proj, &q.source, &q.values))
        .collect();
    proj.class_centroids = classes
        .iter()
        .zip(&means)
        .map(|((label, _), m)| point(&proj, label, m.as_slice()))
        .collect();
    proj.anchors = anchors
        .iter()
        .filter(|(_, vs)| !vs.is_empty())
        .map(|(label, vs)| {
            if vs.iter().any(|v| v.len() != dim) {
                return Err(Error::Input(format!("anchor `{label}` has wrong dimension")));
            }
            Ok(point(&proj, label, mean_of(vs, dim).as_slice()))
        })
        .collect::<Result<_>>()?;
    Ok(proj)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn cluster(rng: &mut ChaCha8Rng, center: &[f64], n: usize, spread: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| center.iter().map(|c| c + rng.random_range(-spread..spread)).collect())
            .collect()
    }

    fn three_classes(rng: &mut ChaCha8Rng, dim: usize) -> Vec<(String, Vec<Vec<f64>>)> {
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        let c = vec![0.0; dim];
        a[0] = 10.0;
        b[1] = 10.0;
        vec![
            ("virtue".to_string(), cluster(rng, &a, 8, 0.5)),
            ("vice".to_string(), cluster(rng, &b, 8, 0.5)),
            ("irrelevance".to_string(), cluster(rng, &c, 8, 0.5)),
        ]
    }

    #[test]
    fn shape_and_class_mean_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let classes = three_classes(&mut rng, 10);
        let means: Vec<Vec<f64>> = classes
            .iter()
            .map(|(_, vs)| mean_of(vs, 10).as_slice().to_vec())
            .collect();
        let queries: Vec<QueryVector> = means
            .iter()
            .enumerate()
            .map(|(i, m)| QueryVector::new(m.clone(), format!("q{i}")))
            .collect();
        let proj = fisher_projection(&classes, &queries, &[]).unwrap();
        assert_eq!(proj.axes.shape(), (10, 2));
        assert_eq!(proj.queries.len(), 3);
        for (q, c) in proj.queries.iter().zip(&proj.class_centroids) {
            assert!((q.x - c.x).abs() < 1e-9 && (q.y - c.y).abs() < 1e-9);
        }
    }

    #[test]
    fn requires_three_classes_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut classes = three_classes(&mut rng, 4);
        classes.pop();
        assert!(fisher_projection(&classes, &[], &[]).is_err());
        let mut classes = three_classes(&mut rng, 4);
        classes[2].1.truncate(1);
        assert!(fisher_projection(&classes, &[], &[]).is_err());
    }

    #[test]
    fn anchors_are_projected_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let classes = three_classes(&mut rng, 5);
        let anchor = vec![("care+".to_string(), classes[0].1[..3].to_vec())];
        let proj = fisher_projection(&classes, &[], &anchor).unwrap();
        let expect = proj.project(mean_of(&anchor[0].1, 5).as_slice());
        assert_eq!(proj.anchors[0].label, "care+");
        assert!((proj.anchors[0].x - expect[0]).abs() < 1e-12);
    }

    fn pairwise(points: &[ProjectedPoint]) -> Vec<f64> {
        let mut d = Vec::new();
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                d.push(((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt());
            }
        }
        d
    }

    #[test]
    fn class_means_well_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let classes = three_classes(&mut rng, 10);
        let proj = fisher_projection(&classes, &[], &[]).unwrap();
        // within-class spread: largest distance of a projected seed to its centroid
        let mut spread = 0.0f64;
        for ((_, vs), c) in classes.iter().zip(&proj.class_centroids) {
            for v in vs {
                let [x, y] = proj.project(v);
                spread = spread.max(((x - c.x).powi(2) + (y - c.y).powi(2)).sqrt());
            }
        }
        for d in pairwise(&proj.class_centroids) {
            assert!(d > 5.0 * spread, "{d} vs spread {spread}");
        }
    }

    #[test]
    fn invariant_under_rotation() {
        let dim = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let classes = three_classes(&mut rng, dim);
        let queries: Vec<QueryVector> = (0..4)
            .map(|i| {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
                QueryVector::new(v, format!("q{i}"))
            })
            .collect();
        let raw = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let q = raw.qr().q();
        let rotate = |v: &[f64]| (&q * DVector::from_column_slice(v)).as_slice().to_vec();
        let rotated: Vec<(String, Vec<Vec<f64>>)> = classes
            .iter()
            .map(|(l, vs)| (l.clone(), vs.iter().map(|v| rotate(v)).collect()))
            .collect();
        let rq: Vec<QueryVector> = queries
            .iter()
            .map(|x| QueryVector::new(rotate(&x.values), x.source.clone()))
            .collect();
        let a = fisher_projection(&classes, &queries, &[]).unwrap();
        let b = fisher_projection(&rotated, &rq, &[]).unwrap();
        let mut pa = a.queries.clone();
        pa.extend(a.class_centroids.clone());
        let mut pb = b.queries.clone();
        pb.extend(b.class_centroids.clone());
        for (x, y) in pairwise(&pa).iter().zip(pairwise(&pb)) {
            assert!((x - y).abs() < 1e-8 * x.max(1.0), "{x} vs {y}");
        }
    }
}
