use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::GeometryError;
use crate::geometry::FeatureMatrix;

/// Points in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPointSet {
    points: Vec<[f64; 2]>,
}

impl PlanarPointSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        for (i, p) in points.iter().enumerate() {
            for (c, v) in p.iter().enumerate() {
                if !v.is_finite() {
                    return Err(GeometryError::NonFinite { row: i, col: c });
                }
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// `x,y` per line.
    pub fn to_csv(&self) -> String {
        self.points
            .iter()
            .map(|[x, y]| format!("{x},{y}\n"))
            .collect()
    }
}

/// Deterministic PCA onto the two leading principal directions.
///
/// Rows are centred; each loading vector is signed so that its
/// largest-magnitude entry is positive. When fewer than two directions carry
/// variance, the missing axes are filled with a small deterministic jitter so
/// the output points stay distinct and non-collinear.
pub fn project_2d(x: &FeatureMatrix) -> Result<PlanarPointSet, GeometryError> {
    let n = x.rows();
    if n < 3 {
        return Err(GeometryError::TooFewPoints { needed: 3, got: n });
    }
    let mut centred = x.matrix().clone();
    for mut col in centred.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    let loadings = leading_directions(&centred, 2);
    let mut coords = vec![[0.0f64; 2]; n];
    let mut scale = 0.0f64;
    for (axis, load) in loadings.iter().enumerate() {
        if let Some(v) = load {
            let y = &centred * v;
            for i in 0..n {
                coords[i][axis] = y[i];
            }
            scale = scale.max((y.norm_squared() / n as f64).sqrt());
        }
    }
    let jitter = 1e-6 * scale.max(1.0);
    for (axis, load) in loadings.iter().enumerate() {
        if load.is_none() {
            for (i, c) in coords.iter_mut().enumerate() {
                c[axis] = jitter * unit_hash(i as u64, axis as u64);
            }
        }
    }
    PlanarPointSet::new(coords)
}

/// Top-`count` unit loading vectors of the centred data, `None` for
/// directions without variance.
fn leading_directions(centred: &DMatrix<f64>, count: usize) -> Vec<Option<DVector<f64>>> {
    let (n, d) = centred.shape();
    let mut out = Vec::with_capacity(count);
    let (vals, vecs, via_gram) = if d <= n {
        let eig = SymmetricEigen::new(centred.transpose() * centred);
        (eig.eigenvalues, eig.eigenvectors, false)
    } else {
        let eig = SymmetricEigen::new(centred * centred.transpose());
        (eig.eigenvalues, eig.eigenvectors, true)
    };
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let top = vals
        .get(order.first().copied().unwrap_or(0))
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    for k in 0..count {
        let Some(&idx) = order.get(k) else {
            out.push(None);
            continue;
        };
        let lambda = vals[idx];
        if !(lambda > 1e-20 * top.max(1.0)) {
            out.push(None);
            continue;
        }
        let mut v: DVector<f64> = if via_gram {
            let u = vecs.column(idx).into_owned();
            centred.transpose() * u / lambda.sqrt()
        } else {
            vecs.column(idx).into_owned()
        };
        let norm = v.norm();
        v /= norm;
        let lead = (0..v.len())
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        if v[lead] < 0.0 {
            v = -v;
        }
        out.push(Some(v));
    }
    out
}

/// Deterministic value in [-1, 1] (splitmix64 finaliser).
fn unit_hash(i: u64, salt: u64) -> f64 {
    let mut z = i.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}
