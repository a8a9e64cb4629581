use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Pca2d<T> {
    pub coords: Vec<[T; 2]>,
    pub components: [Vec<T>; 2],
    /// Eigenvalues of the covariance for the two components.
    pub variances: [T; 2],
    pub mean: Vec<T>,
}

fn mat_vec<T: Scalar>(m: &[T], d: usize, v: &[T], out: &mut [T]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&m[i * d..(i + 1) * d], v);
    }
}

/// Leading eigenpair of a symmetric PSD matrix by power iteration,
/// kept orthogonal to `against`.
fn leading_eigen<T: Scalar>(cov: &[T], d: usize, against: &[&[T]]) -> (T, Vec<T>) {
    // two Gram-Schmidt passes keep rounding noise out of the deflated space
    let project = |v: &mut Vec<T>| {
        for _ in 0..2 {
            for u in against {
                let c = dot(v, u);
                v.iter_mut().zip(*u).for_each(|(x, &y)| *x -= c * y);
            }
        }
    };
    let floor = T::of(TOLERANCE);
    // start from the column with the largest diagonal entry
    let j = (0..d)
        .max_by(|&a, &b| cov[a * d + a].partial_cmp(&cov[b * d + b]).expect("finite covariance"))
        .unwrap_or(0);
    let mut v: Vec<T> = (0..d).map(|i| cov[i * d + j]).collect();
    let before = norm(&v);
    project(&mut v);
    let n = norm(&v);
    if n <= floor * before {
        return (T::zero(), v);
    }
    v.iter_mut().for_each(|x| *x /= n);

    let mut w = vec![T::zero(); d];
    for _ in 0..MAX_ITERATIONS {
        mat_vec(cov, d, &v, &mut w);
        let before = norm(&w);
        project(&mut w);
        let n = norm(&w);
        if n <= floor * before {
            return (T::zero(), v);
        }
        w.iter_mut().for_each(|x| *x /= n);
        let change = v
            .iter()
            .zip(&w)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        std::mem::swap(&mut v, &mut w);
        if change < floor {
            break;
        }
    }
    mat_vec(cov, d, &v, &mut w);
    (dot(&v, &w), v)
}

/// Project mean-centered rows onto the top two principal axes of their
/// covariance. Each axis is signed so its largest-magnitude loading is
/// positive.
pub fn pca_project_2d<T: Scalar>(rows: &[Vec<T>]) -> Result<Pca2d<T>> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::param("PCA needs at least 3 points"));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::LengthMismatch(bad.len(), d));
    }
    let nt = T::from_usize(n).expect("count fits");
    let mut mean = vec![T::zero(); d];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, &x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= nt);
    let centered: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();

    let mut cov = vec![T::zero(); d * d];
    for r in &centered {
        for i in 0..d {
            let ri = r[i];
            if ri == T::zero() {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += ri * r[j];
            }
        }
    }
    let denom = T::from_usize(n - 1).expect("count fits");
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }

    let (l1, mut c1) = leading_eigen(&cov, d, &[]);
    let (l2, mut c2) = leading_eigen(&cov, d, &[&c1]);
    if l1.is_nan() || l2.is_nan() || l1 <= T::zero() || l2 <= l1 * T::of(TOLERANCE) {
        return Err(Error::invalid("data has rank < 2 after centering"));
    }
    for c in [&mut c1, &mut c2] {
        let lead = c
            .iter()
            .copied()
            .fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < T::zero() {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let coords = centered.iter().map(|r| [dot(r, &c1), dot(r, &c2)]).collect();
    Ok(Pca2d {
        coords,
        components: [c1, c2],
        variances: [l1, l2],
        mean,
    })
}
