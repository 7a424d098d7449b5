use nalgebra::{DMatrix, DVector};

/// Functions of the current state used to approximate conditional
/// expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// All monomials of total degree `<= degree` in the standardized state.
    Polynomial { degree: usize },
    /// Indicators of `count` equiprobable bins of the first state
    /// coordinate. Fitted values are bin averages, so the fit is monotone
    /// in the target and maps non-negative targets to non-negative values.
    Bins { count: usize },
}

impl Default for Basis {
    fn default() -> Self {
        Basis::Polynomial { degree: 3 }
    }
}

/// Result of one least-squares projection.
#[derive(Debug, Clone)]
pub struct Fit {
    pub fitted: Vec<f64>,
    pub residual_sd: f64,
}

#[derive(Debug, Clone)]
enum Model {
    Constant,
    Poly {
        design: DMatrix<f64>,
        gram_pinv: DMatrix<f64>,
    },
    Bins {
        bin: Vec<usize>,
        count: usize,
    },
}

/// Projection onto a basis built from one set of sample points, reusable
/// for several targets.
#[derive(Debug, Clone)]
pub struct Regressor {
    model: Model,
    n: usize,
    nbasis: usize,
    fallback: bool,
}

fn monomials(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; dim]];
    let mut frontier = out.clone();
    for _ in 0..degree {
        let mut next = Vec::new();
        for e in &frontier {
            // extend only at or after the last raised coordinate to avoid repeats
            let start = e.iter().rposition(|&p| p > 0).unwrap_or(0);
            for c in start..dim {
                let mut f = e.clone();
                f[c] += 1;
                next.push(f);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl Regressor {
    /// `points[i]` is the state of sample `i`; all rows share one length.
    pub fn new(basis: Basis, points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let dim = points.first().map_or(0, Vec::len);
        let constant = |fallback| Self {
            model: Model::Constant,
            n,
            nbasis: 1,
            fallback,
        };
        if n == 0 || dim == 0 {
            return constant(false);
        }
        // standardize; constant coordinates carry no information
        let mut centre = vec![0.0; dim];
        let mut scale = vec![0.0; dim];
        for c in 0..dim {
            let col: Vec<f64> = points.iter().map(|p| p[c]).collect();
            centre[c] = super::mean(&col);
            scale[c] = super::std_dev(&col);
        }
        let live: Vec<usize> = (0..dim).filter(|&c| scale[c] > 1e-300).collect();
        if live.is_empty() {
            return constant(false);
        }
        match basis {
            Basis::Polynomial { degree } => {
                let exps = monomials(live.len(), degree);
                let m = exps.len();
                if n <= m {
                    return constant(true);
                }
                let design = DMatrix::from_fn(n, m, |i, j| {
                    exps[j]
                        .iter()
                        .zip(&live)
                        .map(|(&p, &c)| ((points[i][c] - centre[c]) / scale[c]).powi(p as i32))
                        .product()
                });
                let gram = design.transpose() * &design;
                let svd = gram.svd(true, true);
                let smax = svd.singular_values.max();
                let smin = svd.singular_values.min();
                if !(smin > 1e-10 * smax) {
                    return constant(true);
                }
                let gram_pinv = svd.pseudo_inverse(0.0).expect("full rank");
                Self {
                    model: Model::Poly { design, gram_pinv },
                    n,
                    nbasis: m,
                    fallback: false,
                }
            }
            Basis::Bins { count } => {
                let count = count.max(1).min(n);
                let mut sorted: Vec<f64> = points.iter().map(|p| p[0]).collect();
                sorted.sort_by(f64::total_cmp);
                let cuts: Vec<f64> = (1..count).map(|b| sorted[b * n / count]).collect();
                let bin = points.iter().map(|p| cuts.partition_point(|&c| c <= p[0])).collect();
                Self {
                    model: Model::Bins { bin, count },
                    n,
                    nbasis: count,
                    fallback: false,
                }
            }
        }
    }

    /// True when the basis was singular and the fit degraded to the mean.
    pub fn fell_back(&self) -> bool {
        self.fallback
    }

    pub fn nbasis(&self) -> usize {
        self.nbasis
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn fit(&self, target: &[f64]) -> Fit {
        assert_eq!(target.len(), self.n, "target length");
        let fitted = match &self.model {
            Model::Constant => vec![super::mean(target); self.n],
            Model::Poly { design, gram_pinv } => {
                let y = DVector::from_column_slice(target);
                let beta = gram_pinv * (design.transpose() * y);
                (design * beta).as_slice().to_vec()
            }
            Model::Bins { bin, count } => {
                let mut sum = vec![0.0; *count];
                let mut num = vec![0usize; *count];
                for (&b, &y) in bin.iter().zip(target) {
                    sum[b] += y;
                    num[b] += 1;
                }
                bin.iter().map(|&b| sum[b] / num[b] as f64).collect()
            }
        };
        let dof = self.n.saturating_sub(self.nbasis).max(1);
        let ss: f64 = fitted.iter().zip(target).map(|(f, y)| (y - f) * (y - f)).sum();
        Fit {
            fitted,
            residual_sd: (ss / dof as f64).sqrt(),
        }
    }

    /// Standard error attached to a fitted value: `sd * sqrt(nbasis / n)`.
    pub fn standard_error(&self, fit: &Fit) -> f64 {
        fit.residual_sd * (self.nbasis as f64 / self.n.max(1) as f64).sqrt()
    }
}
