//! Symmetric tridiagonal matrices: products, factorisations and inertia counts.

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e` (`e[i]` couples i and i+1).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len().max(1));
        SymTridiag { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.d[i] * x[i];
            if i > 0 {
                s += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.e[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.len();
        let mut s = 0.0;
        for i in 0..n {
            s += self.d[i] * x[i] * x[i];
            if i + 1 < n {
                s += 2.0 * self.e[i] * x[i] * x[i + 1];
            }
        }
        s
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ax = self.matvec(x);
        ax.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Returns `self − sigma·diag(b)`.
    pub fn shifted(&self, sigma: f64, b: &[f64]) -> SymTridiag {
        SymTridiag { d: self.d.iter().zip(b).map(|(d, b)| d - sigma * b).collect(), e: self.e.clone() }
    }

    /// Number of negative pivots of the LDLᵀ factorisation of `self − sigma·diag(b)`,
    /// i.e. the number of generalised eigenvalues below `sigma` when `b > 0`.
    pub fn count_below(&self, sigma: f64, b: &[f64]) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut piv = 0.0;
        for i in 0..n {
            let mut q = self.d[i] - sigma * b[i];
            if i > 0 {
                q -= self.e[i - 1] * self.e[i - 1] / piv;
            }
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + sigma.abs() * b[i]).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
            piv = q;
        }
        count
    }

    /// Solves `self · x = rhs` with partial pivoting (valid for indefinite matrices).
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(vec![]);
        }
        // general tridiagonal LU with row interchanges; upper factor has two superdiagonals
        let mut dl: Vec<f64> = self.e.clone();
        let mut dd: Vec<f64> = self.d.clone();
        let mut du: Vec<f64> = self.e.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut ipiv = vec![false; n];
        for i in 0..n - 1 {
            if dd[i].abs() >= dl[i].abs() {
                if dd[i] == 0.0 {
                    return None;
                }
                let f = dl[i] / dd[i];
                dl[i] = f;
                dd[i + 1] -= f * du[i];
            } else {
                let f = dd[i] / dl[i];
                dd[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = dd[i + 1];
                dd[i + 1] = tmp - f * dd[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                ipiv[i] = true;
            }
        }
        if dd[n - 1] == 0.0 {
            return None;
        }
        let mut x = rhs.to_vec();
        for i in 0..n - 1 {
            if ipiv[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= dl[i] * x[i];
        }
        x[n - 1] /= dd[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i];
        }
        Some(x)
    }
}

/// Cholesky-type factor of an SPD tridiagonal matrix, reusable across many solves.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    piv: Vec<f64>,
    l: Vec<f64>,
}

impl SpdFactor {
    pub fn new(a: &SymTridiag) -> Option<Self> {
        let n = a.len();
        let mut piv = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut q = a.d[i];
            if i > 0 {
                l[i - 1] = a.e[i - 1] / piv[i - 1];
                q -= l[i - 1] * a.e[i - 1];
            }
            if !(q > 0.0) {
                return None;
            }
            piv[i] = q;
        }
        Some(SpdFactor { piv, l })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.piv.len();
        let mut x = rhs.to_vec();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.piv[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
