//! Direct solver for symmetric periodic tridiagonal systems: constant
//! off-diagonal coupling plus the two corner entries. Thomas elimination on a
//! corner-modified tridiagonal matrix, corrected by Sherman–Morrison.

pub(crate) struct CyclicSolver {
    off: f64,
    gamma: f64,
    cp: Vec<f64>,
    denom: Vec<f64>,
    z: Vec<f64>,
    fact_den: f64,
}

impl CyclicSolver {
    /// Factorizes `A` with diagonal `diag` and every off-diagonal (including
    /// the corners) equal to `off`. `A` must be strictly diagonally dominant.
    pub fn new(diag: &[f64], off: f64) -> Self {
        let n = diag.len();
        let gamma = -diag[0];
        let mut modified = diag.to_vec();
        modified[0] -= gamma;
        modified[n - 1] -= off * off / gamma;

        let mut cp = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = modified[0];
        cp[0] = off / denom[0];
        for i in 1..n {
            denom[i] = modified[i] - off * cp[i - 1];
            cp[i] = off / denom[i];
        }
        let mut solver = Self {
            off,
            gamma,
            cp,
            denom,
            z: Vec::new(),
            fact_den: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = off;
        let mut z = vec![0.0; n];
        solver.thomas(&u, &mut z);
        solver.fact_den = 1.0 + z[0] + off * z[n - 1] / gamma;
        solver.z = z;
        solver
    }

    fn thomas(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        out[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            out[i] = (rhs[i] - self.off * out[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            out[i] -= self.cp[i] * out[i + 1];
        }
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        self.thomas(rhs, out);
        let fact = (out[0] + self.off * out[n - 1] / self.gamma) / self.fact_den;
        for (o, z) in out.iter_mut().zip(&self.z) {
            *o -= fact * z;
        }
    }
}
