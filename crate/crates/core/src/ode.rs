//! Fixed-step classical Runge-Kutta integration for small dense systems.

/// One classical RK4 step of size `h` for the autonomous system `y' = f(y)`.
pub fn rk4_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, x: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * x[i];
    }
    out
}

/// Constant-coefficient linear system `y' = A y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem<const N: usize> {
    pub a: [[f64; N]; N],
}

impl<const N: usize> LinearSystem<N> {
    pub fn apply(&self, y: &[f64; N]) -> [f64; N] {
        mat_vec(&self.a, y)
    }

    /// Advance `y` by `steps` RK4 steps of size `h`.
    pub fn integrate(&self, y: &[f64; N], h: f64, steps: usize) -> [f64; N] {
        let f = |v: &[f64; N]| self.apply(v);
        (0..steps).fold(*y, |acc, _| rk4_step(&f, &acc, h))
    }

    /// Matrix of the map `y -> integrate(y, h, steps)`.
    ///
    /// RK4 applied to a linear system is itself linear, so stepping the basis
    /// vectors once gives a transfer matrix that reproduces `steps` sequential
    /// RK4 steps with a single matrix-vector product.
    pub fn rk4_transfer(&self, h: f64, steps: usize) -> Transfer<N> {
        let mut m = [[0.0; N]; N];
        for j in 0..N {
            let mut e = [0.0; N];
            e[j] = 1.0;
            let col = self.integrate(&e, h, steps);
            for i in 0..N {
                m[i][j] = col[i];
            }
        }
        Transfer { m }
    }
}

/// Precomputed one-interval propagation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer<const N: usize> {
    pub m: [[f64; N]; N],
}

impl<const N: usize> Transfer<N> {
    pub fn apply(&self, y: &[f64; N]) -> [f64; N] {
        mat_vec(&self.m, y)
    }
}

fn mat_vec<const N: usize>(m: &[[f64; N]; N], y: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = m[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }
    out
}
