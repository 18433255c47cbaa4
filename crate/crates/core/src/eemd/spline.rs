/// Natural cubic spline through `(x, y)` evaluated at integer positions
/// `0..out.len()`. Knots must be strictly increasing; at least two required.
pub(crate) fn natural_spline_on_grid(x: &[f64], y: &[f64], scratch: &mut SplineScratch, out: &mut [f64]) {
    let n = x.len();
    debug_assert!(n >= 2 && n == y.len());
    let m = scratch.second_derivatives(x, y);

    let mut seg = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let t = i as f64;
        while seg + 2 < n && t > x[seg + 1] {
            seg += 1;
        }
        let h = x[seg + 1] - x[seg];
        let a = (x[seg + 1] - t) / h;
        let b = (t - x[seg]) / h;
        *o = a * y[seg]
            + b * y[seg + 1]
            + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0;
    }
}

/// Reusable buffers for the tridiagonal solve.
#[derive(Default)]
pub(crate) struct SplineScratch {
    m: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl SplineScratch {
    fn second_derivatives(&mut self, x: &[f64], y: &[f64]) -> &[f64] {
        let n = x.len();
        self.m.clear();
        self.m.resize(n, 0.0);
        if n < 3 {
            return &self.m;
        }
        // Thomas algorithm on the interior equations, M[0] = M[n-1] = 0.
        let k = n - 2;
        self.c.clear();
        self.c.resize(k, 0.0);
        self.d.clear();
        self.d.resize(k, 0.0);
        for j in 0..k {
            let i = j + 1;
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let diag = 2.0 * (h0 + h1);
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            if j == 0 {
                self.c[j] = h1 / diag;
                self.d[j] = rhs / diag;
            } else {
                let denom = diag - h0 * self.c[j - 1];
                self.c[j] = h1 / denom;
                self.d[j] = (rhs - h0 * self.d[j - 1]) / denom;
            }
        }
        self.m[k] = self.d[k - 1];
        for j in (0..k - 1).rev() {
            self.m[j + 1] = self.d[j] - self.c[j] * self.m[j + 2];
        }
        &self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_and_passes_knots() {
        let x = [-3.0, 0.0, 2.5, 7.0, 12.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let mut out = vec![0.0; 12];
        natural_spline_on_grid(&x, &y, &mut SplineScratch::default(), &mut out);
        for (i, v) in out.iter().enumerate() {
            assert!((v - (2.0 * i as f64 - 1.0)).abs() < 1e-12);
        }

        let y = [1.0, -2.0, 0.5, 3.0, 0.0];
        let x = [0.0, 3.0, 5.0, 8.0, 11.0];
        let mut out = vec![0.0; 12];
        natural_spline_on_grid(&x, &y, &mut SplineScratch::default(), &mut out);
        for (xi, yi) in x.iter().zip(y) {
            assert!((out[*xi as usize] - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn three_knot_solution_by_hand() {
        // M1 = 6 * ((0 - 1)/2 - (1 - 0)/2) / (2 * (2 + 2)) = -0.75
        // s(1) = 0.5 + (0.125 - 0.5) * -0.75 * 4 / 6 = 0.6875
        let mut out = vec![0.0; 5];
        natural_spline_on_grid(&[0.0, 2.0, 4.0], &[0.0, 1.0, 0.0], &mut SplineScratch::default(), &mut out);
        assert!((out[1] - 0.6875).abs() < 1e-14);
        assert!((out[3] - 0.6875).abs() < 1e-14);
        assert_eq!(out[2], 1.0);
    }
}
