//! Shared helpers for the integration and acceptance suites.
#![allow(dead_code)]

/// Independent grid LP oracle for min max|u''| subject to max|u| = 1.
///
/// Dual form: max u(x_c) over |u''| <= 1 (pointwise) equals, after writing u
/// as the double integral of a piecewise-linear v = u'' with the boundary
/// conditions as equality constraints A v = r, the box-constrained LP
/// max c'v s.t. Av = r, |v| <= 1, solved exactly through its piecewise-linear
/// dual min_mu { c'v - mu'(Av - r) } by enumerating kink intersections.
pub mod lp_oracle {
    /// Value of min max|u''| s.t. max|u| = 1 on a uniform n-node grid of
    /// [0, 1] for hinged (u(0)=u(1)=0) or clamped (additionally u'(0)=u'(1)=0)
    /// conditions.
    pub fn min_max_second_derivative(n: usize, clamped: bool) -> f64 {
        let h = 1.0 / (n - 1) as f64;
        // u(x) from v = u'' piecewise linear: u'(x_k) = u'(0) + trapz(v),
        // u(x_k) = sum of u'. Represent u(x_k) as linear functional of
        // (v_0..v_{n-1}, s0 = u'(0)): exact integration of the PL interpolant.
        let m = n;
        // weight of v_j in u'(x_k): trapezoid over [0, x_k]
        let wprime = |k: usize, j: usize| -> f64 {
            if k == 0 {
                return 0.0;
            }
            if j > k {
                0.0
            } else if j == 0 || j == k {
                0.5 * h
            } else {
                h
            }
        };
        // weight of v_j in u(x_k): integrate u' exactly (double integration
        // of PL v): u(x_k) = sum_{i<k} h/2 (u'(x_i) + u'(x_{i+1}))
        let wval = |k: usize, j: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..k {
                acc += 0.5 * h * (wprime(i, j) + wprime(i + 1, j));
            }
            acc
        };
        let center = (n - 1) / 2;
        // u(x_c) = c·v + s0 * x_c ; constraints: u(1) = 0, and clamped: u'(1) = 0
        // eliminate s0 via u(1) = 0: s0 = -(wval(n-1)·v) / 1
        let c: Vec<f64> = (0..m)
            .map(|j| {
                let xc = center as f64 * h;
                wval(center, j) - xc * wval(n - 1, j)
            })
            .collect();
        if !clamped {
            // hinged: no further constraints; optimum at v_j = sign(c_j)
            let umax: f64 = c.iter().map(|v| v.abs()).sum();
            return 1.0 / umax;
        }
        // clamped: two more equalities: u'(0) = s0 = 0 -> wval(n-1)·v = 0,
        // and u'(1) = s0 + wprime(n-1)·v = 0 -> wprime(n-1)·v = 0
        let a1: Vec<f64> = (0..m).map(|j| wval(n - 1, j)).collect();
        let a2: Vec<f64> = (0..m).map(|j| wprime(n - 1, j)).collect();
        // with s0 = 0 the objective weight is plain wval(center)
        let c: Vec<f64> = (0..m).map(|j| wval(center, j)).collect();
        // dual: min_mu D(mu) = sum_j |c_j - mu1 a1_j - mu2 a2_j|; optimum at
        // an intersection of two kink lines c_i = mu·a_i
        let dval = |mu1: f64, mu2: f64| -> f64 {
            (0..m).map(|j| (c[j] - mu1 * a1[j] - mu2 * a2[j]).abs()).sum()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..m {
            for j in (i + 1)..m {
                let det = a1[i] * a2[j] - a1[j] * a2[i];
                if det.abs() < 1e-14 {
                    continue;
                }
                let mu1 = (c[i] * a2[j] - c[j] * a2[i]) / det;
                let mu2 = (a1[i] * c[j] - a1[j] * c[i]) / det;
                let d = dval(mu1, mu2);
                if d < best.0 {
                    best = (d, mu1, mu2);
                }
            }
        }
        // LP duality: max u(center) = min D(mu)
        1.0 / best.0
    }

    #[test]
    fn oracle_matches_analytic_values() {
        // continuum values: hinged 8, clamped 16
        let hinged = min_max_second_derivative(401, false);
        assert!((hinged - 8.0).abs() / 8.0 < 1e-3, "{hinged}");
        let clamped = min_max_second_derivative(201, true);
        assert!((clamped - 16.0).abs() / 16.0 < 2e-2, "{clamped}");
    }
}

