use std::f64::consts::PI;

/// Gauss–Legendre rule mapped to an interval.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadRule {
    /// `count`-node Gauss–Legendre rule on `[a, b]`, exact to degree `2·count − 1`.
    pub fn gauss_legendre(count: usize, (a, b): (f64, f64)) -> Self {
        assert!(count >= 1, "quadrature needs at least one node");
        let (xs, ws) = gauss_legendre_reference(count);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        QuadRule {
            nodes: xs.iter().map(|x| mid + half * x).collect(),
            weights: ws.iter().map(|w| w * half).collect(),
            interval: (a, b),
        }
    }

    /// Smallest rule integrating every polynomial of `degree` exactly.
    pub fn for_degree(degree: usize, interval: (f64, f64)) -> Self {
        QuadRule::gauss_legendre(degree / 2 + 1, interval)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn quad_integrate(f: impl Fn(f64) -> f64, rule: &QuadRule) -> f64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(x))
        .sum()
}

/// Legendre polynomial P_n and its derivative at x via the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(±1) = (±1)^{n+1} n(n+1)/2
        x.powi(n as i32 + 1) * n * (n + 1.0) / 2.0
    } else {
        n * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}
