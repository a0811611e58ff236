use std::sync::OnceLock;

/// Points per panel.
pub const GAUSS_LEGENDRE_ORDER: usize = 32;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn base_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_LEGENDRE_ORDER))
}

/// Composite Gauss–Legendre rule on [0, 1].
///
/// The integrands `[(X−I)s+I]⁻¹` have poles at `s = 1/(1−λ)` for each
/// eigenvalue `λ`. Eigenvalues far above 1 put a pole just left of 0 and
/// eigenvalues near 0 put one just right of 1, so panels are graded
/// geometrically (ratio 4) toward whichever end has a nearby pole.
#[derive(Clone, Debug)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    /// Single panel on [0, 1].
    pub fn unit() -> Self {
        Self::from_breaks(&[0.0, 1.0])
    }

    pub fn for_spectrum(eigenvalues: &[f64]) -> Self {
        let mut near_zero = f64::INFINITY;
        let mut near_one = f64::INFINITY;
        for &l in eigenvalues {
            if l > 1.0 {
                near_zero = near_zero.min(1.0 / (l - 1.0));
            } else if l < 1.0 {
                near_one = near_one.min(l / (1.0 - l));
            }
        }
        let mut breaks = vec![0.0];
        let mut b = near_zero;
        let mut left = Vec::new();
        while b < 0.5 {
            left.push(b);
            b *= 4.0;
        }
        breaks.extend(left);
        breaks.push(0.5);
        let mut right = Vec::new();
        let mut b = near_one;
        while b < 0.5 {
            right.push(1.0 - b);
            b *= 4.0;
        }
        right.reverse();
        breaks.extend(right);
        breaks.push(1.0);
        Self::from_breaks(&breaks)
    }

    fn from_breaks(breaks: &[f64]) -> Self {
        let (x, w) = base_rule();
        let mut nodes = Vec::with_capacity(x.len() * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Quadrature { nodes, weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(s, w)| w * f(s)).sum()
    }
}
