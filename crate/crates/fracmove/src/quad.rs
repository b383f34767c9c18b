//! Gauss rules and a composite integrator for algebraic endpoint singularities.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Maps the rule to `[a, b]` (plain Legendre weight only).
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre rule by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule for the weight `(1-x)^a (1+x)^b` on `[-1, 1]` (Golub–Welsch).
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    if a == 0.0 && b == 0.0 {
        return gauss_legendre(n);
    }
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

thread_local! {
    static RULES: RefCell<HashMap<(usize, u64, u64), Rc<Rule>>> = RefCell::new(HashMap::new());
}

/// Memoised [`gauss_jacobi`] (per thread).
pub fn cached_jacobi(n: usize, a: f64, b: f64) -> Rc<Rule> {
    let key = (n, a.to_bits(), b.to_bits());
    RULES.with(|cell| {
        if let Some(rule) = cell.borrow().get(&key) {
            return rule.clone();
        }
        let rule = Rc::new(gauss_jacobi(n, a, b));
        cell.borrow_mut().insert(key, rule.clone());
        rule
    })
}

pub fn cached_legendre(n: usize) -> Rc<Rule> {
    cached_jacobi(n, 0.0, 0.0)
}

/// Factor `|x - at|^exponent` of an integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub at: f64,
    pub exponent: f64,
}

impl Singularity {
    pub fn new(at: f64, exponent: f64) -> Self {
        Singularity { at, exponent }
    }
}

const DEFAULT_POINTS: usize = 12;

/// `∫_a^b f(x) Π |x - at_i|^{e_i} dx` for singular points outside `(a, b)` or on
/// an endpoint.
///
/// Pieces touching a singular point use a Gauss–Jacobi rule carrying that
/// factor; pieces closer to an outside singular point than their own length
/// are split geometrically.
pub fn singular_integral(f: impl FnMut(f64) -> f64, a: f64, b: f64, sings: &[Singularity]) -> f64 {
    let mut f = f;
    singular_integral_vec::<1>(|x| [f(x)], a, b, sings, DEFAULT_POINTS, 1)[0]
}

/// Vector-valued version of [`singular_integral`] with explicit rule size and
/// an initial number of equal panels.
pub fn singular_integral_vec<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    sings: &[Singularity],
    points: usize,
    panels: usize,
) -> [f64; K] {
    let mut acc = [0.0; K];
    if b <= a {
        return acc;
    }
    debug_assert!(
        sings.iter().all(|s| s.exponent == 0.0 || s.at <= a || s.at >= b),
        "singular point inside the integration interval"
    );
    let mut stack: Vec<(f64, f64)> = Vec::new();
    let panels = panels.max(1);
    for p in (0..panels).rev() {
        let lo = if p == 0 { a } else { a + (b - a) * p as f64 / panels as f64 };
        let hi = if p + 1 == panels { b } else { a + (b - a) * (p + 1) as f64 / panels as f64 };
        stack.push((lo, hi));
    }
    while let Some((lo, hi)) = stack.pop() {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        // nearest outside singularity closer than the piece length
        let mut split: Option<f64> = None;
        let mut worst = 1.0;
        for s in sings.iter().filter(|s| s.exponent != 0.0) {
            let (dist, left) = if s.at <= lo {
                (lo - s.at, true)
            } else {
                (s.at - hi, false)
            };
            if dist > 0.0 && dist < len {
                let ratio = dist / len;
                if ratio < worst {
                    worst = ratio;
                    split = Some(if left { lo + dist } else { hi - dist });
                }
            }
        }
        if let Some(mid) = split {
            if mid > lo && mid < hi {
                stack.push((lo, mid));
                stack.push((mid, hi));
                continue;
            }
        }
        let mut pa = 0.0;
        let mut pb = 0.0;
        for s in sings.iter().filter(|s| s.exponent != 0.0) {
            if s.at == lo {
                pa += s.exponent;
            } else if s.at == hi {
                pb += s.exponent;
            }
        }
        let rule = cached_jacobi(points, pb, pa);
        let half = 0.5 * len;
        let scale = half.powf(1.0 + pa + pb);
        for (&xi, &wi) in rule.nodes.iter().zip(&rule.weights) {
            let from_lo = half * (1.0 + xi);
            let to_hi = half * (1.0 - xi);
            let x = if xi <= 0.0 { lo + from_lo } else { hi - to_hi };
            let mut factor = 1.0;
            for s in sings.iter().filter(|s| s.exponent != 0.0) {
                if s.at == lo || s.at == hi {
                    continue;
                }
                let d = if s.at < lo {
                    (lo - s.at) + from_lo
                } else {
                    (s.at - hi) + to_hi
                };
                factor *= d.powf(s.exponent);
            }
            let v = f(x);
            for k in 0..K {
                acc[k] += scale * wi * factor * v[k];
            }
        }
    }
    acc
}
