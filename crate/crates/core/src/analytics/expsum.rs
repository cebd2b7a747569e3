//! Exponential polynomials `f(x) = Σ c · x^p · e^{λx}`.
//!
//! Every closed-form success probability is of this shape, and most of them
//! vanish to high order at `x = 0` through cancellation between terms. Near
//! the origin [`ExpSum::eval`] therefore switches to the Taylor series, whose
//! coefficients are assembled term by term with structurally-zero orders
//! snapped to zero.

/// Relative size below which a Taylor coefficient is treated as an exact zero.
const STRUCTURAL_ZERO: f64 = 1e-12;
/// Series branch is used while `x · max|λ|` stays below this.
const SERIES_RADIUS: f64 = 1.0;
const MAX_SERIES_ORDER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coef: f64,
    pub power: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl ExpSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::zero().with(c, 0, 0.0)
    }

    /// Builder form of [`ExpSum::push`].
    pub fn with(mut self, coef: f64, power: u32, rate: f64) -> Self {
        self.push(coef, power, rate);
        self
    }

    /// Adds `coef · x^power · e^{rate·x}`, merging with an existing like term.
    pub fn push(&mut self, coef: f64, power: u32, rate: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|t| t.power == power && same_rate(t.rate, rate)) {
            Some(t) => t.coef += coef,
            None => self.terms.push(ExpTerm { coef, power, rate }),
        }
    }

    pub fn add_scaled(&mut self, other: &ExpSum, scale: f64) {
        for t in &other.terms {
            self.push(scale * t.coef, t.power, t.rate);
        }
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, scale);
        out
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x * self.max_rate() <= SERIES_RADIUS {
            self.eval_series(x)
        } else {
            self.eval_direct(x)
        }
    }

    pub fn eval_direct(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * x.powi(t.power as i32) * (t.rate * x).exp()).sum()
    }

    /// Taylor coefficients `a_0 … a_{order}` about `x = 0`.
    pub fn taylor(&self, order: usize) -> Vec<f64> {
        // Running value of coef · rate^k / k! for each term, with k = n − power.
        let mut running: Vec<f64> = self.terms.iter().map(|t| t.coef).collect();
        let mut out = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut sum = 0.0;
            let mut mag = 0.0;
            for (t, r) in self.terms.iter().zip(running.iter_mut()) {
                let p = t.power as usize;
                if n < p {
                    continue;
                }
                if n > p {
                    *r *= t.rate / (n - p) as f64;
                }
                sum += *r;
                mag += r.abs();
            }
            out.push(if sum.abs() <= STRUCTURAL_ZERO * mag { 0.0 } else { sum });
        }
        out
    }

    pub fn eval_series(&self, x: f64) -> f64 {
        let min_order = self.terms.iter().map(|t| t.power as usize).max().unwrap_or(0);
        let mut running: Vec<f64> = self.terms.iter().map(|t| t.coef).collect();
        let mut acc = 0.0;
        let mut xn = 1.0;
        let mut quiet = 0;
        for n in 0..MAX_SERIES_ORDER {
            let mut sum = 0.0;
            let mut mag = 0.0;
            for (t, r) in self.terms.iter().zip(running.iter_mut()) {
                let p = t.power as usize;
                if n < p {
                    continue;
                }
                if n > p {
                    *r *= t.rate / (n - p) as f64;
                }
                sum += *r;
                mag += r.abs();
            }
            if sum.abs() <= STRUCTURAL_ZERO * mag {
                sum = 0.0;
            }
            let term = sum * xn;
            acc += term;
            if n > min_order && mag * xn <= 1e-18 * acc.abs().max(f64::MIN_POSITIVE) {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
            xn *= x;
            if xn == 0.0 {
                break;
            }
        }
        acc
    }

    /// `e^{−ρL} ∫₀^L e^{ρy} f(y) dy` as a function of `L`.
    pub fn damped_integral(&self, rho: f64) -> ExpSum {
        let mut out = ExpSum::zero();
        for t in &self.terms {
            let p = t.power as i32;
            let b = t.rate + rho;
            if b.abs() <= 1e-9 * rho.abs().max(1.0) {
                out.push(t.coef / (p + 1) as f64, t.power + 1, -rho);
                continue;
            }
            // ∫₀^L y^p e^{by} dy = e^{bL} Σ_i (−1)^i p!/(p−i)! L^{p−i} / b^{i+1} − (−1)^p p!/b^{p+1}
            let mut falling = 1.0;
            for i in 0..=p {
                if i > 0 {
                    falling *= (p - i + 1) as f64;
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                out.push(t.coef * sign * falling / b.powi(i + 1), (p - i) as u32, t.rate);
            }
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            out.push(-t.coef * sign * falling / b.powi(p + 1), 0, -rho);
        }
        out
    }
}
