//! Coherent-state linear optics.
//!
//! A coherent state stays coherent under beamsplitters and displacements, so a
//! mode is carried as its single complex amplitude `γ` (mean photon number
//! `|γ|²`). Detectors are threshold (click / no-click) with efficiency `η`,
//! which acts exactly like scaling the amplitude by `√η`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::random::RandomStream;

const UNITARITY_TOL: f64 = 1e-12;

/// Complex amplitude in units of √(photon number).
pub type ComplexAmplitude = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentMode {
    amplitude: ComplexAmplitude,
}

impl CoherentMode {
    pub fn new(amplitude: ComplexAmplitude) -> Result<Self> {
        if !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(Error::param(format!("non-finite amplitude {amplitude}")));
        }
        Ok(Self { amplitude })
    }

    pub fn vacuum() -> Self {
        Self { amplitude: Complex64::new(0.0, 0.0) }
    }

    /// Mode `r e^{iθ}`.
    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(r, theta))
    }

    pub fn amplitude(&self) -> ComplexAmplitude {
        self.amplitude
    }

    pub fn mean_photons(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Lossless two-port with symmetric transfer matrix `[[t, r], [r, t]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beamsplitter {
    t: ComplexAmplitude,
    r: ComplexAmplitude,
}

impl Beamsplitter {
    /// Checks `|t|² + |r|² = 1` and `t r̄ + r t̄ = 0` to 1e-12.
    pub fn new(t: ComplexAmplitude, r: ComplexAmplitude) -> Result<Self> {
        let norm = t.norm_sqr() + r.norm_sqr();
        let cross = t * r.conj() + r * t.conj();
        if !((norm - 1.0).abs() <= UNITARITY_TOL) || !(cross.norm() <= UNITARITY_TOL) {
            return Err(Error::param(format!(
                "beamsplitter t={t}, r={r} is not unitary (|t|²+|r|²={norm}, tr̄+rt̄={cross})"
            )));
        }
        Ok(Self { t, r })
    }

    /// `t = 1/√2`, `r = i/√2`.
    pub fn balanced() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { t: Complex64::new(s, 0.0), r: Complex64::new(0.0, s) }
    }

    /// Real `t = √τ` and imaginary `r = i√(1−τ)` for power transmissivity `τ`.
    pub fn with_transmissivity(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::param(format!("transmissivity {tau} outside [0, 1]")));
        }
        Self::new(Complex64::new(tau.sqrt(), 0.0), Complex64::new(0.0, (1.0 - tau).sqrt()))
    }

    pub fn t(&self) -> ComplexAmplitude {
        self.t
    }

    pub fn r(&self) -> ComplexAmplitude {
        self.r
    }
}

/// Outputs `(t·a + r·b, r·a + t·b)`.
pub fn beamsplit(a: CoherentMode, b: CoherentMode, bs: &Beamsplitter) -> (CoherentMode, CoherentMode) {
    let (x, y) = (a.amplitude, b.amplitude);
    (CoherentMode { amplitude: bs.t * x + bs.r * y }, CoherentMode { amplitude: bs.r * x + bs.t * y })
}

/// Exact displacement `γ → γ + δ`.
pub fn displace(m: CoherentMode, delta: ComplexAmplitude) -> CoherentMode {
    CoherentMode { amplitude: m.amplitude + delta }
}

/// Finite-`t` realisation of [`displace`]: interferes `m` with the reference
/// `b = tδ/r` on a beamsplitter with real `t` and `r = i√(1−t²)`.
///
/// Returns `(kept, discarded)`. The kept port is `t(γ + δ)`, which tends to the
/// exact displacement as `t → 1`; the discarded port carries `rγ + t²δ/r`.
pub fn displace_with_beamsplitter(
    m: CoherentMode,
    delta: ComplexAmplitude,
    t: f64,
) -> Result<(CoherentMode, CoherentMode)> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::param(format!("displacement needs 0 ≤ t < 1, got {t}")));
    }
    let bs = Beamsplitter::with_transmissivity(t * t)?;
    let reference = CoherentMode::new(bs.t * delta / bs.r)?;
    Ok(beamsplit(m, reference, &bs))
}

/// Splits `m` into `n` equal copies of amplitude `γ/√n`.
pub fn split_equal(m: CoherentMode, n: usize) -> Result<Vec<CoherentMode>> {
    if n == 0 {
        return Err(Error::param("cannot split into zero copies"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(vec![CoherentMode { amplitude: m.amplitude * scale }; n])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    efficiency: f64,
}

impl Detector {
    pub fn new(efficiency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::param(format!("detector efficiency {efficiency} outside [0, 1]")));
        }
        Ok(Self { efficiency })
    }

    pub fn ideal() -> Self {
        Self { efficiency: 1.0 }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

/// `1 − exp(−η|γ|²)`.
pub fn click_probability(m: &CoherentMode, d: &Detector) -> f64 {
    -(-d.efficiency * m.mean_photons()).exp_m1()
}

/// Measures (and consumes) `m`.
pub fn sample_click(m: CoherentMode, d: &Detector, rng: &mut RandomStream) -> bool {
    rng.bernoulli(click_probability(&m, d))
}
