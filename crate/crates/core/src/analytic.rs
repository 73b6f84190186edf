//! Closed-form references: one-dimensional consolidation, pressure diffusion
//! along a crack, the opening of a pressurized crack in an infinite plane,
//! and the continuum damage profile next to a straight crack.

use std::f64::consts::PI;

/// Truncation of the Fourier series below. Summation stops once the
/// magnitude envelope of the next term drops under `rel_tail` times the
/// running sum, or after `max_terms` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub max_terms: usize,
    pub rel_tail: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { max_terms: 500, rel_tail: 1e-12 }
    }
}

/// Sums `term(k)`, where each call returns the term value and an upper bound
/// on the magnitude of that term and all later ones.
fn sum_series(opts: SeriesOptions, mut term: impl FnMut(usize) -> (f64, f64)) -> f64 {
    let mut sum: f64 = 0.0;
    for k in 0..opts.max_terms {
        let (value, envelope) = term(k);
        if k > 0 && envelope <= opts.rel_tail * sum.abs() {
            break;
        }
        sum += value;
        if envelope == 0.0 {
            break;
        }
    }
    sum
}

/// One-dimensional consolidation of a column of length `length`, loaded by
/// `load` on the drained face `x = 0` and fixed and impermeable at `x = L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consolidation {
    pub length: f64,
    pub load: f64,
    /// Drained uniaxial compliance (inverse constrained modulus), 1/Pa.
    pub compliance: f64,
    pub alpha: f64,
    pub storage: f64,
    pub permeability: f64,
    pub viscosity: f64,
}

impl Consolidation {
    /// Undrained compliance.
    pub fn undrained_compliance(&self) -> f64 {
        let a = self.compliance;
        a / (1.0 + a * self.alpha * self.alpha / self.storage)
    }

    /// Initial pressure per unit load.
    pub fn loading_efficiency(&self) -> f64 {
        let a = self.compliance;
        (a - self.undrained_compliance()) / (a * self.alpha)
    }

    /// Consolidation coefficient, m^2/s.
    pub fn coefficient(&self) -> f64 {
        let a = self.compliance;
        self.permeability / ((a * self.alpha * self.alpha + self.storage) * self.viscosity)
    }

    fn c_m(&self) -> f64 {
        (self.compliance - self.undrained_compliance()) / self.loading_efficiency()
    }

    fn mode(&self, m: usize, t: f64) -> (f64, f64) {
        let k = (2 * m + 1) as f64;
        let lam = k * PI / (2.0 * self.length);
        (k, (-lam * lam * self.coefficient() * t).exp())
    }

    pub fn pressure(&self, x: f64, t: f64, opts: SeriesOptions) -> f64 {
        let v = self.loading_efficiency();
        let s = sum_series(opts, |m| {
            let (k, decay) = self.mode(m, t);
            let env = decay / k;
            (env * (k * PI * x / (2.0 * self.length)).sin(), env)
        });
        4.0 * v * self.load / PI * s
    }

    /// Displacement toward the fixed end.
    pub fn displacement(&self, x: f64, t: f64, opts: SeriesOptions) -> f64 {
        let (l, v) = (self.length, self.loading_efficiency());
        let s = sum_series(opts, |m| {
            let (k, decay) = self.mode(m, t);
            let env = decay / (k * k);
            (env * (k * PI * x / (2.0 * l)).cos(), env)
        });
        self.c_m() * v * self.load * (l - x - 8.0 * l / (PI * PI) * s)
            + self.undrained_compliance() * self.load * (l - x)
    }
}

/// Normalized pressure `P/P0` along a crack whose mouth is held at `P0`.
/// `zeta = (L - x)/L`, so the loaded mouth is `zeta = 1` and the sealed tip
/// is `zeta = 0`; `td` is the dimensionless time.
pub fn crack_diffusion(zeta: f64, td: f64, opts: SeriesOptions) -> f64 {
    let s = sum_series(opts, |n| {
        let k = (2 * n + 1) as f64;
        let env = (-k * k * td / 4.0 * PI * PI).exp() / k;
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        (sign * env * (k * PI * zeta / 2.0).cos(), env)
    });
    1.0 + 4.0 / PI * s
}

/// Dimensionless time for crack diffusion with cubic-law permeability.
pub fn crack_diffusion_td(t: f64, fluid_bulk: f64, aperture: f64, viscosity: f64, length: f64) -> f64 {
    fluid_bulk * aperture * aperture / (12.0 * viscosity) * t / (length * length)
}

/// Displacement of one face of a pressurized crack of half-length
/// `half_length` at distance `x` from its centre, plane strain. Zero outside
/// the crack.
pub fn sneddon_opening(x: f64, pressure: f64, half_length: f64, youngs: f64, poisson: f64) -> f64 {
    if x.abs() >= half_length {
        return 0.0;
    }
    let e_prime = youngs / (1.0 - poisson * poisson);
    2.0 * pressure * half_length / e_prime * (1.0 - x * x / (half_length * half_length)).sqrt()
}

/// Fraction of a unit-weight horizon cut by a straight crack at distance `h`.
pub fn damage_profile(h: f64, horizon: f64) -> f64 {
    let z = (h.abs() / horizon).min(1.0);
    ((2.0 * z * z - 1.0).acos() - 2.0 * z * (1.0 - z * z).sqrt()) / (2.0 * PI)
}
