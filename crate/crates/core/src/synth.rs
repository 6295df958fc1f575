//! Simulation of panels from a fully specified coupled system with known
//! parameters.
//!
//! Random numbers come from xoshiro256++ (seeded through SplitMix64) and are
//! mapped to standard normals with Wichura's AS241 inverse CDF, so a given
//! seed reproduces the same panel bit for bit on every platform.

use nalgebra::{DMatrix, DVector};
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::diagnostics::{companion_matrix, eigen_moduli};
use crate::error::{Error, Result};
use crate::panel::{Panel, Quarter};

pub const RNG_ALGORITHM: &str = "xoshiro256++/splitmix64-seed";
pub const NORMAL_ALGORITHM: &str = "inverse-cdf/AS241, u=(k+0.5)*2^-53";

pub const DEFAULT_BURN_IN: usize = 200;

/// Quarter assigned to the first retained simulated period unless told otherwise.
pub fn default_start() -> Quarter {
    Quarter::new(2000, 1).expect("valid quarter")
}

/// Standard normal stream with a pinned algorithm.
#[derive(Clone, Debug)]
pub struct NormalStream {
    rng: Xoshiro256PlusPlus,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.next_uniform())
    }
}

/// Φ⁻¹(p) for p in (0, 1), Wichura (1988) AS241, about 1e-16 relative accuracy.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
            + 6.726_577_092_700_870_085_3e4)
            * r
            + 4.592_195_393_154_987_145_7e4)
            * r
            + 1.373_169_376_550_946_112_5e4)
            * r
            + 1.971_590_950_306_551_442_7e3)
            * r
            + 1.331_416_678_917_843_774_5e2)
            * r
            + 3.387_132_872_796_366_608_0;
        let den = ((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
            + 3.930_789_580_009_271_061_0e4)
            * r
            + 2.121_379_430_158_659_586_7e4)
            * r
            + 5.394_196_021_424_751_107_7e3)
            * r
            + 6.871_870_074_920_579_083_0e2)
            * r
            + 4.231_333_070_160_091_125_2e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    if tail <= 0.0 {
        return if q < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_33e-2) * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4) * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_9e-1)
            * r
            + 6.897_673_349_851_000_045_5e-1)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5) * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7) * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 1.487_536_129_085_061_485_25e-2)
            * r
            + 1.369_298_809_227_358_053_1e-1)
            * r
            + 5.998_322_065_558_879_376_9e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// A coupled system with known parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub labels: Vec<String>,
    pub p: usize,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub phi: Vec<DMatrix<f64>>,
    pub pi: Vec<DMatrix<f64>>,
    pub psi: Vec<DMatrix<f64>>,
    pub gamma: Vec<DMatrix<f64>>,
    pub omega: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub burn_in: usize,
    pub seed: u64,
    /// Skip noise entirely; covariances are then ignored.
    pub noise_free: bool,
}

pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("C{k:02}")).collect()
}

pub(crate) fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Definiteness(format!("{what} is not symmetric")));
            }
        }
    }
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Definiteness(format!("{what} is not positive definite")))
}

impl GeneratorSpec {
    /// All-zero system with n countries and p lags.
    pub fn zeros(n: usize, p: usize) -> Self {
        let z = || vec![DMatrix::zeros(n, n); p];
        GeneratorSpec {
            labels: default_labels(n),
            p,
            b: DVector::zeros(n),
            c: DVector::zeros(n),
            phi: z(),
            pi: z(),
            psi: z(),
            gamma: z(),
            omega: DMatrix::identity(n, n) * 0.01,
            sigma: DMatrix::identity(n, n) * 0.01,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
            noise_free: false,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Lag matrices of the stacked 2n-dimensional VAR: `[[Φ, Π], [Γ, Ψ]]`.
    pub fn joint_lags(&self) -> Vec<DMatrix<f64>> {
        let n = self.n();
        (0..self.p)
            .map(|s| {
                let mut a = DMatrix::zeros(2 * n, 2 * n);
                a.view_mut((0, 0), (n, n)).copy_from(&self.phi[s]);
                a.view_mut((0, n), (n, n)).copy_from(&self.pi[s]);
                a.view_mut((n, 0), (n, n)).copy_from(&self.gamma[s]);
                a.view_mut((n, n), (n, n)).copy_from(&self.psi[s]);
                a
            })
            .collect()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(eigen_moduli(&companion_matrix(&self.joint_lags()))?
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        crate::panel::validate_label_list(&self.labels)?;
        if self.p == 0 {
            return Err(Error::InvalidArgument("generator needs p >= 1".into()));
        }
        let stacks = [&self.phi, &self.pi, &self.psi, &self.gamma];
        if self.b.len() != n
            || self.c.len() != n
            || stacks.iter().any(|s| s.len() != self.p || s.iter().any(|m| m.shape() != (n, n)))
            || self.omega.shape() != (n, n)
            || self.sigma.shape() != (n, n)
        {
            return Err(Error::Dimension("generator parameter shapes are inconsistent".into()));
        }
        let all_finite = self.b.iter().chain(self.c.iter()).all(|v| v.is_finite())
            && stacks.iter().all(|s| s.iter().all(|m| m.iter().all(|v| v.is_finite())));
        if !all_finite {
            return Err(Error::InvalidArgument("generator parameters must be finite".into()));
        }
        if !self.noise_free {
            cholesky_lower(&self.omega, "Omega")?;
            cholesky_lower(&self.sigma, "Sigma")?;
        }
        let spectral_radius = self.spectral_radius()?;
        if !(spectral_radius < 1.0) {
            return Err(Error::Stationarity { spectral_radius });
        }
        Ok(())
    }
}

/// Simulates `t` periods starting at 2000Q1; see [`simulate_from`].
pub fn simulate(spec: &GeneratorSpec, t: usize) -> Result<Panel> {
    simulate_from(spec, t, default_start())
}

/// Iterates both lines jointly from zero initial conditions, drops `burn_in`
/// steps and returns the next `t`. Each step draws n normals for the GDP
/// shocks and then n for the CPI shocks.
pub fn simulate_from(spec: &GeneratorSpec, t: usize, start: Quarter) -> Result<Panel> {
    spec.validate()?;
    if t < spec.p + 2 {
        return Err(Error::Dimension(format!("need at least T={} periods, asked for {t}", spec.p + 2)));
    }
    let n = spec.n();
    let lags = spec.joint_lags();
    let (l_omega, l_sigma) = if spec.noise_free {
        (DMatrix::zeros(n, n), DMatrix::zeros(n, n))
    } else {
        (cholesky_lower(&spec.omega, "Omega")?, cholesky_lower(&spec.sigma, "Sigma")?)
    };
    let mut intercept = DVector::zeros(2 * n);
    intercept.rows_mut(0, n).copy_from(&spec.b);
    intercept.rows_mut(n, n).copy_from(&spec.c);

    let total = spec.burn_in + t;
    let mut stream = NormalStream::new(spec.seed);
    let mut history: Vec<DVector<f64>> = Vec::with_capacity(total);
    for step in 0..total {
        let mut z = intercept.clone();
        for (s, a) in lags.iter().enumerate() {
            if step > s {
                z += a * &history[step - s - 1];
            }
        }
        if !spec.noise_free {
            let e1 = DVector::from_fn(n, |_, _| stream.next_normal());
            let e2 = DVector::from_fn(n, |_, _| stream.next_normal());
            let xi = &l_omega * e1;
            let zeta = &l_sigma * e2;
            for i in 0..n {
                z[i] += xi[i];
                z[n + i] += zeta[i];
            }
        }
        history.push(z);
    }
    let kept = &history[spec.burn_in..];
    let x = DMatrix::from_fn(t, n, |r, c| kept[r][c]);
    let y = DMatrix::from_fn(t, n, |r, c| kept[r][n + c]);
    Panel::from_matrices(spec.labels.clone(), start, x, y)
}

/// Random coefficient stacks rescaled so the joint companion matrix has the
/// requested spectral radius. Noise covariances are 0.01·I.
pub fn random_stable_spec(n: usize, p: usize, seed: u64, target_radius: f64) -> Result<GeneratorSpec> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument("n and p must be positive".into()));
    }
    if !(target_radius > 0.0 && target_radius < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target radius must lie in (0, 1), got {target_radius}"
        )));
    }
    // separate stream from the one simulate() will use for shocks
    let mut stream = NormalStream::new(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut uniform = || 2.0 * stream.next_uniform() - 1.0;
    let mut spec = GeneratorSpec::zeros(n, p);
    spec.seed = seed;
    for stack in [&mut spec.phi, &mut spec.pi, &mut spec.psi, &mut spec.gamma] {
        for m in stack.iter_mut() {
            for v in m.iter_mut() {
                *v = uniform();
            }
        }
    }
    for v in spec.b.iter_mut().chain(spec.c.iter_mut()) {
        *v = uniform();
    }
    let rho = spec.spectral_radius()?;
    if !(rho > 1e-12) {
        return Err(Error::Numerical("drawn coefficients have zero spectral radius".into()));
    }
    // A_s → k^s A_s scales every companion eigenvalue by k
    let k = target_radius / rho;
    for stack in [&mut spec.phi, &mut spec.pi, &mut spec.psi, &mut spec.gamma] {
        for (s, m) in stack.iter_mut().enumerate() {
            *m *= k.powi(s as i32 + 1);
        }
    }
    Ok(spec)
}
