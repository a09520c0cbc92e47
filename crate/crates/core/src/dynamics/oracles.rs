//! Closed-form references for the built-in models.
//!
//! All amplitudes are normalized to `c(0) = 1`; only ratios `c(t₂)/c(t₁)`
//! enter observables.

use serde::Serialize;

use super::builtin::{ModelParamsDampedJC, ModelParamsDetunedJC, ModelParamsSpinBath};
use super::integrator::{integrate, IntegratorTolerances};
use super::{DynamicsError, SingularTimes};
use crate::qmat::CMatrix;
use crate::scalar::{cx, re, Cx, Real};

/// Analytic Ncp together with whether it is the singular limit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleNcp<T> {
    pub value: T,
    /// `true` when `t₁` is a zero of the amplitude and `value` is the
    /// `π/2` limit rather than a finite evaluation.
    pub singular_limit: bool,
}

/// `arctan(½(x − 1))` for `x > 1`, else 0.
fn ncp_from_ratio<T: Real>(x: T) -> T {
    if x > T::one() {
        ((x - T::one()) * T::lit(0.5)).atan()
    } else {
        T::zero()
    }
}

// ---------------------------------------------------------------------------
// Damped Jaynes–Cummings

/// Discriminant branch of `d = √(λ² − 2γ₀λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Branch<T> {
    /// `d` real and positive.
    Real(T),
    /// `d = i·w`, `w > 0`.
    Imag(T),
    Critical,
}

fn branch<T: Real>(p: &ModelParamsDampedJC) -> Branch<T> {
    let (g0, l) = (T::lit(p.gamma0), T::lit(p.lambda));
    let d2 = l * l - T::lit(2.0) * g0 * l;
    // Relative cutoff keeps the critical point continuous.
    if d2.abs() <= T::lit(1e-14) * l * l {
        Branch::Critical
    } else if d2 > T::zero() {
        Branch::Real(d2.sqrt())
    } else {
        Branch::Imag((-d2).sqrt())
    }
}

/// `c(t) = e^{−λt/2}[cosh(dt/2) + (λ/d) sinh(dt/2)]`, real-valued but
/// returned as complex for uniformity with the detuned model.
pub fn oracle_c_damped<T: Real>(p: &ModelParamsDampedJC, t: T) -> Cx<T> {
    let l = T::lit(p.lambda);
    let half = T::lit(0.5);
    let env = (-l * t * half).exp();
    let v = match branch::<T>(p) {
        Branch::Real(d) => {
            let x = d * t * half;
            (x.cosh() + l / d * x.sinh()) * env
        }
        Branch::Imag(w) => {
            let x = w * t * half;
            (x.cos() + l / w * x.sin()) * env
        }
        Branch::Critical => (T::one() + l * t * half) * env,
    };
    re(v)
}

/// `ċ(t)` of [`oracle_c_damped`].
pub fn oracle_cdot_damped<T: Real>(p: &ModelParamsDampedJC, t: T) -> Cx<T> {
    let (g0, l) = (T::lit(p.gamma0), T::lit(p.lambda));
    let half = T::lit(0.5);
    let env = (-l * t * half).exp();
    // ċ = −(γ₀λ) e^{−λt/2} sinh(dt/2)/d, from differentiating the closed form.
    let s = match branch::<T>(p) {
        Branch::Real(d) => (d * t * half).sinh() / d,
        Branch::Imag(w) => (w * t * half).sin() / w,
        Branch::Critical => t * half,
    };
    re(-g0 * l * env * s)
}

/// `γ(t) = 2γ₀λ sinh(dt/2) / (d cosh(dt/2) + λ sinh(dt/2))`.
pub fn oracle_gamma_damped<T: Real>(p: &ModelParamsDampedJC, t: T) -> Result<T, DynamicsError> {
    let (g0, l) = (T::lit(p.gamma0), T::lit(p.lambda));
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (num, den) = match branch::<T>(p) {
        Branch::Real(d) => {
            let x = d * t * half;
            (two * g0 * l * x.sinh(), d * x.cosh() + l * x.sinh())
        }
        Branch::Imag(w) => {
            let x = w * t * half;
            (two * g0 * l * x.sin(), w * x.cos() + l * x.sin())
        }
        Branch::Critical => (g0 * l * t, T::one() + l * t * half),
    };
    let scale = num.abs().max(T::one());
    if den.abs() <= T::eps() * T::lit(16.0) * scale {
        return Err(DynamicsError::PoleAt { t: t.to_f64_lossy() });
    }
    Ok(num / den)
}

/// Zeros of `c(t)` (poles of `γ`): empty unless `R > ½`.
pub fn singular_times_damped<T: Real>(p: &ModelParamsDampedJC) -> SingularTimes<T> {
    match branch::<T>(p) {
        Branch::Imag(w) => {
            let l = T::lit(p.lambda);
            let x0 = T::PI() - (w / l).atan();
            SingularTimes::Periodic {
                first: T::lit(2.0) * x0 / w,
                period: T::lit(2.0) * T::PI() / w,
            }
        }
        _ => SingularTimes::None,
    }
}

/// Period `2π/|d|` of the amplitude oscillation, when `R > ½`.
pub fn period_damped(p: &ModelParamsDampedJC) -> Option<f64> {
    match branch::<f64>(p) {
        Branch::Imag(w) => Some(2.0 * std::f64::consts::PI / w),
        _ => None,
    }
}

/// Ncp from `|c(t₂)|² / |c(t₁)|²`.
///
/// At a zero of `c(t₁)` the value is the `π/2` limit (flagged); when both
/// amplitudes vanish the ratio is undefined and `SingularPoint` is returned.
pub fn oracle_ncp_damped<T: Real>(p: &ModelParamsDampedJC, t1: T, t2: T) -> Result<OracleNcp<T>, DynamicsError> {
    ncp_from_amplitudes(oracle_c_damped(p, t1), oracle_c_damped(p, t2), t1)
}

fn ncp_from_amplitudes<T: Real>(c1: Cx<T>, c2: Cx<T>, t1: T) -> Result<OracleNcp<T>, DynamicsError> {
    let (p1, p2) = (c1.norm_sqr(), c2.norm_sqr());
    if p1.is_zero() {
        if p2.is_zero() {
            return Err(DynamicsError::SingularPoint { t: t1.to_f64_lossy() });
        }
        return Ok(OracleNcp {
            value: T::FRAC_PI_2(),
            singular_limit: true,
        });
    }
    Ok(OracleNcp {
        value: ncp_from_ratio(p2 / p1),
        singular_limit: false,
    })
}

// ---------------------------------------------------------------------------
// Detuned Jaynes–Cummings
//
// The exponential kernel κ(t) = κ₀ e^{(iΔ−λ)t}, κ₀ = γ₀λ/2, turns
// ċ = −∫κ(t−τ)c(τ)dτ into ċ = −g, ġ = κ₀c − (λ − iΔ)g with g(0) = 0.

fn detuned_generator<T: Real>(p: &ModelParamsDetunedJC) -> (Cx<T>, Cx<T>) {
    let k0 = re(T::lit(p.gamma0 * p.lambda * 0.5));
    let a = cx(T::lit(p.lambda), -T::lit(p.delta)); // λ − iΔ
    (k0, a)
}

/// `(c(t), g(t))` from the closed-form `exp(Mt)` of the 2×2 linear system.
pub fn oracle_cg_detuned<T: Real>(p: &ModelParamsDetunedJC, t: T) -> (Cx<T>, Cx<T>) {
    let (k0, a) = detuned_generator::<T>(p);
    // M = [[0, −1], [κ₀, −a]]: μ = −a/2, ν² = μ² − κ₀.
    let mu = -a * T::lit(0.5);
    let nu = (mu * mu - k0).sqrt();
    let tt = re(t);
    let z = nu * tt;
    let ch = z.cosh();
    // sinh(νt)/ν, with a series near ν = 0.
    let sh_over_nu = if z.norm() < T::lit(1e-4) {
        tt * (re(T::one()) + z * z / T::lit(6.0))
    } else {
        z.sinh() / nu
    };
    let e = (mu * tt).exp();
    let c = e * (ch - mu * sh_over_nu);
    let g = e * k0 * sh_over_nu;
    (c, g)
}

pub fn oracle_c_detuned<T: Real>(p: &ModelParamsDetunedJC, t: T) -> Cx<T> {
    oracle_cg_detuned(p, t).0
}

/// `(γ(t), s(t)) = (2 Re(g/c), 2 Im(g/c))`, i.e. `−2 Re(ċ/c)`, `−2 Im(ċ/c)`.
pub fn oracle_rates_detuned<T: Real>(p: &ModelParamsDetunedJC, t: T) -> Result<(T, T), DynamicsError> {
    let (c, g) = oracle_cg_detuned(p, t);
    if c.norm() <= T::eps() * g.norm().max(T::one()) {
        return Err(DynamicsError::PoleAt { t: t.to_f64_lossy() });
    }
    let q = g / c * T::lit(2.0);
    Ok((q.re, q.im))
}

pub fn oracle_ncp_detuned<T: Real>(p: &ModelParamsDetunedJC, t1: T, t2: T) -> Result<OracleNcp<T>, DynamicsError> {
    ncp_from_amplitudes(oracle_c_detuned(p, t1), oracle_c_detuned(p, t2), t1)
}

/// `c(t)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledAmplitude<T> {
    pub times: Vec<T>,
    pub values: Vec<Cx<T>>,
}

impl<T: Real> SampledAmplitude<T> {
    /// Linear interpolation; clamps outside the sampled range.
    pub fn at(&self, t: T) -> Cx<T> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let (a, b) = (self.times[k], self.times[k + 1]);
        let w = (t - a) / (b - a);
        self.values[k] * (T::one() - w) + self.values[k + 1] * w
    }
}

/// Intervals used by [`solve_c_detuned`].
pub const DETUNED_SAMPLES: usize = 1000;

/// Integrates the local form of the memory-kernel equation numerically and
/// samples `c(t)` at `DETUNED_SAMPLES + 1` uniform points in `[0, t_max]`.
pub fn solve_c_detuned<T: Real>(
    p: &ModelParamsDetunedJC,
    t_max: T,
    tol: &IntegratorTolerances<T>,
) -> Result<SampledAmplitude<T>, DynamicsError> {
    if !(t_max > T::zero()) {
        return Err(DynamicsError::InvalidParams("t_max must be positive".into()));
    }
    let n = DETUNED_SAMPLES;
    let times: Vec<T> = (0..=n)
        .map(|i| t_max * T::from_usize(i).unwrap() / T::from_usize(n).unwrap())
        .collect();
    let (k0, a) = detuned_generator::<T>(p);
    let rhs = |_t: T, y: &CMatrix<T>| {
        let (c, g) = (y[(0, 0)], y[(1, 0)]);
        CMatrix::new(2, 1, vec![-g, k0 * c - a * g]).expect("2×1")
    };
    let y0 = CMatrix::new(2, 1, vec![re(T::one()), re(T::zero())]).expect("2×1");
    let mut values = vec![re(T::zero()); n + 1];
    integrate(rhs, T::zero(), y0, &times, tol, |i, _, y| values[i] = y[(0, 0)])?;
    Ok(SampledAmplitude { times, values })
}

// ---------------------------------------------------------------------------
// Spin bath

fn spin_phase<T: Real>(p: &ModelParamsSpinBath, t: T) -> T {
    let n = T::from_u32(p.n_spins).unwrap();
    T::lit(2.0) * T::lit(p.coupling) * t / n.sqrt()
}

/// Coherence decay `f(t) = cos^N(2At/√N)`.
pub fn oracle_f_spinbath<T: Real>(p: &ModelParamsSpinBath, t: T) -> T {
    spin_phase(p, t).cos().powi(p.n_spins as i32)
}

/// `γ(t) = A√N tan(2At/√N)`, the rate reproducing `f` under `σ_z` dephasing.
pub fn oracle_gamma_spinbath<T: Real>(p: &ModelParamsSpinBath, t: T) -> Result<T, DynamicsError> {
    let x = spin_phase(p, t);
    if x.cos().abs() <= T::eps() * T::lit(16.0) {
        return Err(DynamicsError::PoleAt { t: t.to_f64_lossy() });
    }
    let n = T::from_u32(p.n_spins).unwrap();
    Ok(T::lit(p.coupling) * n.sqrt() * x.tan())
}

/// Zeros of `cos(2At/√N)`: `(π/4)√N/A + n (π/2)√N/A`.
pub fn singular_times_spinbath<T: Real>(p: &ModelParamsSpinBath) -> SingularTimes<T> {
    let period = T::lit(period_spinbath(p));
    SingularTimes::Periodic {
        first: period * T::lit(0.5),
        period,
    }
}

/// `(π/2)√N/A`.
pub fn period_spinbath(p: &ModelParamsSpinBath) -> f64 {
    std::f64::consts::FRAC_PI_2 * (p.n_spins as f64).sqrt() / p.coupling
}

/// `k = f(t₂)/f(t₁)`; `SingularPoint` when `f(t₁) = 0`.
pub fn oracle_k_spinbath<T: Real>(p: &ModelParamsSpinBath, t1: T, t2: T) -> Result<T, DynamicsError> {
    let f1 = oracle_f_spinbath(p, t1);
    if f1.is_zero() {
        return Err(DynamicsError::SingularPoint { t: t1.to_f64_lossy() });
    }
    Ok(oracle_f_spinbath(p, t2) / f1)
}

/// `arctan(½(|k| − 1))` for `|k| > 1`, else 0; `π/2` (flagged) at `f(t₁) = 0`.
pub fn oracle_ncp_spinbath<T: Real>(p: &ModelParamsSpinBath, t1: T, t2: T) -> Result<OracleNcp<T>, DynamicsError> {
    match oracle_k_spinbath(p, t1, t2) {
        Ok(k) => Ok(OracleNcp {
            value: ncp_from_ratio(k.abs()),
            singular_limit: false,
        }),
        Err(e) => {
            if oracle_f_spinbath(p, t2).is_zero() {
                Err(e)
            } else {
                Ok(OracleNcp {
                    value: T::FRAC_PI_2(),
                    singular_limit: true,
                })
            }
        }
    }
}

/// Normalized Choi state of the dephasing map with coherence factor `k`:
/// `½` on the diagonal corners, `½k` on the anti-corners.
pub fn oracle_choi_spinbath<T: Real>(k: T) -> CMatrix<T> {
    let h = T::lit(0.5);
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = re(h);
    m[(3, 3)] = re(h);
    m[(0, 3)] = re(h * k);
    m[(3, 0)] = re(h * k);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn damped(r: f64) -> ModelParamsDampedJC {
        ModelParamsDampedJC::new(r, 1.0).unwrap()
    }

    fn spin(n: u32) -> ModelParamsSpinBath {
        ModelParamsSpinBath::new(n, 1.0).unwrap()
    }

    #[test]
    fn c_damped_initial_value() {
        for r in [0.1, 0.5, 5.0] {
            assert_eq!(oracle_c_damped(&damped(r), 0.0), re(1.0));
        }
    }

    #[test]
    fn c_damped_first_zero_r5() {
        // |d| = 3: c = e^{−t/2}[cos(3t/2) + (1/3) sin(3t/2)], zero at tan(3t/2) = −3.
        let p = damped(5.0);
        let t0 = 2.0 * (std::f64::consts::PI - 3f64.atan()) / 3.0;
        assert!(oracle_c_damped(&p, t0).norm() < 1e-15);
        // Sign change across the bracket.
        assert!(oracle_c_damped(&p, t0 - 1e-3).re > 0.0);
        assert!(oracle_c_damped(&p, t0 + 1e-3).re < 0.0);
        match singular_times_damped::<f64>(&p) {
            SingularTimes::Periodic { first, period } => {
                assert!((first - t0).abs() < 1e-14);
                assert!((period - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn c_damped_monotone_for_small_r() {
        let p = damped(0.01);
        let mut prev = 1.0;
        for i in 1..200 {
            let c = oracle_c_damped(&p, i as f64 * 0.1).re;
            assert!(c < prev && c > 0.0);
            prev = c;
        }
    }

    #[test]
    fn c_damped_continuous_at_critical_ratio() {
        let t: f64 = 1.7;
        let at = oracle_c_damped::<f64>(&damped(0.5), t).re;
        let below = oracle_c_damped::<f64>(&damped(0.5 - 1e-9), t).re;
        let above = oracle_c_damped::<f64>(&damped(0.5 + 1e-9), t).re;
        assert!((at - below).abs() < 1e-8 && (at - above).abs() < 1e-8);
    }

    #[test]
    fn gamma_matches_log_derivative() {
        for r in [0.3, 0.5, 5.0] {
            let p = damped(r);
            for i in 1..40 {
                let t = 0.137 * i as f64;
                let Ok(g) = oracle_gamma_damped(&p, t) else { continue };
                let c = oracle_c_damped(&p, t);
                let cd = oracle_cdot_damped(&p, t);
                let want = -2.0 * (cd / c).re;
                assert!((g - want).abs() <= 1e-9 * want.abs().max(1.0), "R={r} t={t}");
            }
        }
    }

    #[test]
    fn gamma_signs() {
        assert_eq!(oracle_gamma_damped(&damped(5.0), 0.0).unwrap(), 0.0);
        let p = damped(0.3);
        assert!((1..200).all(|i| oracle_gamma_damped(&p, i as f64 * 0.05).unwrap() >= 0.0));
        let p = damped(5.0);
        assert!((1..200).any(|i| oracle_gamma_damped(&p, i as f64 * 0.05).is_ok_and(|g| g < 0.0)));
    }

    #[test]
    fn gamma_pole_detected() {
        let p = damped(5.0);
        let t0 = 2.0 * (std::f64::consts::PI - 3f64.atan()) / 3.0;
        // Close enough that the denominator underflows relative to the numerator.
        let r = oracle_gamma_damped(&p, t0);
        assert!(matches!(r, Err(DynamicsError::PoleAt { .. })) || r.unwrap().abs() > 1e12);
    }

    #[test]
    fn ncp_damped_cases() {
        let p = damped(0.3);
        for (t1, t2) in [(0.0, 1.0), (1.0, 3.0), (2.5, 2.5)] {
            assert_eq!(oracle_ncp_damped(&p, t1, t2).unwrap().value, 0.0);
        }
        let p = damped(5.0);
        assert_eq!(oracle_ncp_damped(&p, 1.0, 1.0).unwrap().value, 0.0);
        // Just below the first zero, out to the following extremum.
        let t0 = 2.0 * (std::f64::consts::PI - 3f64.atan()) / 3.0;
        let v = oracle_ncp_damped(&p, t0 - 1e-6, t0 + 1.0).unwrap();
        assert!(!v.singular_limit && v.value > 1.5 && v.value < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn k_spinbath_examples() {
        let p = spin(1);
        for t2 in [0.1, 0.7, 2.0] {
            assert!(oracle_k_spinbath::<f64>(&p, 0.0, t2).unwrap().abs() <= 1.0);
            assert_eq!(oracle_ncp_spinbath(&p, 0.0, t2).unwrap().value, 0.0);
        }
        let pi = std::f64::consts::PI;
        let k = oracle_k_spinbath(&p, pi / 3.0, 5.0 * pi / 12.0).unwrap();
        assert!((k - 3f64.sqrt()).abs() < 1e-12);
        let v = oracle_ncp_spinbath(&p, pi / 3.0, 5.0 * pi / 12.0).unwrap().value;
        assert!((v - 0.350_879_4).abs() < 1e-6, "{v}");
        let near = oracle_ncp_spinbath(&p, pi / 4.0 - 1e-9, pi / 2.0).unwrap().value;
        assert!(std::f64::consts::FRAC_PI_2 - near < 1e-8);
    }

    #[test]
    fn spinbath_singular_times() {
        let pi = std::f64::consts::PI;
        let s = singular_times_spinbath::<f64>(&spin(1));
        let got = s.in_range(0.0, 4.0);
        let want = [pi / 4.0, 3.0 * pi / 4.0, 5.0 * pi / 4.0];
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-14);
        }
        assert!((period_spinbath(&spin(4)) - pi).abs() < 1e-15);
    }

    #[test]
    fn spinbath_rate_matches_log_derivative() {
        let p = spin(3);
        for i in 1..30 {
            let t = 0.05 * i as f64;
            let h = 1e-6;
            let f = |t| oracle_f_spinbath(&p, t);
            let dlog = (f(t + h) - f(t - h)) / (2.0 * h) / f(t);
            let g = oracle_gamma_spinbath(&p, t).unwrap();
            assert!((-2.0 * g - dlog).abs() < 1e-6 * g.abs().max(1.0));
        }
    }

    #[test]
    fn detuned_reduces_to_damped_at_zero_detuning() {
        for r in [0.3, 0.5, 5.0] {
            let pd = damped(r);
            let pt = ModelParamsDetunedJC::new(r, 1.0, 0.0).unwrap();
            for i in 0..50 {
                let t = 0.11 * i as f64;
                let a = oracle_c_damped(&pd, t);
                let b = oracle_c_detuned(&pt, t);
                assert!((a - b).norm() < 1e-12, "R={r} t={t}");
            }
        }
    }

    #[test]
    fn numeric_detuned_matches_closed_form() {
        for delta in [0.0, 4.0, 10.0] {
            let p = ModelParamsDetunedJC::new(0.3, 1.0, delta).unwrap();
            let s = solve_c_detuned(&p, 20.0, &IntegratorTolerances::new(1e-11, 1e-13)).unwrap();
            assert_eq!(s.values[0], re(1.0));
            for (t, c) in s.times.iter().zip(&s.values) {
                assert!((oracle_c_detuned(&p, *t) - c).norm() < 1e-8, "Δ={delta} t={t}");
            }
        }
        let pd = damped(0.3);
        let p = ModelParamsDetunedJC::new(0.3, 1.0, 0.0).unwrap();
        let s = solve_c_detuned(&p, 10.0, &IntegratorTolerances::new(1e-11, 1e-13)).unwrap();
        for (t, c) in s.times.iter().zip(&s.values) {
            assert!((oracle_c_damped(&pd, *t) - c).norm() < 1e-8);
        }
        assert!((s.at(5.0) - oracle_c_damped(&pd, 5.0)).norm() < 1e-4);
    }

    #[test]
    fn detuned_amplitude_non_monotone() {
        let p = ModelParamsDetunedJC::new(0.3, 1.0, 10.0).unwrap();
        let mags: Vec<f64> = (0..400).map(|i| oracle_c_detuned(&p, i as f64 * 0.01).norm()).collect();
        assert!(mags.windows(2).any(|w| w[1] > w[0]));
        assert!(mags[399] < 1.0);
    }

    #[test]
    fn single_precision_oracles() {
        let v = oracle_c_damped::<f32>(&damped(0.3), 1.0).re;
        assert!((v as f64 - oracle_c_damped::<f64>(&damped(0.3), 1.0).re).abs() < 1e-6);
    }
}
