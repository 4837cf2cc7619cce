//! Shannon and Holevo information for one-way Gaussian protocols with reverse
//! reconciliation.
//!
//! Everything is evaluated in the entanglement-based picture: Alice holds one
//! half of a two-mode squeezed vacuum of variance `V = V_A + 1`, the channel is
//! an entangling cloner with transmittance `T` and input-referred excess noise
//! `ε`, and Bob's detector (efficiency η, noise υe) is a trusted beamsplitter
//! fed by a thermal mode. With
//!
//! ```text
//! χ_line = 1/T − 1 + ε
//! χ_hom  = (1 − η + υe)/η          χ_het = (2 − η + 2υe)/η
//! χ_tot  = χ_line + χ_det/T
//! ```
//!
//! the eigenvalues of Alice–Bob's state are `λ₁,₂² = ½(A ± √(A² − 4B))` with
//!
//! ```text
//! A = V²(1 − 2T) + 2T + T²(V + χ_line)²,   B = T²(Vχ_line + 1)²
//! ```
//!
//! and the conditional eigenvalues after Bob's measurement are
//! `λ₃,₄² = ½(C ± √(C² − 4D))` with the usual homodyne/heterodyne `C`, `D`.
//! Products `T·χ_line = 1 − T + Tε` are formed directly so the expressions stay
//! finite as `T → 0`.
//!
//! The squeezed-state protocol shares the coherent homodyne state (and so its
//! Holevo bound); only Alice's side differs. Alice's squeezed states have
//! variance `1/V` and are displaced with variance `V − 1/V`, which gives
//! `I_AB = ½ log₂((V + χ_tot)/(1/V + χ_tot))`. No finite-squeezing cap is
//! applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise_model::{ChannelLink, EffectiveNoise, SHOT_NOISE};

/// Eigenvalues below this are an inconsistency, not rounding.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-6;

const DISCRIMINANT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolFamily {
    SqueezedHomodyne,
    /// GG02.
    CoherentHomodyne,
    CoherentHeterodyne,
}

impl ProtocolFamily {
    pub const ALL: [ProtocolFamily; 3] = [
        ProtocolFamily::SqueezedHomodyne,
        ProtocolFamily::CoherentHomodyne,
        ProtocolFamily::CoherentHeterodyne,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolFamily::SqueezedHomodyne => "squeezed-homodyne",
            ProtocolFamily::CoherentHomodyne => "coherent-homodyne",
            ProtocolFamily::CoherentHeterodyne => "coherent-heterodyne",
        }
    }

    pub fn is_heterodyne(&self) -> bool {
        matches!(self, ProtocolFamily::CoherentHeterodyne)
    }

    /// Detection noise referred to Bob's input.
    fn detection_chi(&self, eta: f64, trusted_noise: f64) -> f64 {
        if self.is_heterodyne() {
            (2.0 - eta + 2.0 * trusted_noise) / eta
        } else {
            (1.0 - eta + trusted_noise) / eta
        }
    }
}

impl std::fmt::Display for ProtocolFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProtocolFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "squeezed-homodyne" | "squeezed" => Ok(ProtocolFamily::SqueezedHomodyne),
            "coherent-homodyne" | "gg02" => Ok(ProtocolFamily::CoherentHomodyne),
            "coherent-heterodyne" | "no-switching" => Ok(ProtocolFamily::CoherentHeterodyne),
            other => Err(Error::domain(format!("unknown protocol family `{other}`"))),
        }
    }
}

/// Protocol family plus reverse-reconciliation efficiency β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub family: ProtocolFamily,
    pub beta: f64,
}

impl ProtocolSpec {
    pub fn new(family: ProtocolFamily, beta: f64) -> Result<Self> {
        let spec = ProtocolSpec { family, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::domain(format!(
                "reconciliation efficiency must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Physical parameters seen by the information layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub transmittance: f64,
    pub eta: f64,
    pub trusted_noise: f64,
    /// Excess noise attributed to Eve, channel-input referred.
    pub epsilon: f64,
}

impl ChannelState {
    pub fn new(link: &ChannelLink, noise: &EffectiveNoise) -> Self {
        ChannelState {
            transmittance: link.transmittance,
            eta: link.eta,
            trusted_noise: noise.trusted_noise,
            epsilon: noise.epsilon,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(Error::domain(format!(
                "transmittance must lie in (0, 1], got {}",
                self.transmittance
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain(format!("η must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.trusted_noise >= 0.0) {
            return Err(Error::domain(format!(
                "trusted noise must be non-negative, got {}",
                self.trusted_noise
            )));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::domain(format!(
                "excess noise must be non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    fn eta_t(&self) -> f64 {
        self.eta * self.transmittance
    }
}

fn check_va(va: f64) -> Result<()> {
    if !(va > 0.0) || !va.is_finite() {
        return Err(Error::domain(format!("modulation variance must be positive, got {va}")));
    }
    Ok(())
}

/// Von Neumann entropy (bits) of a thermal state with mean photon number `x`.
pub fn entropy_g(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("g(x) needs x ≥ 0, got {x}")));
    }
    Ok(g(x))
}

fn g(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((x + 1.0) * x.ln_1p() - x * x.ln()) / std::f64::consts::LN_2
}

/// Entropy contribution of a symplectic eigenvalue.
fn g_of_eigenvalue(lambda: f64) -> f64 {
    g((lambda - 1.0) / 2.0)
}

/// Shannon information between Alice's modulation and Bob's outcome, bits per
/// symbol, from Bob's signal-to-noise ratio.
pub fn mutual_information(family: ProtocolFamily, va: f64, state: &ChannelState) -> Result<f64> {
    check_va(va)?;
    state.validate()?;
    let eta_t = state.eta_t();
    let noise = SHOT_NOISE + state.trusted_noise + eta_t * state.epsilon;
    let bits = match family {
        ProtocolFamily::CoherentHomodyne => 0.5 * (eta_t * va / noise).ln_1p(),
        ProtocolFamily::CoherentHeterodyne => {
            // Each heterodyne arm sees half the signal and half the channel noise
            // plus a vacuum port.
            let arm_noise = SHOT_NOISE + state.trusted_noise + 0.5 * eta_t * state.epsilon;
            (0.5 * eta_t * va / arm_noise).ln_1p()
        }
        ProtocolFamily::SqueezedHomodyne => {
            let v = va + 1.0;
            let squeezed_noise = noise - eta_t * (1.0 - 1.0 / v);
            0.5 * (eta_t * (v - 1.0 / v) / squeezed_noise).ln_1p()
        }
    };
    Ok(bits / std::f64::consts::LN_2)
}

/// Same quantity as [`mutual_information`], through the χ parameterisation.
pub fn mutual_information_chi(family: ProtocolFamily, va: f64, state: &ChannelState) -> Result<f64> {
    check_va(va)?;
    state.validate()?;
    let v = va + 1.0;
    let t = state.transmittance;
    let chi_line = 1.0 / t - 1.0 + state.epsilon;
    let chi_tot = chi_line + family.detection_chi(state.eta, state.trusted_noise) / t;
    Ok(match family {
        ProtocolFamily::CoherentHomodyne => 0.5 * ((v + chi_tot) / (1.0 + chi_tot)).log2(),
        ProtocolFamily::CoherentHeterodyne => ((v + chi_tot) / (1.0 + chi_tot)).log2(),
        ProtocolFamily::SqueezedHomodyne => 0.5 * ((v + chi_tot) / (1.0 / v + chi_tot)).log2(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoBreakdown {
    pub i_ab: f64,
    pub s_ye: f64,
    /// λ₁ … λ₄ followed by the trivial λ₅ = 1.
    pub symplectic_eigs: Vec<f64>,
}

impl InfoBreakdown {
    pub fn key_rate(&self, beta: f64) -> f64 {
        beta * self.i_ab - self.s_ye
    }
}

/// Eigenvalue pair from `x² − a·x + p² = 0` in the squared variable, with the
/// product `p = λ₊λ₋` known in closed form.
fn eigen_pair(a: f64, product: f64) -> Result<(f64, f64)> {
    let mut disc = a * a - 4.0 * product * product;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_TOLERANCE * a * a {
            return Err(Error::InvalidCovariance {
                eigenvalue: (0.5 * a).sqrt(),
            });
        }
        disc = 0.0;
    }
    let large = (0.5 * (a + disc.sqrt())).sqrt();
    let small = product / large;
    Ok((floor_eigenvalue(large)?, floor_eigenvalue(small)?))
}

fn floor_eigenvalue(lambda: f64) -> Result<f64> {
    if !(lambda >= 1.0 - EIGENVALUE_TOLERANCE) {
        return Err(Error::InvalidCovariance { eigenvalue: lambda });
    }
    Ok(lambda.max(1.0))
}

/// Information Eve can hold on Bob's outcome under collective attacks, with
/// Alice–Bob mutual information and the eigenvalues behind it.
pub fn holevo_bound(family: ProtocolFamily, va: f64, state: &ChannelState) -> Result<InfoBreakdown> {
    let i_ab = mutual_information(family, va, state)?;
    let v = va + 1.0;
    let t = state.transmittance;
    let eps = state.epsilon;
    let chi_det = family.detection_chi(state.eta, state.trusted_noise);
    // T·χ_line and T·(V + χ_tot), formed without dividing by T.
    let t_chi_line = 1.0 - t + t * eps;
    let t_v_chi_line = t * v + t_chi_line;
    let t_v_chi_tot = t_v_chi_line + chi_det;
    let chi_line = t_chi_line / t;

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t_v_chi_line * t_v_chi_line;
    let sqrt_b = v * t_chi_line + t;
    let b = sqrt_b * sqrt_b;
    let (l1, l2) = eigen_pair(a, sqrt_b)?;

    let (c, sqrt_d) = if family.is_heterodyne() {
        let num = a * chi_det * chi_det
            + b
            + 1.0
            + 2.0 * chi_det * (v * sqrt_b + t_v_chi_line)
            + 2.0 * t * (v * v - 1.0);
        let c = num / (t_v_chi_tot * t_v_chi_tot);
        let sqrt_d = (v + sqrt_b * chi_det) / t_v_chi_tot;
        (c, sqrt_d)
    } else {
        let c = (v * sqrt_b + t_v_chi_line + a * chi_det) / t_v_chi_tot;
        let d = sqrt_b * (v + sqrt_b * chi_det) / t_v_chi_tot;
        (c, d.sqrt())
    };
    let (l3, l4) = eigen_pair(c, sqrt_d)?;
    debug_assert!(chi_line >= 0.0);

    // g(λ₁) − g(λ₃) etc. are both O(1) and nearly cancel at long distance;
    // pairing the terms keeps the rounding local.
    let s = (g_of_eigenvalue(l1) - g_of_eigenvalue(l3)) + (g_of_eigenvalue(l2) - g_of_eigenvalue(l4));
    Ok(InfoBreakdown {
        i_ab,
        s_ye: s.max(0.0),
        symplectic_eigs: vec![l1, l2, l3, l4, 1.0],
    })
}

/// Holevo bound evaluated from linear-model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSigmaHolevo {
    pub s_ye: f64,
    pub transmittance: f64,
    pub epsilon: f64,
    /// σ² fell below `1 + trusted noise` and ε was clamped to zero.
    pub eps_clamped: bool,
}

/// S(y:E) as a function of `(t, σ²)`: `T = t²/η`, `ε = (σ² − 1 − trusted)/t²`.
pub fn holevo_from_t_sigma(
    family: ProtocolFamily,
    va: f64,
    t: f64,
    sigma2: f64,
    eta: f64,
    trusted_noise: f64,
) -> Result<TSigmaHolevo> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("amplitude factor must be positive, got {t}")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::domain(format!("σ² must be positive, got {sigma2}")));
    }
    let t2 = t * t;
    let mut transmittance = t2 / eta;
    if transmittance > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "t² = {t2} exceeds η = {eta}: transmittance above one"
        )));
    }
    transmittance = transmittance.min(1.0);
    let raw_eps = (sigma2 - SHOT_NOISE - trusted_noise) / t2;
    let eps_clamped = raw_eps < 0.0;
    let epsilon = raw_eps.max(0.0);
    let state = ChannelState {
        transmittance,
        eta,
        trusted_noise,
        epsilon,
    };
    let info = holevo_bound(family, va, &state)?;
    Ok(TSigmaHolevo {
        s_ye: info.s_ye,
        transmittance,
        epsilon,
        eps_clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn state(t: f64, eta: f64, nu: f64, eps: f64) -> ChannelState {
        ChannelState { transmittance: t, eta, trusted_noise: nu, epsilon: eps }
    }

    // ---- covariance-matrix oracle -------------------------------------------------
    //
    // Modes: 0 Alice, 1 Bob, 2–3 Eve's EPR pair, 4–5 detector thermal EPR pair.

    fn omega(n: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            w[(2 * k, 2 * k + 1)] = 1.0;
            w[(2 * k + 1, 2 * k)] = -1.0;
        }
        w
    }

    fn symplectic_spectrum(g: &DMatrix<f64>) -> Vec<f64> {
        let n = g.nrows() / 2;
        let eig = SymmetricEigen::new(g.clone());
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()))
            * eig.eigenvectors.transpose();
        let w = omega(n);
        let m = &root * w.transpose() * g * &w * &root;
        let m = (&m + m.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev.into_iter().step_by(2).collect()
    }

    fn place_epr(g: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
        let c = (v * v - 1.0).max(0.0).sqrt();
        for q in 0..2 {
            g[(2 * i + q, 2 * i + q)] = v;
            g[(2 * j + q, 2 * j + q)] = v;
            let s = if q == 0 { c } else { -c };
            g[(2 * i + q, 2 * j + q)] = s;
            g[(2 * j + q, 2 * i + q)] = s;
        }
    }

    fn beamsplitter(n: usize, i: usize, j: usize, t: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * n, 2 * n);
        let (c, r) = (t.sqrt(), (1.0 - t).sqrt());
        for q in 0..2 {
            let (a, b) = (2 * i + q, 2 * j + q);
            s[(a, a)] = c;
            s[(a, b)] = r;
            s[(b, a)] = -r;
            s[(b, b)] = c;
        }
        s
    }

    fn sub(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| g[(rows[r], cols[c])])
    }

    fn entropy(g: &DMatrix<f64>) -> f64 {
        symplectic_spectrum(g).into_iter().map(g_of_eigenvalue).sum()
    }

    /// S(y:E) = S(AB) − S(AFG | y), built mode by mode.
    fn holevo_oracle(family: ProtocolFamily, va: f64, s: &ChannelState) -> f64 {
        let v = va + 1.0;
        let w = 1.0 + s.transmittance * s.epsilon / (1.0 - s.transmittance);
        let nu_scale = if family.is_heterodyne() { 2.0 } else { 1.0 };
        let vn = 1.0 + nu_scale * s.trusted_noise / (1.0 - s.eta);
        let mut g = DMatrix::zeros(12, 12);
        place_epr(&mut g, 0, 1, v);
        place_epr(&mut g, 2, 3, w);
        place_epr(&mut g, 4, 5, vn);
        let b1 = beamsplitter(6, 1, 2, s.transmittance);
        g = &b1 * &g * b1.transpose();
        let ab = [0, 1, 2, 3];
        let s_ab = entropy(&sub(&g, &ab, &ab));
        let b2 = beamsplitter(6, 1, 4, s.eta);
        g = &b2 * &g * b2.transpose();
        let rest = [0, 1, 8, 9, 10, 11];
        let bob = [2, 3];
        let gr = sub(&g, &rest, &rest);
        let c = sub(&g, &rest, &bob);
        let gb = sub(&g, &bob, &bob);
        let cond = if family.is_heterodyne() {
            let inv = (gb + DMatrix::identity(2, 2)).try_inverse().unwrap();
            &gr - &c * inv * c.transpose()
        } else {
            let mut pinv = DMatrix::zeros(2, 2);
            pinv[(0, 0)] = 1.0 / gb[(0, 0)];
            &gr - &c * pinv * c.transpose()
        };
        s_ab - entropy(&cond)
    }

    #[test]
    fn g_examples() {
        assert_eq!(entropy_g(0.0).unwrap(), 0.0);
        assert_relative_eq!(entropy_g(1.0).unwrap(), 2.0, max_relative = 1e-15);
        let oracle = 1.5 * 1.5f64.log2() - 0.5 * 0.5f64.log2();
        assert_relative_eq!(entropy_g(0.5).unwrap(), oracle, max_relative = 1e-14);
        assert_relative_eq!(oracle, 1.37744, max_relative = 1e-5);
        assert!(matches!(entropy_g(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn ideal_channel_homodyne_information_is_one_bit() {
        let i = mutual_information(ProtocolFamily::CoherentHomodyne, 3.0, &state(1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(i, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn homodyne_information_snr_example() {
        let s = state(0.1 / 0.6, 0.6, 0.1, 0.01);
        let i = mutual_information(ProtocolFamily::CoherentHomodyne, 4.0, &s).unwrap();
        let oracle = 0.5 * (1.0 + 0.4 / 1.101f64).log2();
        assert_relative_eq!(i, oracle, max_relative = 1e-12);
        assert!((i - 0.22355).abs() < 5e-5);
    }

    #[test]
    fn heterodyne_information_ideal_channel() {
        let s = state(1.0, 1.0, 0.0, 0.0);
        let i = mutual_information(ProtocolFamily::CoherentHeterodyne, 3.0, &s).unwrap();
        assert_relative_eq!(i, (1.0f64 + 1.5).log2(), max_relative = 1e-14);
        assert_relative_eq!(i, mutual_information_chi(ProtocolFamily::CoherentHeterodyne, 3.0, &s).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn decoupled_limit_for_every_family() {
        for family in ProtocolFamily::ALL {
            for va in [0.5, 3.0, 40.0] {
                let info = holevo_bound(family, va, &state(1.0, 1.0, 0.0, 0.0)).unwrap();
                assert!(info.s_ye.abs() < 1e-9, "{family} V_A={va}: {}", info.s_ye);
                for l in &info.symplectic_eigs {
                    assert!((l - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_covariance_oracle() {
        let points = [
            (4.0, 0.3, 0.6, 0.1, 0.01),
            (10.0, 0.05, 0.7, 0.2, 0.05),
            (3.0, 0.9, 0.9, 0.0, 0.02),
            (25.0, 0.01, 0.6, 0.1005, 0.005),
            (1.0, 0.5, 0.5, 0.3, 0.1),
        ];
        for family in ProtocolFamily::ALL {
            for &(va, t, eta, nu, eps) in &points {
                let s = state(t, eta, nu, eps);
                let closed = holevo_bound(family, va, &s).unwrap().s_ye;
                let oracle = holevo_oracle(family, va, &s);
                assert!(
                    (closed - oracle).abs() < 1e-9 * oracle.max(1.0),
                    "{family} {va} {t}: closed {closed} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn eigenvalues_are_physical() {
        let info = holevo_bound(ProtocolFamily::CoherentHeterodyne, 7.0, &state(0.2, 0.6, 0.1, 0.03)).unwrap();
        assert_eq!(info.symplectic_eigs.len(), 5);
        assert!(info.symplectic_eigs.iter().all(|&l| l >= 1.0 - 1e-9));
    }

    #[test]
    fn gg02_at_39_km_leaves_positive_key() {
        let s = state(10f64.powf(-0.78), 0.6, 0.1, 0.01);
        let best = (1..400)
            .map(|k| k as f64 * 0.05)
            .map(|va| holevo_bound(ProtocolFamily::CoherentHomodyne, va, &s).unwrap().key_rate(0.95))
            .fold(f64::MIN, f64::max);
        assert!(best > 0.0);
    }

    #[test]
    fn holevo_vs_transmittance_has_interior_maximum() {
        let curve: Vec<f64> = (1..1000)
            .map(|k| k as f64 / 1000.0)
            .map(|t| holevo_bound(ProtocolFamily::CoherentHomodyne, 4.0, &state(t, 0.6, 0.1005, 0.005)).unwrap().s_ye)
            .collect();
        let (imax, _) = curve.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!(imax > 0 && imax < curve.len() - 1);
        assert!(curve[..imax].windows(2).all(|w| w[1] > w[0]));
        assert!(curve[imax..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn t_sigma_encoding_round_trips() {
        let (eta, nu) = (0.6, 0.1);
        for family in ProtocolFamily::ALL {
            let s = state(0.25, eta, nu, 0.02);
            let t = (eta * s.transmittance).sqrt();
            let sigma2 = 1.0 + nu + t * t * s.epsilon;
            let via = holevo_from_t_sigma(family, 5.0, t, sigma2, eta, nu).unwrap();
            let direct = holevo_bound(family, 5.0, &s).unwrap().s_ye;
            assert_relative_eq!(via.s_ye, direct, max_relative = 1e-12);
            assert!(!via.eps_clamped);
        }
    }

    #[test]
    fn t_sigma_rejects_supraunit_transmittance_and_clamps_noise() {
        let f = ProtocolFamily::CoherentHomodyne;
        assert!(matches!(holevo_from_t_sigma(f, 4.0, 0.8, 1.2, 0.6, 0.1), Err(Error::Domain(_))));
        let r = holevo_from_t_sigma(f, 4.0, 0.3, 1.05, 0.6, 0.1).unwrap();
        assert!(r.eps_clamped);
        assert_eq!(r.epsilon, 0.0);
    }

    #[test]
    fn fixed_sigma_derivative_positive_left_of_peak() {
        let (eta, nu, eps, va) = (0.6, 0.1005, 0.005, 4.0);
        let t0 = (eta * 0.1f64).sqrt();
        let sigma2 = 1.0 + nu + t0 * t0 * eps;
        let h = 1e-6;
        let s = |t: f64| holevo_from_t_sigma(ProtocolFamily::CoherentHomodyne, va, t, sigma2, eta, nu).unwrap().s_ye;
        assert!((s(t0 + h) - s(t0 - h)) / (2.0 * h) > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn information_routes_agree(
            va in 0.01f64..100.0, t in 1e-4f64..1.0, eta in 0.05f64..1.0,
            nu in 0.0f64..0.5, eps in 0.0f64..0.2,
        ) {
            let s = state(t, eta, nu, eps);
            for family in ProtocolFamily::ALL {
                let a = mutual_information(family, va, &s).unwrap();
                let b = mutual_information_chi(family, va, &s).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300) + 1e-15, "{} {} {}", family, a, b);
            }
        }

        #[test]
        fn holevo_increases_with_excess_noise(
            va in 0.5f64..50.0, t in 0.01f64..0.99, eta in 0.3f64..1.0,
            nu in 0.0f64..0.3, eps in 0.0f64..0.1,
        ) {
            let h = 1e-4;
            for family in ProtocolFamily::ALL {
                let lo = holevo_bound(family, va, &state(t, eta, nu, eps)).unwrap().s_ye;
                let hi = holevo_bound(family, va, &state(t, eta, nu, eps + h)).unwrap().s_ye;
                prop_assert!(hi > lo);
            }
        }
    }
}
