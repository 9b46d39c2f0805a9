//! Closed-form incentive-compatibility bounds.
//!
//! Every bound is a function of the explorability parameters `(α, Δ)`, the
//! drift bound `ρ`, a regret level `R`, and the belief statistics
//! `(Ψ_max, Φ, W₂)`. Two auxiliary quantities recur:
//!
//! * `Δ̃ = Δ − 2ρΨ_max`, the gap that survives drift across the support;
//! * `c = 2√(2 W₂ ln 2K)`, the realized-to-pseudo regret slack.
//!
//! An `η` whose denominator is not positive is `+∞`, and `ε = min(η_Ψ, η_Φ, 1)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::regret::azuma_bound_from_w2;
use crate::temporal::TemporalBelief;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("{name} = {value} is outside its valid range")]
    InvalidInput { name: &'static str, value: f64 },
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("window length {window} must lie in 1..={horizon}")]
    InvalidWindow { window: usize, horizon: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretKind {
    #[default]
    External,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub alpha: f64,
    #[serde(rename = "Delta")]
    pub gap: f64,
    pub rho: f64,
    pub regret: f64,
    #[serde(default)]
    pub regret_kind: RegretKind,
    pub psi_max: f64,
    pub phi: f64,
    pub w2: f64,
    #[serde(rename = "K")]
    pub arms: usize,
    /// TV radius around the belief class the regret guarantee covers.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Confidence level; `None` uses the expectation form of `c`.
    #[serde(default)]
    pub delta: Option<f64>,
}

impl BoundInputs {
    /// Inputs with the dispersion statistics of `belief`.
    pub fn for_belief(belief: &TemporalBelief, arms: usize, alpha: f64, gap: f64, rho: f64, regret: f64) -> Self {
        Self {
            alpha,
            gap,
            rho,
            regret,
            regret_kind: RegretKind::External,
            psi_max: belief.psi_max(),
            phi: belief.phi(),
            w2: belief.w2(),
            arms,
            beta: None,
            delta: None,
        }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        let bad = |name, value| Err(BoundError::InvalidInput { name, value });
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", self.alpha);
        }
        if !(self.gap > 0.0 && self.gap <= 1.0) {
            return bad("Delta", self.gap);
        }
        for (name, v) in [("rho", self.rho), ("regret", self.regret), ("psi_max", self.psi_max), ("phi", self.phi)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, v);
            }
        }
        if !(self.w2 > 0.0 && self.w2 <= 1.0) {
            return bad("w2", self.w2);
        }
        if self.arms == 0 {
            return bad("K", 0.0);
        }
        if let Some(b) = self.beta.filter(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("beta", b);
        }
        if let Some(d) = self.delta.filter(|d| !(*d > 0.0 && *d < 1.0)) {
            return bad("delta", d);
        }
        Ok(())
    }

    fn c_term(&self) -> f64 {
        azuma_bound_from_w2(self.w2, self.arms, self.delta).expect("validated inputs")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundFlags {
    pub eta_psi_infinite: bool,
    pub eta_phi_infinite: bool,
    /// `ε` was capped at 1.
    pub epsilon_capped: bool,
    /// `ε` was floored at 0 because a numerator was negative.
    pub epsilon_floored: bool,
    pub delta_tilde_nonpositive: bool,
    pub prob_psi_clamped: bool,
    pub prob_phi_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta_tilde: f64,
    pub c_term: f64,
    /// Regret level used, after any TV transfer.
    pub regret: f64,
    #[serde(with = "extended_f64")]
    pub eta_psi: f64,
    #[serde(with = "extended_f64")]
    pub eta_phi: f64,
    pub epsilon: f64,
    pub prob_lower_bound_psi: f64,
    pub prob_lower_bound_phi: f64,
    pub flags: BoundFlags,
}

impl BoundReport {
    /// True when the bound says nothing (`ε = 1`).
    pub fn is_vacuous(&self) -> bool {
        self.epsilon >= 1.0
    }
}

/// Serializes infinities as the strings `"+inf"` / `"-inf"`.
mod extended_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str(if *x > 0.0 { "+inf" } else { "-inf" })
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {other:?}"))),
            },
        }
    }
}

fn eta(numerator: f64, denominator: f64) -> (f64, bool) {
    if denominator > 0.0 {
        (numerator / denominator, false)
    } else {
        (f64::INFINITY, true)
    }
}

fn assemble(inputs: &BoundInputs, regret: f64, num_psi: f64, num_phi: f64, den_psi: f64, den_phi: f64) -> BoundReport {
    let c = inputs.c_term();
    let delta_tilde = inputs.gap - 2.0 * inputs.rho * inputs.psi_max;
    let (eta_psi, psi_inf) = eta(num_psi, inputs.alpha * den_psi);
    let (eta_phi, phi_inf) = eta(num_phi, inputs.alpha * den_phi);
    let raw = eta_psi.min(eta_phi).min(1.0);
    let (lb_psi, lb_phi, mut flags) = prob_bounds_inner(inputs, regret);
    flags.eta_psi_infinite = psi_inf;
    flags.eta_phi_infinite = phi_inf;
    flags.epsilon_capped = eta_psi.min(eta_phi) >= 1.0;
    flags.epsilon_floored = raw < 0.0;
    BoundReport {
        delta_tilde,
        c_term: c,
        regret,
        eta_psi,
        eta_phi,
        epsilon: raw.max(0.0),
        prob_lower_bound_psi: lb_psi,
        prob_lower_bound_phi: lb_phi,
        flags,
    }
}

/// `ε` from a swap-regret guarantee.
///
/// `η_Ψ = RΔ̃ / (α(Δ̃ − R − c))`, `η_Φ = RΔ / (α(Δ − (R + c + 2ρΦ)))`.
pub fn epsilon_swap(inputs: &BoundInputs) -> Result<BoundReport, BoundError> {
    inputs.validate()?;
    let (r, c) = (inputs.regret, inputs.c_term());
    let dt = inputs.gap - 2.0 * inputs.rho * inputs.psi_max;
    let drift_phi = 2.0 * inputs.rho * inputs.phi;
    Ok(assemble(inputs, r, r * dt, r * inputs.gap, dt - r - c, inputs.gap - (r + c + drift_phi)))
}

fn external_with_regret(inputs: &BoundInputs, r: f64) -> BoundReport {
    let c = inputs.c_term();
    let dt = inputs.gap - 2.0 * inputs.rho * inputs.psi_max;
    let drift_phi = 2.0 * inputs.rho * inputs.phi;
    let head = r + drift_phi + c;
    assemble(inputs, r, head * dt, head * inputs.gap, dt - r - c, inputs.gap - drift_phi - r - c)
}

/// `ε` from an external-regret guarantee.
///
/// With `h = R + 2ρΦ + c`: `η_Ψ = hΔ̃ / (α(Δ̃ − R − c))`, `η_Φ = hΔ / (α(Δ − 2ρΦ − R − c))`.
pub fn epsilon_external(inputs: &BoundInputs) -> Result<BoundReport, BoundError> {
    inputs.validate()?;
    Ok(external_with_regret(inputs, inputs.regret))
}

fn prob_bounds_inner(inputs: &BoundInputs, r: f64) -> (f64, f64, BoundFlags) {
    let c = inputs.c_term();
    let dt = inputs.gap - 2.0 * inputs.rho * inputs.psi_max;
    let mut flags = BoundFlags::default();
    let psi = if dt > 0.0 {
        let raw = inputs.alpha * (1.0 - (r + c) / dt);
        flags.prob_psi_clamped = !(0.0..=1.0).contains(&raw);
        raw.clamp(0.0, 1.0)
    } else {
        flags.delta_tilde_nonpositive = true;
        flags.prob_psi_clamped = true;
        0.0
    };
    let raw = inputs.alpha * (1.0 - (r + c + 2.0 * inputs.rho * inputs.phi) / inputs.gap);
    flags.prob_phi_clamped = !(0.0..=1.0).contains(&raw);
    (psi, raw.clamp(0.0, 1.0), flags)
}

/// Lower bounds on `P(I_τ = a)`: `(α(1 − (R + c)/Δ̃), α(1 − (R + c + 2ρΦ)/Δ))`, each in `[0, 1]`.
pub fn prob_lower_bounds(inputs: &BoundInputs) -> Result<(f64, f64), BoundError> {
    inputs.validate()?;
    let (psi, phi, _) = prob_bounds_inner(inputs, inputs.regret);
    Ok((psi, phi))
}

/// Regret level after moving to a belief within TV distance `beta`.
pub fn tv_transfer(regret_bound: f64, beta: f64) -> f64 {
    regret_bound + 2.0 * beta
}

/// External-regret `ε` with `R' = B + 2β`, `B = inputs.regret`, `β = inputs.beta`.
pub fn epsilon_with_tv(inputs: &BoundInputs) -> Result<BoundReport, BoundError> {
    inputs.validate()?;
    Ok(external_with_regret(inputs, tv_transfer(inputs.regret, inputs.beta.unwrap_or(0.0))))
}

/// A mixture of beliefs inherits the worst component guarantee.
pub fn mixture_epsilon(components: &[BoundReport]) -> Result<f64, BoundError> {
    components.iter().map(|r| r.epsilon).reduce(f64::max).ok_or(BoundError::EmptyMixture)
}

/// Which horizon the Exp4.S interval-regret rate is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowTuning {
    /// Rate `C√(TK ln TK) / L`.
    #[default]
    Horizon,
    /// Rate `C√(LK ln LK) / L`.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformWindowParams {
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "L")]
    pub window: usize,
    #[serde(rename = "K")]
    pub arms: usize,
    pub alpha: f64,
    #[serde(rename = "Delta")]
    pub gap: f64,
    pub rho: f64,
    #[serde(default = "one")]
    pub regret_constant: f64,
    #[serde(default)]
    pub tuning: WindowTuning,
}

fn one() -> f64 {
    1.0
}

/// `D`-weighted regret rate of Exp4.S on a length-`L` uniform window.
pub fn uniform_window_regret(p: &UniformWindowParams) -> f64 {
    let n = match p.tuning {
        WindowTuning::Horizon => p.horizon,
        WindowTuning::Window => p.window,
    } as f64;
    let k = p.arms as f64;
    p.regret_constant * (n * k * (n * k).ln()).sqrt() / p.window as f64
}

/// External-regret `ε` for a uniform window `𝒰_{s,L}` using the closed forms
/// `Ψ_max = (L−1)/2`, `Φ = (L²−1)/(3L)`, `W₂ = 1/L`.
pub fn uniform_window_epsilon(p: &UniformWindowParams) -> Result<BoundReport, BoundError> {
    if p.window == 0 || p.window > p.horizon {
        return Err(BoundError::InvalidWindow { window: p.window, horizon: p.horizon });
    }
    if !(p.regret_constant.is_finite() && p.regret_constant >= 0.0) {
        return Err(BoundError::InvalidInput { name: "regret_constant", value: p.regret_constant });
    }
    let l = p.window as f64;
    epsilon_external(&BoundInputs {
        alpha: p.alpha,
        gap: p.gap,
        rho: p.rho,
        regret: uniform_window_regret(p),
        regret_kind: RegretKind::External,
        psi_max: (l - 1.0) / 2.0,
        phi: (l * l - 1.0) / (3.0 * l),
        w2: 1.0 / l,
        arms: p.arms,
        beta: None,
        delta: None,
    })
}
