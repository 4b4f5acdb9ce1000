//! Radial multiplier symbols m(r): families, exact derivatives and
//! numerical checkers for positivity/monotonicity, the Mikhlin-type
//! derivative bounds and the Osgood condition.
//!
//! Derivatives are propagated through truncated Taylor arithmetic, so they
//! are exact to rounding for every composed family (no finite-difference
//! noise). The classifier estimates the growth limits
//!
//!   β  = lim r (log r)(log log r) m'(r)/m(r),
//!   β₁ = lim r (log r) m'(r)/m(r),
//!   β₂ = lim (log r)(r m''(r) + m'(r))/m'(r),
//!   α  = lim r m'(r)/m(r),
//!
//! on a geometric probe grid with Aitken extrapolation and applies the
//! growth-class decision rule: bounded symbols satisfy the Osgood condition,
//! power-law symbols fail it, and intermediate symbols hold exactly when
//! β ≤ 1 (with a ±0.05 indeterminacy band around the critical value).

use crate::quad::aitken;
use crate::taylor::Jet;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

mod expr;
pub use expr::Expr;

/// Symbol family and its parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SymbolSpec {
    /// m(r) = 1
    Euler,
    /// m(r) = r^alpha, 0 < alpha < 2
    AlphaSqg { alpha: f64 },
    /// m(r) = log^beta(1 + log(1 + r^2)), beta > 0
    LoglogEuler { beta: f64 },
    /// m(r) = log^beta1(1 + r), beta1 > 0
    LogEuler { beta1: f64 },
    /// m(r) = log(1 + log(1 + log(1 + r)))
    TripleLog,
    /// m(r) = r^2 / (r^2 + lambda^2), lambda > 0
    QgShallowWater { lambda: f64 },
    /// m(r) = 1 / (1 + lambda^2 r^2), lambda > 0 (not monotone)
    EulerLambda { lambda: f64 },
    /// user expression in the variable r
    Custom { expr: String },
}

#[derive(Debug, Clone)]
enum Family {
    Euler,
    AlphaSqg(f64),
    LoglogEuler(f64),
    LogEuler(f64),
    TripleLog,
    QgShallowWater(f64),
    EulerLambda(f64),
    Custom(Expr),
}

/// A radial multiplier symbol with derivative support up to `max_order`.
#[derive(Debug, Clone)]
pub struct MultiplierSymbol {
    spec: SymbolSpec,
    family: Family,
    max_order: usize,
    m_zero: f64,
}

pub const DEFAULT_MAX_ORDER: usize = 8;

impl MultiplierSymbol {
    pub fn new(spec: SymbolSpec) -> Result<MultiplierSymbol> {
        Self::with_max_order(spec, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(spec: SymbolSpec, max_order: usize) -> Result<MultiplierSymbol> {
        if max_order < 5 {
            return Err(Error::BadParameter(format!(
                "max_order must be >= 5, got {max_order}"
            )));
        }
        let check = |v: f64, lo: f64, hi: f64, name: &str| -> Result<()> {
            if !v.is_finite() || v <= lo || v >= hi {
                return Err(Error::BadParameter(format!(
                    "{name} = {v} outside ({lo}, {hi})"
                )));
            }
            Ok(())
        };
        let family = match &spec {
            SymbolSpec::Euler => Family::Euler,
            SymbolSpec::AlphaSqg { alpha } => {
                check(*alpha, 0.0, 2.0, "alpha")?;
                Family::AlphaSqg(*alpha)
            }
            SymbolSpec::LoglogEuler { beta } => {
                check(*beta, 0.0, f64::INFINITY, "beta")?;
                Family::LoglogEuler(*beta)
            }
            SymbolSpec::LogEuler { beta1 } => {
                check(*beta1, 0.0, f64::INFINITY, "beta1")?;
                Family::LogEuler(*beta1)
            }
            SymbolSpec::TripleLog => Family::TripleLog,
            SymbolSpec::QgShallowWater { lambda } => {
                check(*lambda, 0.0, f64::INFINITY, "lambda")?;
                Family::QgShallowWater(*lambda)
            }
            SymbolSpec::EulerLambda { lambda } => {
                check(*lambda, 0.0, f64::INFINITY, "lambda")?;
                Family::EulerLambda(*lambda)
            }
            SymbolSpec::Custom { expr } => Family::Custom(Expr::parse(expr)?),
        };
        let m_zero = match &family {
            Family::Euler | Family::EulerLambda(_) => 1.0,
            Family::AlphaSqg(_)
            | Family::LoglogEuler(_)
            | Family::LogEuler(_)
            | Family::TripleLog
            | Family::QgShallowWater(_) => 0.0,
            Family::Custom(e) => e.limit_at_zero()?,
        };
        let sym = MultiplierSymbol {
            spec,
            family,
            max_order,
            m_zero,
        };
        sym.validate_positivity()?;
        Ok(sym)
    }

    fn validate_positivity(&self) -> Result<()> {
        for i in 0..60 {
            let r = 10f64.powf(-6.0 + 14.0 * i as f64 / 59.0);
            let v = self.m(r);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::BadParameter(format!(
                    "m({r:.3e}) = {v} violates positivity"
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// m(0⁺)
    pub fn m_zero(&self) -> f64 {
        self.m_zero
    }

    /// The family is monotone increasing by construction. `EulerLambda` is
    /// the documented exemption; custom expressions are probed numerically.
    pub fn is_monotone(&self) -> bool {
        match &self.family {
            Family::EulerLambda(_) => false,
            Family::Custom(_) => {
                let mut prev = self.m(1e-6);
                for i in 1..200 {
                    let r = 10f64.powf(-6.0 + 16.0 * i as f64 / 199.0);
                    let v = self.m(r);
                    if v < prev * (1.0 - 1e-12) {
                        return false;
                    }
                    prev = v;
                }
                true
            }
            _ => true,
        }
    }

    /// True only for the constant Euler symbol (m' ≡ 0).
    pub fn is_constant(&self) -> bool {
        matches!(self.family, Family::Euler)
    }

    /// m^{(k)}(r). r = 0 is allowed only for k = 0 and returns m(0⁺).
    pub fn eval(&self, r: f64, k: usize) -> Result<f64> {
        if k > self.max_order {
            return Err(Error::OrderOutOfRange {
                order: k,
                max_order: self.max_order,
            });
        }
        if !r.is_finite() || r < 0.0 {
            return Err(Error::BadParameter(format!("r = {r}")));
        }
        if r == 0.0 {
            if k == 0 {
                return Ok(self.m_zero);
            }
            return Err(Error::Domain("derivatives require r > 0".into()));
        }
        Ok(self.derivs(r, k)[k])
    }

    /// m^{(0..=kmax)}(r) in one Taylor pass (r > 0).
    pub fn derivs(&self, r: f64, kmax: usize) -> Vec<f64> {
        match &self.family {
            Family::Euler => {
                let mut v = vec![0.0; kmax + 1];
                v[0] = 1.0;
                v
            }
            Family::AlphaSqg(a) => {
                let mut v = vec![0.0; kmax + 1];
                let mut coeff = 1.0;
                for (k, vk) in v.iter_mut().enumerate() {
                    *vk = coeff * r.powf(a - k as f64);
                    coeff *= a - k as f64;
                }
                v
            }
            _ => {
                let jet = self.jet(r, kmax);
                (0..=kmax).map(|k| jet.derivative(k)).collect()
            }
        }
    }

    fn jet(&self, r: f64, order: usize) -> Jet {
        let x = Jet::var(r, order);
        match &self.family {
            Family::Euler => Jet::constant(1.0, order),
            Family::AlphaSqg(a) => x.powf(*a),
            Family::LoglogEuler(b) => {
                let inner = x.mul(&x).add_scalar(1.0).ln().add_scalar(1.0).ln();
                if (*b - 1.0).abs() < 1e-15 {
                    inner
                } else {
                    inner.powf(*b)
                }
            }
            Family::LogEuler(b1) => {
                let inner = x.add_scalar(1.0).ln();
                if (*b1 - 1.0).abs() < 1e-15 {
                    inner
                } else {
                    inner.powf(*b1)
                }
            }
            Family::TripleLog => x
                .add_scalar(1.0)
                .ln()
                .add_scalar(1.0)
                .ln()
                .add_scalar(1.0)
                .ln(),
            Family::QgShallowWater(l) => {
                let r2 = x.mul(&x);
                r2.div(&r2.add_scalar(l * l))
            }
            Family::EulerLambda(l) => {
                let den = x.mul(&x).scale(l * l).add_scalar(1.0);
                Jet::constant(1.0, order).div(&den)
            }
            Family::Custom(e) => e.eval_jet(&x),
        }
    }

    /// m(r), r > 0.
    pub fn m(&self, r: f64) -> f64 {
        match &self.family {
            Family::Euler => 1.0,
            Family::AlphaSqg(a) => r.powf(*a),
            Family::LoglogEuler(b) => (1.0 + (r * r).ln_1p()).ln().powf(*b),
            Family::LogEuler(b1) => r.ln_1p().powf(*b1),
            Family::TripleLog => (1.0 + (1.0 + r.ln_1p()).ln()).ln(),
            Family::QgShallowWater(l) => r * r / (r * r + l * l),
            Family::EulerLambda(l) => 1.0 / (1.0 + l * l * r * r),
            Family::Custom(e) => e.eval_jet(&Jet::var(r, 0)).c[0],
        }
    }

    /// m'(r), r > 0.
    pub fn m1(&self, r: f64) -> f64 {
        match &self.family {
            Family::Euler => 0.0,
            Family::AlphaSqg(a) => a * r.powf(a - 1.0),
            Family::LoglogEuler(b) => {
                let u = 1.0 + (r * r).ln_1p();
                let lu = u.ln();
                b * lu.powf(b - 1.0) * (2.0 * r / (1.0 + r * r)) / u
            }
            Family::LogEuler(b1) => {
                let l = r.ln_1p();
                b1 * l.powf(b1 - 1.0) / (1.0 + r)
            }
            Family::TripleLog => {
                let u1 = 1.0 + r;
                let u2 = 1.0 + r.ln_1p();
                let u3 = 1.0 + u2.ln();
                1.0 / (u1 * u2 * u3)
            }
            Family::QgShallowWater(l) => {
                let d = r * r + l * l;
                2.0 * l * l * r / (d * d)
            }
            Family::EulerLambda(l) => {
                let d = 1.0 + l * l * r * r;
                -2.0 * l * l * r / (d * d)
            }
            Family::Custom(e) => e.eval_jet(&Jet::var(r, 1)).derivative(1),
        }
    }

    /// m̃(s) = m(eˢ), evaluated without forming eˢ when that would overflow.
    pub fn m_tilde(&self, s: f64) -> f64 {
        match &self.family {
            Family::Euler => 1.0,
            Family::AlphaSqg(a) => (a * s).exp(),
            Family::LoglogEuler(b) => {
                // log(1 + e^{2s}) = 2s + log1p(e^{-2s}) for s > 0
                let inner = if s > 0.0 {
                    2.0 * s + (-2.0 * s).exp().ln_1p()
                } else {
                    (2.0 * s).exp().ln_1p()
                };
                (1.0 + inner).ln().powf(*b)
            }
            Family::LogEuler(b1) => {
                let inner = if s > 0.0 {
                    s + (-s).exp().ln_1p()
                } else {
                    s.exp().ln_1p()
                };
                inner.powf(*b1)
            }
            Family::TripleLog => {
                let l1 = if s > 0.0 {
                    s + (-s).exp().ln_1p()
                } else {
                    s.exp().ln_1p()
                };
                (1.0 + (1.0 + l1).ln()).ln()
            }
            Family::QgShallowWater(l) => 1.0 / (1.0 + l * l * (-2.0 * s).exp()),
            Family::EulerLambda(l) => {
                let e2s = (2.0 * s).exp();
                if e2s.is_infinite() {
                    0.0
                } else {
                    1.0 / (1.0 + l * l * e2s)
                }
            }
            Family::Custom(_) => {
                let es = s.exp();
                if es.is_finite() {
                    self.m(es)
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum H2Class {
    H2a,
    H2b,
    H2c,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Osgood {
    Holds,
    Fails,
    Undetermined,
}

/// An estimated limit; `None` when not applicable, infinite when the
/// sequence diverges.
pub type LimitEstimate = Option<f64>;

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub h1_positive: bool,
    pub h1_monotone: bool,
    /// Per-order Mikhlin suprema sup_r r^k |d^k m'/dr^k| / m'(r), orders 1..
    pub h1_mikhlin_sup: Vec<f64>,
    pub h2_class: H2Class,
    #[serde(serialize_with = "ser_limit")]
    pub beta_hat: LimitEstimate,
    #[serde(serialize_with = "ser_limit")]
    pub beta1_hat: LimitEstimate,
    #[serde(serialize_with = "ser_limit")]
    pub beta2_hat: LimitEstimate,
    #[serde(serialize_with = "ser_limit")]
    pub alpha_hat: LimitEstimate,
    pub osgood: Osgood,
}

fn ser_limit<S: serde::Serializer>(v: &LimitEstimate, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_infinite() => s.serialize_str(if *x > 0.0 { "+inf" } else { "-inf" }),
        Some(x) => s.serialize_f64(*x),
    }
}

/// Geometric probe grid for the limit estimates.
#[derive(Debug, Clone)]
pub struct ProbeGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid {
            r_min: 1e4,
            r_max: 1e12,
            points: 25,
        }
    }
}

impl ProbeGrid {
    pub fn validate(&self) -> Result<()> {
        if self.r_min > 1e4 || self.r_max < 1e12 || self.points < 20 {
            return Err(Error::BadParameter(
                "probe grid must span at least [1e4, 1e12] with >= 20 points".into(),
            ));
        }
        Ok(())
    }

    fn values(&self) -> Vec<f64> {
        let n = self.points;
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Tolerance band around the critical value β = 1.
pub const OSGOOD_BAND: f64 = 0.05;

/// Classify the symbol against the growth hypotheses and decide the Osgood
/// condition.
pub fn classify(sym: &MultiplierSymbol, probe: &ProbeGrid) -> Result<HypothesisReport> {
    probe.validate()?;
    let rs = probe.values();
    let n = rs.len();

    let mut m_vals = Vec::with_capacity(n);
    let mut alpha_seq = Vec::with_capacity(n);
    let mut beta1_seq = Vec::with_capacity(n);
    let mut beta_seq = Vec::with_capacity(n);
    let mut beta2_seq = Vec::with_capacity(n);
    let mut h1_positive = true;
    let mut h1_monotone = true;
    let mut prev_m = f64::NEG_INFINITY;
    for &r in &rs {
        let d = sym.derivs(r, 2);
        let (m, m1, m2) = (d[0], d[1], d[2]);
        if !(m > 0.0) {
            h1_positive = false;
        }
        if m < prev_m * (1.0 - 1e-12) {
            h1_monotone = false;
        }
        prev_m = m;
        m_vals.push(m);
        let lr = r.ln();
        alpha_seq.push(r * m1 / m);
        beta1_seq.push(r * lr * m1 / m);
        beta_seq.push(r * lr * lr.ln() * m1 / m);
        if m1.abs() > 1e-300 {
            beta2_seq.push(lr * (r * m2 + m1) / m1);
        }
    }
    // positivity over a wider grid, including small r
    for i in 0..40 {
        let r = 10f64.powf(-6.0 + 10.0 * i as f64 / 39.0);
        if !(sym.m(r) > 0.0) {
            h1_positive = false;
        }
    }
    if !sym.is_monotone() {
        h1_monotone = false;
    }

    let mikhlin = check_mikhlin(sym, 3, &MikhlinGrid::default());
    let h1_mikhlin_sup = mikhlin
        .map(|rep| rep.per_order.iter().map(|o| o.sup).collect())
        .unwrap_or_default();

    let finish = |h2_class, beta_hat, beta1_hat, beta2_hat, alpha_hat, osgood| {
        Ok(HypothesisReport {
            h1_positive,
            h1_monotone,
            h1_mikhlin_sup,
            h2_class,
            beta_hat,
            beta1_hat,
            beta2_hat,
            alpha_hat,
            osgood,
        })
    };

    // (H2c): m stabilizes at a finite limit over the upper decades.
    let m_last = m_vals[n - 1];
    let m_mid = m_vals[n / 2];
    if (m_last - m_mid).abs() <= 1e-4 * (1.0 + m_last.abs()) {
        return finish(H2Class::H2c, None, None, None, None, Osgood::Holds);
    }

    // oscillatory limit sequences cannot be extrapolated
    if oscillatory(&alpha_seq) || oscillatory(&beta_seq) {
        return finish(H2Class::Unclassified, None, None, None, None, Osgood::Undetermined);
    }

    let (alpha_hat, alpha_res) = aitken(&alpha_seq, 3);
    let decaying_alpha = alpha_seq[n - 1] < 0.8 * alpha_seq[0];

    // (H2b): r m'/m converges to a genuinely positive constant.
    if !decaying_alpha && alpha_hat.is_finite() && alpha_hat >= 0.02 {
        let stable = alpha_res <= 0.05 * alpha_hat.max(0.1);
        if stable && alpha_hat < 2.1 {
            return finish(H2Class::H2b, None, None, None, Some(alpha_hat), Osgood::Fails);
        }
        if stable {
            // grows at least like a power but outside (0, 2): not covered by
            // the hypotheses, though the Osgood integral clearly converges
            return finish(
                H2Class::Unclassified,
                None,
                None,
                None,
                Some(alpha_hat),
                Osgood::Fails,
            );
        }
        return finish(H2Class::Unclassified, None, None, None, None, Osgood::Undetermined);
    }

    // (H2a): unbounded m with r m'/m -> 0.
    let (beta1_hat, _) = aitken(&beta1_seq, 3);
    let (beta2_hat, beta2_res) = if beta2_seq.len() >= 5 {
        aitken(&beta2_seq, 3)
    } else {
        (f64::NAN, f64::INFINITY)
    };
    let beta2 = if beta2_hat.is_finite() && beta2_res <= 0.3 * (1.0 + beta2_hat.abs()) {
        Some(beta2_hat)
    } else {
        None
    };

    // β is finite only when β₁ = 0; a non-vanishing increasing β₁ sequence
    // means β = +inf and the Osgood condition fails.
    let beta1_nondecreasing = beta1_seq[n - 1] >= beta1_seq[0] - 0.02;
    if beta1_nondecreasing && beta1_hat >= OSGOOD_BAND {
        return finish(
            H2Class::H2a,
            Some(f64::INFINITY),
            Some(beta1_hat),
            beta2,
            None,
            Osgood::Fails,
        );
    }

    let (beta_hat, beta_res) = aitken(&beta_seq, 3);
    let beta_increasing = beta_seq[n - 1] > beta_seq[0];
    if beta_seq[n - 1] > 1e3 && beta_increasing {
        return finish(
            H2Class::H2a,
            Some(f64::INFINITY),
            Some(beta1_hat),
            beta2,
            None,
            Osgood::Fails,
        );
    }
    if !beta_hat.is_finite() || beta_res > 0.25 * (1.0 + beta_hat.abs()) {
        return finish(H2Class::Unclassified, None, None, None, None, Osgood::Undetermined);
    }
    let osgood = if beta_hat <= 1.0 - OSGOOD_BAND {
        Osgood::Holds
    } else if beta_hat >= 1.0 + OSGOOD_BAND {
        Osgood::Fails
    } else {
        Osgood::Undetermined
    };
    finish(
        H2Class::H2a,
        Some(beta_hat),
        Some(beta1_hat),
        beta2,
        None,
        osgood,
    )
}

/// A sequence whose tail keeps reversing direction with non-vanishing
/// amplitude has no numerical limit.
fn oscillatory(seq: &[f64]) -> bool {
    let tail = &seq[seq.len() / 3..];
    let scale: f64 = 1.0 + tail.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut changes = 0;
    let mut prev_sign = 0i8;
    for w in tail.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= 1e-9 * scale {
            continue;
        }
        let s = if d > 0.0 { 1i8 } else { -1i8 };
        if prev_sign != 0 && s != prev_sign {
            changes += 1;
        }
        prev_sign = s;
    }
    let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    changes >= 3 && spread > 0.05 * scale
}

#[derive(Debug, Clone)]
pub struct MikhlinGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for MikhlinGrid {
    fn default() -> Self {
        MikhlinGrid {
            r_min: 1e-4,
            r_max: 1e8,
            points: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MikhlinOrder {
    pub order: usize,
    /// sup over the grid of r^k |d^k m'/dr^k| / m'(r)
    pub sup: f64,
    /// same supremum on a grid with doubled density and a 100x larger range
    pub refined_sup: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MikhlinReport {
    pub monotone: bool,
    /// true when the check was skipped (non-monotone family)
    pub skipped: bool,
    /// true when m' vanishes identically on the grid
    pub vacuous: bool,
    pub per_order: Vec<MikhlinOrder>,
    pub pass: bool,
}

/// Probe the Mikhlin-type bounds |d^k m'(r)/dr^k| ≤ C r^{-k} m'(r).
pub fn check_mikhlin(
    sym: &MultiplierSymbol,
    max_k: usize,
    grid: &MikhlinGrid,
) -> Result<MikhlinReport> {
    if max_k + 1 > sym.max_order() {
        return Err(Error::OrderOutOfRange {
            order: max_k + 1,
            max_order: sym.max_order(),
        });
    }
    let monotone = sym.is_monotone();
    if !monotone {
        return Ok(MikhlinReport {
            monotone,
            skipped: true,
            vacuous: false,
            per_order: Vec::new(),
            pass: false,
        });
    }
    let sup_on = |r_min: f64, r_max: f64, points: usize| -> Vec<f64> {
        let mut sups = vec![0.0f64; max_k];
        let (a, b) = (r_min.ln(), r_max.ln());
        let mut any_nonzero = false;
        for i in 0..points {
            let r = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            let d = sym.derivs(r, max_k + 1);
            let m1 = d[1];
            if m1.abs() <= 1e-300 {
                continue;
            }
            any_nonzero = true;
            for k in 1..=max_k {
                let ratio = r.powi(k as i32) * d[k + 1].abs() / m1;
                if ratio > sups[k - 1] {
                    sups[k - 1] = ratio;
                }
            }
        }
        if !any_nonzero {
            vec![f64::NAN; max_k]
        } else {
            sups
        }
    };
    let coarse = sup_on(grid.r_min, grid.r_max, grid.points);
    if coarse.iter().all(|v| v.is_nan()) {
        return Ok(MikhlinReport {
            monotone,
            skipped: false,
            vacuous: true,
            per_order: Vec::new(),
            pass: true,
        });
    }
    let refined = sup_on(grid.r_min / 10.0, (grid.r_max * 100.0).min(1e12), grid.points * 2);
    let per_order: Vec<MikhlinOrder> = (1..=max_k)
        .map(|k| {
            let sup = coarse[k - 1];
            let refined_sup = refined[k - 1];
            let stable = sup.is_finite()
                && refined_sup.is_finite()
                && refined_sup <= sup * 1.25 + 0.1;
            MikhlinOrder {
                order: k,
                sup,
                refined_sup,
                stable,
            }
        })
        .collect();
    let pass = per_order.iter().all(|o| o.stable);
    Ok(MikhlinReport {
        monotone,
        skipped: false,
        vacuous: false,
        per_order,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym(spec: SymbolSpec) -> MultiplierSymbol {
        MultiplierSymbol::new(spec).unwrap()
    }

    #[test]
    fn eval_examples() {
        let euler = sym(SymbolSpec::Euler);
        assert_eq!(euler.eval(2.0, 0).unwrap(), 1.0);
        let ll = sym(SymbolSpec::LoglogEuler { beta: 1.0 });
        assert_eq!(ll.eval(0.0, 0).unwrap(), 0.0);
        let sqg = sym(SymbolSpec::AlphaSqg { alpha: 0.5 });
        assert_relative_eq!(sqg.eval(4.0, 1).unwrap(), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn eval_errors() {
        let ll = sym(SymbolSpec::LoglogEuler { beta: 1.0 });
        assert!(ll.eval(1.0, 99).is_err());
        assert!(ll.eval(f64::NAN, 0).is_err());
        assert!(ll.eval(0.0, 1).is_err());
        assert!(MultiplierSymbol::new(SymbolSpec::AlphaSqg { alpha: 2.5 }).is_err());
        assert!(MultiplierSymbol::with_max_order(SymbolSpec::Euler, 3).is_err());
    }

    #[test]
    fn jet_derivatives_match_fd() {
        for spec in [
            SymbolSpec::LoglogEuler { beta: 0.7 },
            SymbolSpec::LogEuler { beta1: 1.3 },
            SymbolSpec::TripleLog,
            SymbolSpec::QgShallowWater { lambda: 2.0 },
            SymbolSpec::EulerLambda { lambda: 1.0 },
        ] {
            let s = sym(spec.clone());
            for &r in &[0.3, 2.0, 50.0] {
                let h = 1e-5 * r;
                let fd = (s.m(r + h) - s.m(r - h)) / (2.0 * h);
                let d1 = s.eval(r, 1).unwrap();
                assert_relative_eq!(d1, fd, max_relative = 1e-8);
                let fd2 = (s.m1(r + h) - s.m1(r - h)) / (2.0 * h);
                assert_relative_eq!(s.eval(r, 2).unwrap(), fd2, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn m_tilde_is_stable_for_huge_arguments() {
        let ll = sym(SymbolSpec::LoglogEuler { beta: 1.0 });
        let v = ll.m_tilde(1e6);
        // m(e^s) ~ log(1+2s) for large s
        assert_relative_eq!(v, (1.0 + 2e6f64).ln(), max_relative = 1e-6);
        let le = sym(SymbolSpec::LogEuler { beta1: 1.0 });
        assert_relative_eq!(le.m_tilde(1e9), 1e9, max_relative = 1e-9);
        // small s agrees with the direct form
        assert_relative_eq!(ll.m_tilde(2.0), ll.m((2.0f64).exp()), max_relative = 1e-12);
    }

    #[test]
    fn classification_table() {
        let grid = ProbeGrid::default();
        let rep = classify(&sym(SymbolSpec::Euler), &grid).unwrap();
        assert_eq!(rep.h2_class, H2Class::H2c);
        assert_eq!(rep.osgood, Osgood::Holds);

        for alpha in [0.3, 0.5, 1.0, 1.5] {
            let rep = classify(&sym(SymbolSpec::AlphaSqg { alpha }), &grid).unwrap();
            assert_eq!(rep.h2_class, H2Class::H2b, "alpha = {alpha}");
            assert_eq!(rep.osgood, Osgood::Fails);
            assert_relative_eq!(rep.alpha_hat.unwrap(), alpha, max_relative = 1e-6);
        }

        let rep = classify(&sym(SymbolSpec::LoglogEuler { beta: 0.5 }), &grid).unwrap();
        assert_eq!(rep.h2_class, H2Class::H2a);
        assert_eq!(rep.osgood, Osgood::Holds);

        let rep = classify(&sym(SymbolSpec::LoglogEuler { beta: 1.5 }), &grid).unwrap();
        assert_eq!(rep.osgood, Osgood::Fails);

        let rep = classify(&sym(SymbolSpec::LogEuler { beta1: 1.0 }), &grid).unwrap();
        assert_eq!(rep.h2_class, H2Class::H2a);
        assert_eq!(rep.beta_hat, Some(f64::INFINITY));
        assert_eq!(rep.osgood, Osgood::Fails);

        let rep = classify(&sym(SymbolSpec::TripleLog), &grid).unwrap();
        assert_eq!(rep.osgood, Osgood::Holds);

        let rep = classify(&sym(SymbolSpec::QgShallowWater { lambda: 1.0 }), &grid).unwrap();
        assert_eq!(rep.h2_class, H2Class::H2c);
        assert_eq!(rep.osgood, Osgood::Holds);

        // beta = 1.0 sits at the critical value: Holds or Undetermined
        let rep = classify(&sym(SymbolSpec::LoglogEuler { beta: 1.0 }), &grid).unwrap();
        assert_ne!(rep.osgood, Osgood::Fails);
    }

    #[test]
    fn classify_flags_nonmonotone() {
        let rep = classify(&sym(SymbolSpec::EulerLambda { lambda: 1.0 }), &ProbeGrid::default())
            .unwrap();
        assert!(!rep.h1_monotone);
        assert!(rep.h1_positive);
        assert_eq!(rep.osgood, Osgood::Holds); // bounded symbol
    }

    #[test]
    fn mikhlin_vacuous_for_euler() {
        let rep = check_mikhlin(&sym(SymbolSpec::Euler), 3, &MikhlinGrid::default()).unwrap();
        assert!(rep.vacuous);
        assert!(rep.pass);
    }

    #[test]
    fn mikhlin_finite_for_loglog() {
        let rep = check_mikhlin(
            &sym(SymbolSpec::LoglogEuler { beta: 1.0 }),
            3,
            &MikhlinGrid::default(),
        )
        .unwrap();
        assert!(rep.pass, "{:?}", rep.per_order);
        for o in &rep.per_order {
            assert!(o.sup.is_finite() && o.sup < 1e3);
        }
    }

    #[test]
    fn mikhlin_rejects_oscillatory_custom() {
        let s = sym(SymbolSpec::Custom {
            expr: "log(log(e^2 + 2*r + sin(r)))".into(),
        });
        let rep = check_mikhlin(&s, 2, &MikhlinGrid::default()).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn oscillatory_custom_is_unclassified() {
        let s = sym(SymbolSpec::Custom {
            expr: "log(log(e^2 + 2*r + sin(r)))".into(),
        });
        let rep = classify(&s, &ProbeGrid::default()).unwrap();
        assert_eq!(rep.h2_class, H2Class::Unclassified);
        assert_eq!(rep.osgood, Osgood::Undetermined);
    }

    #[test]
    fn report_serializes_infinities() {
        let rep = classify(
            &sym(SymbolSpec::LogEuler { beta1: 1.0 }),
            &ProbeGrid::default(),
        )
        .unwrap();
        let js = serde_json::to_string(&rep).unwrap();
        assert!(js.contains("\"beta_hat\":\"+inf\""), "{js}");
        assert!(js.contains("\"osgood\":\"Fails\""), "{js}");
    }

    #[test]
    fn symbol_spec_roundtrip() {
        let spec: SymbolSpec =
            serde_json::from_str(r#"{ "family": "loglog_euler", "beta": 1.0 }"#).unwrap();
        assert_eq!(spec, SymbolSpec::LoglogEuler { beta: 1.0 });
    }
}
