//! Osgood profile functions and envelope bounds.
//!
//! The flow-map machinery rests on the strictly increasing maps
//!
//!   H(r)  = ∫_2^r dr̃/(r̃ log r̃ · m(r̃))       (log-linear below r = 2),
//!   H̃(r)  = ∫_1^r dr̃/(r̃ (m(r̃)+1)),
//!   𝓗(r)  = ∫_{r₀}^r dr̃/𝓜(r̃),  𝓜(r) = r(m(eʳ)+1) for r ≥ r₀ and linear
//!           below,
//!
//! together with the moduli of continuity ν(ρ) = ρ log(ρ⁻¹) m(ρ⁻¹) (spliced
//! linearly above ρ = 1/2) and ν̃(ρ) = ρ(m(ρ⁻¹)+1). The Osgood condition is
//! exactly the statement that H (equivalently H̃, 𝓗) is unbounded, which
//! makes the inverses total; when it fails the inverses saturate at a
//! finite image and the envelope bounds carry a blow-up horizon instead.
//!
//! Two-sided particle-pair envelope: 1/H⁻¹(H(1/d₀) ± Ct); patch-separation
//! lower bound: 1/H⁻¹(H(2/d₀) + Ct).

use crate::multiplier::MultiplierSymbol;
use crate::quad::adaptive_quad;
use crate::{Error, Result};
use std::sync::RwLock;

/// ν(ρ): the modulus of continuity of velocities induced by bounded
/// integrable data.
pub fn nu_eval(sym: &MultiplierSymbol, rho: f64) -> f64 {
    if rho <= 0.5 {
        rho * (1.0 / rho).ln() * sym.m(1.0 / rho)
    } else {
        rho * (2.0f64).ln() * sym.m(2.0)
    }
}

/// ν̃(ρ) = ρ (m(ρ⁻¹) + 1): the sharper patch modulus.
pub fn nu_tilde_eval(sym: &MultiplierSymbol, rho: f64) -> f64 {
    rho * (sym.m(1.0 / rho) + 1.0)
}

/// A strictly increasing cumulative integral F(t) = ∫_{t0}^t f with
/// lazily extended anchor points (range doubles on demand, both ways).
struct CumulativeIntegral<F: Fn(f64) -> f64 + Send + Sync> {
    t0: f64,
    integrand: F,
    tol: f64,
    /// sorted (t, F(t)); always contains (t0, 0)
    anchors: RwLock<Vec<(f64, f64)>>,
}

const T_CAP: f64 = 1e290;

impl<F: Fn(f64) -> f64 + Send + Sync> CumulativeIntegral<F> {
    fn new(t0: f64, integrand: F, tol: f64) -> Self {
        CumulativeIntegral {
            t0,
            integrand,
            tol,
            anchors: RwLock::new(vec![(t0, 0.0)]),
        }
    }

    fn next_up(&self, t: f64) -> f64 {
        if t - self.t0 < 1.0 {
            self.t0 + 1.0
        } else {
            (self.t0 + 2.0 * (t - self.t0)).min(T_CAP)
        }
    }

    fn next_down(&self, t: f64) -> f64 {
        if self.t0 - t < 1.0 {
            self.t0 - 1.0
        } else {
            self.t0 - 2.0 * (self.t0 - t)
        }
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        adaptive_quad(&mut |t| (self.integrand)(t), a, b, self.tol * 1e-3, self.tol)
    }

    fn cover(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite map argument {t}")));
        }
        loop {
            {
                let a = self.anchors.read().unwrap();
                if t >= a.first().unwrap().0 && t <= a.last().unwrap().0 {
                    return Ok(());
                }
            }
            let mut a = self.anchors.write().unwrap();
            if t > a.last().unwrap().0 {
                let (tl, fl) = *a.last().unwrap();
                if tl >= T_CAP {
                    return Err(Error::Domain("argument beyond representable range".into()));
                }
                let tn = self.next_up(tl).max(t.min(T_CAP));
                let seg = self.segment(tl, tn)?;
                a.push((tn, fl + seg));
            } else if t < a.first().unwrap().0 {
                let (tf, ff) = *a.first().unwrap();
                let tn = self.next_down(tf).min(t);
                let seg = self.segment(tn, tf)?;
                a.insert(0, (tn, ff - seg));
            }
        }
    }

    fn eval(&self, t: f64) -> Result<f64> {
        self.cover(t)?;
        let a = self.anchors.read().unwrap();
        let idx = match a.binary_search_by(|p| p.0.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(a[i].1),
            Err(i) => i.saturating_sub(1).min(a.len() - 2),
        };
        let (ta, fa) = a[idx];
        let (tb, fb) = a[idx + 1];
        // integrate from the nearer anchor
        if t - ta <= tb - t {
            Ok(fa + self.segment(ta, t)?)
        } else {
            Ok(fb - self.segment(t, tb)?)
        }
    }

    /// Solve F(t) = y. `Ok(+inf)` when y is beyond every representable t on
    /// a diverging map; `Err(InverseOutOfRange)` when the map saturates at a
    /// finite image below y.
    fn inverse(&self, y: f64) -> Result<f64> {
        // extend until bracketed (or hopeless)
        let mut stagnant = 0;
        loop {
            let (t_last, f_last, t_first, f_first) = {
                let a = self.anchors.read().unwrap();
                let l = *a.last().unwrap();
                let f = *a.first().unwrap();
                (l.0, l.1, f.0, f.1)
            };
            if y > f_last {
                if t_last >= T_CAP {
                    return Ok(f64::INFINITY);
                }
                let mut a = self.anchors.write().unwrap();
                if a.last().unwrap().0 > t_last {
                    continue; // another writer extended meanwhile
                }
                let tn = self.next_up(t_last);
                let seg = self.segment(t_last, tn)?;
                if seg <= 1e-14 * (1.0 + f_last.abs()) {
                    stagnant += 1;
                    if stagnant >= 4 {
                        return Err(Error::InverseOutOfRange {
                            requested: y,
                            limit: f_last + seg,
                        });
                    }
                } else {
                    stagnant = 0;
                }
                a.push((tn, f_last + seg));
            } else if y < f_first {
                let mut a = self.anchors.write().unwrap();
                if a.first().unwrap().0 < t_first {
                    continue;
                }
                let tn = self.next_down(t_first);
                let seg = self.segment(tn, t_first)?;
                if seg <= 0.0 {
                    return Err(Error::InverseOutOfRange {
                        requested: y,
                        limit: f_first,
                    });
                }
                a.insert(0, (tn, f_first - seg));
            } else {
                break;
            }
        }
        // bracket among anchors
        let (mut lo, mut hi, mut flo, mut fhi) = {
            let a = self.anchors.read().unwrap();
            if a.len() == 1 {
                return Ok(a[0].0); // y is exactly the seed value 0
            }
            let i = a.partition_point(|p| p.1 < y).clamp(1, a.len() - 1);
            (a[i - 1].0, a[i].0, a[i - 1].1, a[i].1)
        };
        // Newton from the secant guess, bisection fallback
        let frac = if fhi > flo {
            ((y - flo) / (fhi - flo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let mut t = lo + (hi - lo) * frac;
        for _ in 0..80 {
            let ft = self.eval(t)?;
            if (ft - y).abs() <= 1e-14 * (1.0 + y.abs()) {
                return Ok(t);
            }
            if ft > y {
                hi = t;
                fhi = ft;
            } else {
                lo = t;
                flo = ft;
            }
            let _ = (flo, fhi);
            if (hi - lo).abs() <= 1e-14 * (1.0 + hi.abs()) {
                return Ok(0.5 * (lo + hi));
            }
            let deriv = (self.integrand)(t);
            let mut tn = if deriv > 0.0 { t - (ft - y) / deriv } else { t };
            if !(tn > lo && tn < hi) {
                tn = 0.5 * (lo + hi);
            }
            if (tn - t).abs() <= 1e-13 * (1.0 + t.abs()) {
                return Ok(tn);
            }
            t = tn;
        }
        Ok(t)
    }
}

type DynIntegrand = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tabulated H, H̃, 𝓗, 𝓜 with inverse evaluators.
pub struct OsgoodProfile {
    sym: MultiplierSymbol,
    r0: f64,
    /// H in the variable s = log r, anchored at s = log 2
    map_h: CumulativeIntegral<DynIntegrand>,
    /// H̃ in the variable s = log r, anchored at s = 0
    map_ht: CumulativeIntegral<DynIntegrand>,
    /// 𝓗 in the variable r (already log scaled), anchored at r₀
    map_sh: CumulativeIntegral<DynIntegrand>,
}

impl std::fmt::Debug for OsgoodProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OsgoodProfile")
            .field("sym", self.sym.spec())
            .field("r0", &self.r0)
            .finish()
    }
}

/// Smallest threshold at which r·m̃(r) passes a discrete convexity scan on
/// [r, 10r] (the profile's default r₀; always at least 2).
pub fn default_r0(sym: &MultiplierSymbol) -> f64 {
    'cand: for k in 0..40 {
        let r0 = 2.0 * 1.2f64.powi(k);
        let n = 101;
        let h = 9.0 * r0 / (n - 1) as f64;
        let phi = |r: f64| r * (sym.m_tilde(r) + 1.0);
        let mut prev = phi(r0);
        let mut cur = phi(r0 + h);
        let scale = cur.abs().max(1.0);
        for i in 2..n {
            let next = phi(r0 + i as f64 * h);
            if next - 2.0 * cur + prev < -1e-9 * scale {
                continue 'cand;
            }
            prev = cur;
            cur = next;
        }
        return r0;
    }
    2.0 * 1.2f64.powi(39)
}

impl OsgoodProfile {
    pub fn new(sym: &MultiplierSymbol) -> Result<OsgoodProfile> {
        Self::with_r0(sym, default_r0(sym))
    }

    pub fn with_r0(sym: &MultiplierSymbol, r0: f64) -> Result<OsgoodProfile> {
        if !(r0 >= 2.0) || !r0.is_finite() {
            return Err(Error::BadParameter(format!("r0 must be >= 2, got {r0}")));
        }
        let tol = 1e-11;
        let s_h = sym.clone();
        let map_h = CumulativeIntegral::new(
            (2.0f64).ln(),
            Box::new(move |s: f64| 1.0 / (s * s_h.m_tilde(s))) as DynIntegrand,
            tol,
        );
        let s_ht = sym.clone();
        let map_ht = CumulativeIntegral::new(
            0.0,
            Box::new(move |s: f64| 1.0 / (s_ht.m_tilde(s) + 1.0)) as DynIntegrand,
            tol,
        );
        let s_sh = sym.clone();
        let map_sh = CumulativeIntegral::new(
            r0,
            Box::new(move |r: f64| 1.0 / (r * (s_sh.m_tilde(r) + 1.0))) as DynIntegrand,
            tol,
        );
        Ok(OsgoodProfile {
            sym: sym.clone(),
            r0,
            map_h,
            map_ht,
            map_sh,
        })
    }

    pub fn symbol(&self) -> &MultiplierSymbol {
        &self.sym
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// H(r); log-linear branch 1/((log 2) m(2)) · log(r/2) below r = 2.
    pub fn h_eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("H requires r > 0, got {r}")));
        }
        if r < 2.0 {
            return Ok((r / 2.0).ln() / ((2.0f64).ln() * self.sym.m(2.0)));
        }
        self.map_h.eval(r.ln())
    }

    pub fn h_inv(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Ok(2.0 * (y * (2.0f64).ln() * self.sym.m(2.0)).exp());
        }
        let s = self.map_h.inverse(y)?;
        Ok(s.exp())
    }

    /// H̃(r) = ∫_1^r dr̃/(r̃(m(r̃)+1)); negative below r = 1.
    pub fn h_tilde_eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("H~ requires r > 0, got {r}")));
        }
        self.map_ht.eval(r.ln())
    }

    pub fn h_tilde_inv(&self, y: f64) -> Result<f64> {
        let s = self.map_ht.inverse(y)?;
        Ok(s.exp())
    }

    /// 𝓜(r) = r (m(eʳ) + 1) above r₀, linear with slope m(e^{r₀}) + 1 below.
    pub fn script_m(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("M requires r > 0, got {r}")));
        }
        if r <= self.r0 {
            Ok(r * (self.sym.m_tilde(self.r0) + 1.0))
        } else {
            Ok(r * (self.sym.m_tilde(r) + 1.0))
        }
    }

    /// 𝓗(r) = ∫_{r₀}^r dr̃/𝓜(r̃); 𝓗(r₀) = 0.
    pub fn script_h(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("script H requires r > 0, got {r}")));
        }
        if r < self.r0 {
            return Ok((r / self.r0).ln() / (self.sym.m_tilde(self.r0) + 1.0));
        }
        self.map_sh.eval(r)
    }

    pub fn script_h_inv(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Ok(self.r0 * (y * (self.sym.m_tilde(self.r0) + 1.0)).exp());
        }
        self.map_sh.inverse(y)
    }
}

/// Envelope evaluation outcome. On a symbol violating the Osgood condition
/// the profile image is finite and bounds are only meaningful up to the
/// blow-up horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeBound {
    Value(f64),
    /// The bound left its validity window at this time.
    BeyondHorizon { horizon: f64 },
}

impl EnvelopeBound {
    pub fn value(self) -> Option<f64> {
        match self {
            EnvelopeBound::Value(v) => Some(v),
            EnvelopeBound::BeyondHorizon { .. } => None,
        }
    }
}

/// Two-sided particle-pair separation envelope
/// (1/H⁻¹(H(1/sep₀)+Ct), 1/H⁻¹(H(1/sep₀)-Ct)).
pub fn envelope_flow_bound(
    profile: &OsgoodProfile,
    sep0: f64,
    t: f64,
    c: f64,
) -> Result<(EnvelopeBound, EnvelopeBound)> {
    if !(sep0 > 0.0 && t >= 0.0 && c > 0.0) {
        return Err(Error::BadParameter("need sep0 > 0, t >= 0, C > 0".into()));
    }
    let base = profile.h_eval(1.0 / sep0)?;
    let lower = match profile.h_inv(base + c * t) {
        Ok(r) => EnvelopeBound::Value(1.0 / r),
        Err(Error::InverseOutOfRange { limit, .. }) => EnvelopeBound::BeyondHorizon {
            horizon: (limit - base) / c,
        },
        Err(e) => return Err(e),
    };
    let upper = match profile.h_inv(base - c * t) {
        Ok(r) => EnvelopeBound::Value(1.0 / r),
        Err(Error::InverseOutOfRange { limit, .. }) => EnvelopeBound::BeyondHorizon {
            horizon: (limit - base) / c,
        },
        Err(e) => return Err(e),
    };
    Ok((lower, upper))
}

/// Patch-separation lower bound 1/H⁻¹(H(2/d₀)+Ct).
pub fn envelope_separation(
    profile: &OsgoodProfile,
    d0: f64,
    t: f64,
    c: f64,
) -> Result<EnvelopeBound> {
    if !(d0 > 0.0 && t >= 0.0 && c > 0.0) {
        return Err(Error::BadParameter("need d0 > 0, t >= 0, C > 0".into()));
    }
    let base = profile.h_eval(2.0 / d0)?;
    match profile.h_inv(base + c * t) {
        Ok(r) => Ok(EnvelopeBound::Value(1.0 / r)),
        Err(Error::InverseOutOfRange { limit, .. }) => Ok(EnvelopeBound::BeyondHorizon {
            horizon: (limit - base) / c,
        }),
        Err(e) => Err(e),
    }
}
