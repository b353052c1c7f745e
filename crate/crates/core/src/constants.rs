//! Closed-form constants of the Hardy-type inequalities, with their
//! admissible parameter domains.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::norms::Exponent;

/// Bound on `∫|Ha|` for `(1,∞,0)`-atoms.
pub const LOG2_BOUND: f64 = LN_2;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("p = {p} outside (0, 1]")))
    }
}

fn check_p_below_q(p: f64, q: Exponent) -> Result<()> {
    check_p(p)?;
    match q {
        Exponent::Finite(qv) if !(qv >= 1.0) => Err(Error::ParameterDomain(format!("q = {qv} below 1"))),
        Exponent::Finite(qv) if !(p < qv) => {
            Err(Error::ParameterDomain(format!("requires p < q, got p = {p}, q = {qv}")))
        }
        _ => Ok(()),
    }
}

/// Domain shared by the dual-operator atom bound and its sum version:
/// `q = ∞`; or `q = 1, p < 1`; or `1 < q < ∞, p < q − 1`.
pub fn check_dual_domain(p: f64, q: Exponent) -> Result<()> {
    check_p(p)?;
    match q {
        Exponent::Infinite => Ok(()),
        Exponent::Finite(qv) if qv == 1.0 => {
            if p < 1.0 {
                Ok(())
            } else {
                Err(Error::ParameterDomain("prop4 requires p < 1 when q = 1".to_string()))
            }
        }
        Exponent::Finite(qv) if qv > 1.0 && qv.is_finite() => {
            if p < qv - 1.0 {
                Ok(())
            } else {
                Err(Error::ParameterDomain(format!(
                    "prop4 requires p < q−1 when 1 < q < ∞ (p = {p}, q−1 = {})",
                    qv - 1.0
                )))
            }
        }
        Exponent::Finite(qv) => Err(Error::ParameterDomain(format!("q = {qv} outside [1, inf]"))),
    }
}

/// `1/(1 − p/q)`: bound on `∫|Ha|^p` for unweighted `(p,q,0)`-atoms.
pub fn prop1_bound(p: f64, q: Exponent) -> Result<f64> {
    check_p_below_q(p, q)?;
    Ok(1.0 / (1.0 - p * q.recip()))
}

/// `(1 − p/q)^{−1/p}`: constant for `‖Hf‖_p` over atomic sums.
pub fn thm1_constant(p: f64, q: Exponent) -> Result<f64> {
    check_p_below_q(p, q)?;
    Ok((1.0 - p * q.recip()).powf(-1.0 / p))
}

/// Bound on `∫|H*a|^p` for `(p,q,0)_{x^p}`-atoms.
pub fn prop4_bound(p: f64, q: Exponent) -> Result<f64> {
    check_dual_domain(p, q)?;
    Ok(match q {
        Exponent::Infinite => 1.0,
        Exponent::Finite(qv) if qv == 1.0 => 1.0 / ((1.0 - p) * (1.0 + p).powf(p)),
        Exponent::Finite(qv) => {
            let qc = qv / (qv - 1.0);
            let r = p * qc / qv;
            (1.0 - r).powf(-p / qc) * (1.0 + p).powf(p / qv - 1.0) / ((1.0 / qc - p / qv) * p + 1.0)
        }
    })
}

/// [`prop4_bound`] with the `(1+p)` factor taken from `∫_0^1 t^p dt = 1/(1+p)`
/// raised to `1 − p/q`. The stated exponent `p/q − 1` is too small for
/// `1 < q < ∞`: atoms exceed it (see the `stated_constant_is_exceeded` test).
/// Both agree at `q = 1` and `q = ∞`.
pub fn prop4_bound_rederived(p: f64, q: Exponent) -> Result<f64> {
    check_dual_domain(p, q)?;
    Ok(match q {
        Exponent::Finite(qv) if qv > 1.0 => {
            let qc = qv / (qv - 1.0);
            let r = p * qc / qv;
            (1.0 - r).powf(-p / qc) * (1.0 + p).powf(1.0 - p / qv) / ((1.0 / qc - p / qv) * p + 1.0)
        }
        _ => prop4_bound(p, q)?,
    })
}

/// Constant for `‖H*f‖_p` over weighted atomic sums; its `p`-th power is
/// [`prop4_bound`].
pub fn thm2_constant(p: f64, q: Exponent) -> Result<f64> {
    check_dual_domain(p, q)?;
    Ok(match q {
        Exponent::Infinite => 1.0,
        Exponent::Finite(qv) if qv == 1.0 => 1.0 / ((1.0 - p).powf(1.0 / p) * (p + 1.0)),
        Exponent::Finite(qv) => {
            let qc = qv / (qv - 1.0);
            let r = p * qc / qv;
            (1.0 - r).powf(-1.0 / qc) * (1.0 + p).powf(1.0 / qv - 1.0 / p)
                / ((1.0 / qc - p / qv) * p + 1.0).powf(1.0 / p)
        }
    })
}

/// `1/q'` with `∞' = 1`; requires `q > 1`.
pub fn hardy_image_scale(q: Exponent) -> Result<f64> {
    match q.conjugate() {
        Exponent::Finite(qc) if qc.is_finite() && qc >= 1.0 => Ok(1.0 / qc),
        _ => Err(Error::ParameterDomain("the Hardy image scale needs q > 1".to_string())),
    }
}

/// Scale turning `H*a` of a `(p,q,s)_{x^p}`-atom into a `(p,q,s−1)`-atom:
/// `(1+p)^{−1/p}` at `q = ∞`, `(1−p)(1+p)^{1−1/p}` at `q = 1`, `1/q` otherwise.
pub fn dual_image_scale(p: f64, q: Exponent) -> Result<f64> {
    check_p(p)?;
    match q {
        Exponent::Infinite => Ok((1.0 + p).powf(-1.0 / p)),
        Exponent::Finite(qv) if qv == 1.0 => {
            if p < 1.0 {
                Ok((1.0 - p) * (1.0 + p).powf(1.0 - 1.0 / p))
            } else {
                Err(Error::Precondition("the dual image scale is undefined at q = 1, p = 1".to_string()))
            }
        }
        Exponent::Finite(qv) if qv > 1.0 && qv.is_finite() => Ok(1.0 / qv),
        Exponent::Finite(qv) => Err(Error::ParameterDomain(format!("q = {qv} outside [1, inf]"))),
    }
}

/// `|p'|^p` with `p' = p/(p−1)`; for `0 < p < 1` the conjugate is negative
/// and its absolute value is used.
pub fn classical_hardy_constant(p: f64) -> f64 {
    (p / (p - 1.0)).abs().powf(p)
}

/// `p^p`.
pub fn classical_dual_constant(p: f64) -> f64 {
    p.powf(p)
}
