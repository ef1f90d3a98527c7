//! Log-log decay fits over a ladder of `k` values.

use statrs::distribution::{ContinuousCDF, StudentsT};

use osclab_models::{BaseMetric, ModelFibration, RelativeMetric};

use crate::error::ExpansionError;
use crate::terms::{exact_quantity, expansion_terms, Quantity, Term};

/// Default ladder.
pub const LADDER: [f64; 4] = [20.0, 40.0, 80.0, 160.0];

/// Residual norms below this are treated as exact zero.
pub const EXACT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub quantity: String,
    pub order: usize,
    pub ks: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope of `log ‖residual‖` against `log k`.
    pub slope: f64,
    /// 95% confidence interval of the slope.
    pub interval: (f64, f64),
    /// All residuals at roundoff: the expansion terminates and no slope
    /// is defined.  `slope` is then `−∞`.
    pub exact: bool,
    pub order0: Term,
    pub order1: Term,
}

impl ExpansionReport {
    /// Slope bound `−(j+1) + 0.15`.
    pub fn passes(&self) -> bool {
        self.slope <= -(self.order as f64 + 1.0) + 0.15
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,residual\n");
        for (k, r) in self.ks.iter().zip(&self.norms) {
            s.push_str(&format!("{k},{r:e}\n"));
        }
        s
    }
}

/// Checks the ladder is strictly increasing, has at least `min_len`
/// entries and spans a factor of at least `min_span`.
pub fn check_ladder(ks: &[f64], min_len: usize, min_span: f64) -> Result<(), ExpansionError> {
    if ks.len() < min_len {
        return Err(ExpansionError::Ladder(format!("{} values, need {min_len}", ks.len())));
    }
    if ks.windows(2).any(|w| !(w[1] > w[0])) || !(ks[0] > 0.0) {
        return Err(ExpansionError::Ladder("must be positive and strictly increasing".into()));
    }
    let span = ks[ks.len() - 1] / ks[0];
    if span < min_span {
        return Err(ExpansionError::Ladder(format!("spans a factor {span}, need {min_span}")));
    }
    Ok(())
}

/// Least-squares slope of `log y` against `log x` with a 95% interval.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, (f64, f64)) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if lx.len() < 3 {
        return (slope, (slope, slope));
    }
    let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0).map(|d| d.inverse_cdf(0.975)).unwrap_or(1.96);
    (slope, (slope - t * se, slope + t * se))
}

/// Builds a report from residual norms, handling the terminating case.
pub fn report(quantity: &str, order: usize, ks: &[f64], norms: Vec<f64>, order0: Term, order1: Term) -> ExpansionReport {
    let exact = norms.iter().all(|v| *v <= EXACT_FLOOR);
    let (slope, interval) = if exact {
        (f64::NEG_INFINITY, (f64::NEG_INFINITY, f64::NEG_INFINITY))
    } else {
        let floored: Vec<f64> = norms.iter().map(|v| v.max(EXACT_FLOOR)).collect();
        fit_slope(ks, &floored)
    };
    ExpansionReport { quantity: quantity.to_string(), order, ks: ks.to_vec(), norms, slope, interval, exact, order0, order1 }
}

/// Residual of the exact quantity after subtracting the expansion through
/// order `order` (0 or 1), fitted over `ks`.
pub fn decay_fit(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    quantity: Quantity<'_>,
    order: usize,
    ks: &[f64],
) -> Result<ExpansionReport, ExpansionError> {
    check_ladder(ks, 4, 8.0)?;
    if order > 1 {
        return Err(ExpansionError::Ladder(format!("expansion known through order 1, asked for {order}")));
    }
    let terms = expansion_terms(model, omega, base, quantity)?;
    let mut norms = Vec::with_capacity(ks.len());
    for &k in ks {
        let exact = exact_quantity(model, omega, base, quantity, k, None)?;
        let r = exact.residual(&terms.order0, (order == 1).then_some((&terms.order1, k)));
        norms.push(r.sup());
    }
    Ok(report(quantity.name(), order, ks, norms, terms.order0, terms.order1))
}

/// Non-constant part of `S(ω_k + k⁻¹ i∂∂̄l₁)` over the ladder.  With
/// `extremal` the order-one potential `k⁻¹ h₁` is removed as well, which is
/// the form the statement takes when `ω_X` is only extremal.
pub fn corrected_scalar_fit(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    order_one: &crate::order_one::OrderOne,
    ks: &[f64],
    extremal: bool,
) -> Result<ExpansionReport, ExpansionError> {
    check_ladder(ks, 4, 8.0)?;
    let w = crate::exact::volume_weights(model, omega, base);
    let h1 = &order_one.h1;
    let hm = crate::exact::mean(&w, h1);
    let mut norms = Vec::with_capacity(ks.len());
    for &k in ks {
        let psi: Vec<f64> = order_one.l1.iter().map(|v| v / k).collect();
        let s = crate::exact::scalar_at(model, omega, base, k, Some(&psi))?;
        let m = crate::exact::mean(&w, &s);
        let r: Vec<f64> = (0..s.len())
            .map(|n| s[n] - m - if extremal { (h1[n] - hm) / k } else { 0.0 })
            .collect();
        norms.push(osclab_models::field::sup(&r));
    }
    let name = if extremal { "scalar, l1 corrected, modulo h1" } else { "scalar, l1 corrected" };
    Ok(report(name, 1, ks, norms, Term::Function(vec![]), Term::Function(order_one.l1.clone())))
}
