//! Reliability-adjusted minimum separation times and landing windows.
//!
//! Per-pair separation is modeled as Gaussian around the wake-turbulence
//! reference value, with variance combined from the two flights' predicted
//! arrival-time uncertainties. Given an allowed spacing-conflict probability
//! `P_c`, the enforced separation is the `(1 - P_c)` quantile of that
//! Gaussian.

use serde::{Deserialize, Serialize};

use crate::domain::{EtaDistribution, Flight, WeightClass};
use crate::normal;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeparationError {
    #[error("conflict probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("expected one ETA per flight: {flights} flights, {etas} ETAs")]
    EtaCountMismatch { flights: usize, etas: usize },
    #[error("need at least 2 flights, got {0}")]
    TooFewFlights(usize),
}

/// 4x4 reference minimum-separation table in seconds, leading class by row,
/// trailing class by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMatrix {
    pub seconds: [[f64; 4]; 4],
}

impl ReferenceMatrix {
    /// The arrival-manager reference values (seconds). Rows: leading
    /// Heavy/B757/Large/Small; columns: trailing in the same order.
    pub fn faa_arrival_manager() -> Self {
        ReferenceMatrix {
            seconds: [
                [82.0, 118.0, 118.0, 150.0],
                [60.0, 64.0, 64.0, 94.0],
                [60.0, 64.0, 64.0, 94.0],
                [60.0, 64.0, 64.0, 94.0],
            ],
        }
    }

    pub fn lookup(&self, lead: WeightClass, trail: WeightClass) -> f64 {
        self.seconds[lead.index()][trail.index()]
    }
}

/// How the conflict probability maps to a Gaussian quantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QuantileConvention {
    /// `t = T + z(1 - P_c) * sigma`: smaller conflict probability yields a
    /// larger buffer.
    #[default]
    Reliability,
    /// Literal `t = T + z(P_c) * sigma`. With small `P_c` this shrinks the
    /// separation below the reference value; kept only for compatibility.
    Literal,
}

/// Pairwise reliability-adjusted separations plus per-flight windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationMatrix {
    pub n: usize,
    /// `sep[i][j]` is the required gap when j lands right after i. The
    /// diagonal is unused (0).
    pub sep: Vec<Vec<f64>>,
    /// Per-pair combined uncertainty, same layout as `sep`.
    pub sigma: Vec<Vec<f64>>,
    /// Earliest landing time per flight.
    pub earliest: Vec<f64>,
    /// Latest landing time per flight.
    pub latest: Vec<f64>,
    pub conflict_probability: f64,
}

/// Window construction parameters, all in seconds except `k_sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub slack_early: f64,
    pub slack_late: f64,
    /// Multiplier on the ETA sigma added on both sides of the window.
    pub k_sigma: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            slack_early: 300.0,
            slack_late: 3600.0,
            k_sigma: 1.0,
        }
    }
}

/// Euclidean combination of the two flights' arrival-time uncertainties.
pub fn combine_sigma(sigma_i: f64, sigma_j: f64) -> f64 {
    debug_assert!(sigma_i >= 0.0 && sigma_j >= 0.0);
    sigma_i.hypot(sigma_j)
}

/// Reliability-adjusted separation for one ordered pair.
pub fn required_separation(
    reference: f64,
    sigma: f64,
    p_c: f64,
    convention: QuantileConvention,
) -> Result<f64, SeparationError> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return Err(SeparationError::InvalidProbability(p_c));
    }
    if sigma == 0.0 {
        return Ok(reference);
    }
    let p = match convention {
        QuantileConvention::Reliability => 1.0 - p_c,
        QuantileConvention::Literal => p_c,
    };
    Ok(reference + normal::inv_cdf(p) * sigma)
}

/// Landing window for one flight from its entry time and predicted duration.
///
/// `l = entry + mu - slack_early - k*sigma`, `u = entry + mu + slack_late +
/// k*sigma`; slacks and `k` are non-negative so `l <= u` always holds.
pub fn build_windows(entry_time: f64, eta: &EtaDistribution, cfg: &WindowConfig) -> (f64, f64) {
    debug_assert!(cfg.slack_early >= 0.0 && cfg.slack_late >= 0.0 && cfg.k_sigma >= 0.0);
    let spread = cfg.k_sigma * eta.sigma;
    let l = entry_time + eta.mu - cfg.slack_early - spread;
    let u = entry_time + eta.mu + cfg.slack_late + spread;
    (l, u)
}

/// Assemble the full separation matrix for a set of flights.
pub fn build_separation_matrix(
    flights: &[Flight],
    etas: &[EtaDistribution],
    reference: &ReferenceMatrix,
    p_c: f64,
    windows: &WindowConfig,
    convention: QuantileConvention,
) -> Result<SeparationMatrix, SeparationError> {
    if flights.len() != etas.len() {
        return Err(SeparationError::EtaCountMismatch {
            flights: flights.len(),
            etas: etas.len(),
        });
    }
    if flights.len() < 2 {
        return Err(SeparationError::TooFewFlights(flights.len()));
    }
    let n = flights.len();
    let mut sep = vec![vec![0.0; n]; n];
    let mut sigma = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let reference_ij = reference.lookup(flights[i].weight_class, flights[j].weight_class);
            let sigma_ij = combine_sigma(etas[i].sigma, etas[j].sigma);
            sigma[i][j] = sigma_ij;
            sep[i][j] = required_separation(reference_ij, sigma_ij, p_c, convention)?;
        }
    }
    let mut earliest = Vec::with_capacity(n);
    let mut latest = Vec::with_capacity(n);
    for (flight, eta) in flights.iter().zip(etas) {
        let (l, u) = build_windows(flight.entry_time, eta, windows);
        earliest.push(l);
        latest.push(u);
    }
    Ok(SeparationMatrix {
        n,
        sep,
        sigma,
        earliest,
        latest,
        conflict_probability: p_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureSchema, FeatureVector};

    fn flight(id: &str, class: WeightClass, entry: f64) -> Flight {
        let schema = FeatureSchema::standard(vec!["B738".into()]);
        Flight {
            id: id.into(),
            callsign: id.into(),
            ac_type: "B738".into(),
            weight_class: class,
            entry_time: entry,
            features: FeatureVector::from_values(&schema, vec![0.0; 28]).unwrap(),
            observed_duration: None,
        }
    }

    fn eta(mu: f64, sigma: f64) -> EtaDistribution {
        EtaDistribution::new(mu, sigma, vec![(0.05, mu - sigma), (0.5, mu), (0.95, mu + sigma)])
    }

    #[test]
    fn reference_values() {
        let m = ReferenceMatrix::faa_arrival_manager();
        assert_eq!(m.lookup(WeightClass::Heavy, WeightClass::Small), 150.0);
        assert_eq!(m.lookup(WeightClass::B757, WeightClass::Heavy), 60.0);
        assert_eq!(m.lookup(WeightClass::Large, WeightClass::Large), 64.0);
        assert_eq!(m.lookup(WeightClass::Heavy, WeightClass::Heavy), 82.0);
    }

    #[test]
    fn combine_sigma_cases() {
        assert_eq!(combine_sigma(3.0, 4.0), 5.0);
        assert_eq!(combine_sigma(0.0, 0.0), 0.0);
        assert_eq!(combine_sigma(7.5, 0.0), 7.5);
    }

    #[test]
    fn required_separation_cases() {
        let c = QuantileConvention::Reliability;
        assert_eq!(required_separation(64.0, 0.0, 0.05, c).unwrap(), 64.0);
        assert_eq!(required_separation(64.0, 5.0, 0.5, c).unwrap(), 64.0);
        let t = required_separation(64.0, 5.0, 0.05, c).unwrap();
        assert!((t - (64.0 + 5.0 * 1.6448536269514722)).abs() < 1e-9);
        assert!((t - 72.2243).abs() < 1e-3);
        assert!(required_separation(64.0, 5.0, 0.0, c).is_err());
        assert!(required_separation(64.0, 5.0, 1.0, c).is_err());
    }

    #[test]
    fn literal_convention_shrinks_buffer() {
        let t = required_separation(64.0, 5.0, 0.05, QuantileConvention::Literal).unwrap();
        assert!(t < 64.0);
    }

    #[test]
    fn window_cases() {
        let cfg = WindowConfig { slack_early: 0.0, slack_late: 0.0, k_sigma: 1.0 };
        let (l, u) = build_windows(100.0, &eta(1200.0, 0.0), &cfg);
        assert_eq!(l, 1300.0);
        assert_eq!(u, 1300.0);

        let cfg = WindowConfig { slack_early: 60.0, slack_late: 120.0, k_sigma: 1.0 };
        let (l, u) = build_windows(500.0, &eta(1200.0, 10.0), &cfg);
        assert_eq!(l, 500.0 + 1130.0);
        assert_eq!(u, 500.0 + 1330.0);

        // Widening: larger sigma never shrinks the window.
        let (l2, u2) = build_windows(500.0, &eta(1200.0, 30.0), &cfg);
        assert!(l2 <= l && u2 >= u);
    }

    #[test]
    fn matrix_assembly() {
        let flights = vec![
            flight("a", WeightClass::Large, 0.0),
            flight("b", WeightClass::Large, 30.0),
        ];
        let etas = vec![eta(1000.0, 0.0), eta(1100.0, 0.0)];
        let m = build_separation_matrix(
            &flights,
            &etas,
            &ReferenceMatrix::faa_arrival_manager(),
            0.5,
            &WindowConfig::default(),
            QuantileConvention::Reliability,
        )
        .unwrap();
        assert_eq!(m.sep[0][1], 64.0);
        assert_eq!(m.sep[1][0], 64.0);

        // Asymmetry preserved for equal sigmas.
        let flights = vec![
            flight("h", WeightClass::Heavy, 0.0),
            flight("s", WeightClass::Small, 30.0),
        ];
        let etas = vec![eta(1000.0, 0.0), eta(1100.0, 0.0)];
        let m = build_separation_matrix(
            &flights,
            &etas,
            &ReferenceMatrix::faa_arrival_manager(),
            0.1,
            &WindowConfig::default(),
            QuantileConvention::Reliability,
        )
        .unwrap();
        assert_eq!(m.sep[0][1], 150.0);
        assert_eq!(m.sep[1][0], 60.0);
    }

    #[test]
    fn matrix_matches_scalar_recomputation() {
        let flights = vec![
            flight("a", WeightClass::Heavy, 0.0),
            flight("b", WeightClass::Large, 30.0),
            flight("c", WeightClass::B757, 90.0),
        ];
        let etas = vec![eta(900.0, 12.0), eta(1000.0, 5.0), eta(1100.0, 20.0)];
        let reference = ReferenceMatrix::faa_arrival_manager();
        let p_c = 0.05;
        let m = build_separation_matrix(
            &flights,
            &etas,
            &reference,
            p_c,
            &WindowConfig::default(),
            QuantileConvention::Reliability,
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let want = required_separation(
                    reference.lookup(flights[i].weight_class, flights[j].weight_class),
                    combine_sigma(etas[i].sigma, etas[j].sigma),
                    p_c,
                    QuantileConvention::Reliability,
                )
                .unwrap();
                assert_eq!(m.sep[i][j], want);
            }
        }
    }

    #[test]
    fn monotone_in_pc_and_sigma() {
        let c = QuantileConvention::Reliability;
        let mut last = f64::NEG_INFINITY;
        for p in [0.4, 0.3, 0.2, 0.1, 0.05, 0.01] {
            let t = required_separation(64.0, 10.0, p, c).unwrap();
            assert!(t > last);
            last = t;
        }
        let mut last = f64::NEG_INFINITY;
        for s in [1.0, 5.0, 10.0, 25.0, 50.0] {
            let t = required_separation(64.0, s, 0.1, c).unwrap();
            assert!(t > last);
            last = t;
        }
    }
}
