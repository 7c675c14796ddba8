//! Sorted correction-factor spectra and their summary statistics.

use romforge_core::reduction::{CorrectionSpectrum, SpectrumOrder};
use serde::Serialize;

/// One condensed mode; `mode` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub rank: usize,
    pub mode: usize,
    pub omega: f64,
    pub normalized_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSummary {
    /// 1-based master mode.
    pub master: usize,
    pub beta: f64,
    pub gamma: f64,
    pub condensed_modes: usize,
    pub threshold: f64,
    pub relevant_modes: usize,
    pub relevant_fraction: f64,
    /// Basis size (master included) reaching 1 % and 0.1 % Gamma error.
    pub modes_to_1pct: Option<usize>,
    pub modes_to_0p1pct: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub rows: Vec<SpectrumRow>,
    pub summary: SpectrumSummary,
    /// Partial Gamma after condensing `m` modes in decreasing-factor order.
    pub convergence: Vec<f64>,
}

impl SpectrumReport {
    pub const HEADER: [&'static str; 4] = ["rank", "mode", "omega", "normalized_factor"];

    pub fn csv_rows(&self) -> impl Iterator<Item = [String; 4]> + '_ {
        self.rows.iter().map(|r| {
            [r.rank.to_string(), r.mode.to_string(), crate::artifacts::num(r.omega), crate::artifacts::num(r.normalized_factor)]
        })
    }

    pub fn convergence_rows(&self) -> impl Iterator<Item = [String; 3]> + '_ {
        let g = self.summary.gamma;
        self.convergence.iter().enumerate().map(move |(m, v)| {
            [(m + 1).to_string(), crate::artifacts::num(*v), crate::artifacts::num(((v - g) / g).abs())]
        })
    }
}

/// Spectrum of master `p` sorted by decreasing correction factor.
pub fn spectrum_report(spectrum: &CorrectionSpectrum, threshold: f64) -> SpectrumReport {
    let ordered = spectrum.ordered(SpectrumOrder::ByDecreasingFactor);
    let rows = ordered
        .iter()
        .enumerate()
        .map(|(rank, e)| SpectrumRow {
            rank: rank + 1,
            mode: e.mode + 1,
            omega: e.omega,
            normalized_factor: if spectrum.beta == 0.0 { 0.0 } else { spectrum.normalized(e) },
        })
        .collect();
    let relevant = if spectrum.beta == 0.0 { Vec::new() } else { spectrum.relevant(threshold) };
    let n = spectrum.entries.len();
    let summary = SpectrumSummary {
        master: spectrum.master + 1,
        beta: spectrum.beta,
        gamma: spectrum.gamma(),
        condensed_modes: n,
        threshold,
        relevant_modes: relevant.len(),
        relevant_fraction: if n == 0 { 0.0 } else { relevant.len() as f64 / n as f64 },
        modes_to_1pct: spectrum.modes_to_tolerance(SpectrumOrder::ByDecreasingFactor, 1e-2),
        modes_to_0p1pct: spectrum.modes_to_tolerance(SpectrumOrder::ByDecreasingFactor, 1e-3),
    };
    SpectrumReport { rows, summary, convergence: spectrum.convergence(SpectrumOrder::ByDecreasingFactor) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use romforge_core::reduction::CorrectionEntry;

    #[test]
    fn all_zero_spectrum_has_no_relevant_modes() {
        let s = CorrectionSpectrum {
            master: 0,
            beta: 0.0,
            entries: (1..4).map(|m| CorrectionEntry { mode: m, factor: 0.0, omega: m as f64 }).collect(),
        };
        let r = spectrum_report(&s, 1e-15);
        assert_eq!(r.summary.relevant_modes, 0);
        assert_eq!(r.summary.relevant_fraction, 0.0);
        assert_eq!(r.rows.len(), 3);
    }

    #[test]
    fn rows_are_ranked_by_factor() {
        let s = CorrectionSpectrum {
            master: 0,
            beta: 10.0,
            entries: vec![
                CorrectionEntry { mode: 1, factor: 1.0, omega: 2.0 },
                CorrectionEntry { mode: 2, factor: 4.0, omega: 3.0 },
            ],
        };
        let r = spectrum_report(&s, 1e-15);
        assert_eq!(r.rows.iter().map(|r| r.mode).collect::<Vec<_>>(), vec![3, 2]);
        assert_eq!(r.summary.gamma, 5.0);
        assert_eq!(r.summary.relevant_fraction, 1.0);
        assert_eq!(r.convergence, vec![10.0, 6.0, 5.0]);
    }
}
