//! Plot-ready comma-separated data with a header line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::report::{ExperimentReport, RobustnessGrid, Stored};

pub const BARS_FILE: &str = "fig_bars.csv";
pub const GRID_CSV_FILE: &str = "fig_grid.csv";

/// Rows `n,true,inferred` over the longer of the two supports.
pub fn bars_csv(report: &ExperimentReport) -> anyhow::Result<String> {
    let Some(inferred) = &report.inferred_distribution else {
        bail!("report has no inferred distribution (status {:?})", report.status);
    };
    let len = report.true_distribution.len().max(inferred.len());
    let mut out = String::from("n,true,inferred\n");
    for n in 0..len {
        let p = report.true_distribution.get(n).copied().unwrap_or(0.0);
        let q = inferred.get(n).copied().unwrap_or(0.0);
        writeln!(out, "{n},{p:?},{q:?}").unwrap();
    }
    Ok(out)
}

/// One row per grid cell, in grid order.
pub fn grid_csv(grid: &RobustnessGrid) -> String {
    let mut out = String::from("n1_offset,n2_offset,n1,n2,physical,fidelity\n");
    for c in &grid.cells {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{},{:?}",
            c.n1_offset, c.n2_offset, c.n1, c.n2, c.physical, c.fidelity
        )
        .unwrap();
    }
    out
}

/// Write the figure file for `stored` into `dir`, returning its path.
pub fn emit_figure_data(stored: &Stored, dir: &Path) -> anyhow::Result<PathBuf> {
    let (name, body) = match stored {
        Stored::ExperimentReport(r) => (BARS_FILE, bars_csv(r)?),
        Stored::RobustnessGrid(g) => (GRID_CSV_FILE, grid_csv(g)),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, StateSpec, SweepConfig};
    use crate::pipeline::run_pipeline;
    use crate::sweep::robustness_sweep;
    use photon_maxent::MaxEntOptions;

    #[test]
    fn fock_bars_have_unit_row() {
        let mut config = ExperimentConfig::reference(StateSpec::Fock { photons: 2 }, 0);
        config.noiseless = true;
        let report = run_pipeline(&config).unwrap().report;
        let csv = bars_csv(&report).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,true,inferred"));
        assert_eq!(lines.nth(2), Some("2,1.0,1.0"));
    }

    #[test]
    fn grid_rows() {
        let g = robustness_sweep(
            &StateSpec::Coherent { mean: 3.0 },
            &SweepConfig::default(),
            &MaxEntOptions::default(),
        )
        .unwrap();
        let csv = grid_csv(&g);
        assert_eq!(csv.lines().count(), 26);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 6));
    }
}
