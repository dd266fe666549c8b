//! Robustness of the moment-level inference against errors in `(N1, N2)`.

use photon_maxent::maxent::solve_moments;
use photon_maxent::{fidelity, physicality, Error, MaxEntOptions, PhotonDistribution};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, StateSpec, SweepConfig};
use crate::report::{CellStatus, GridCell, RobustnessGrid};

/// Feed `(N1 (1 + a), N2 (1 + b))` for every offset pair straight into the
/// moment solver and score against the true distribution. Cells with
/// `N2 < N1^2`, or with a variance too small for the integer lattice, are
/// masked with fidelity 0.
pub fn robustness_sweep(
    state: &StateSpec,
    grid: &SweepConfig,
    options: &MaxEntOptions,
) -> Result<RobustnessGrid, ConfigError> {
    grid.validate()?;
    let truth = state.distribution(options.tail_tol)?;
    let base_n1 = truth.moment(1)?;
    let base_n2 = truth.moment(2)?;
    let pairs: Vec<(f64, f64)> = grid
        .n1_offsets
        .iter()
        .flat_map(|&a| grid.n2_offsets.iter().map(move |&b| (a, b)))
        .collect();
    // collect() on an indexed parallel iterator keeps grid order
    let cells = pairs
        .par_iter()
        .map(|&(a, b)| cell(&truth, base_n1 * (1.0 + a), base_n2 * (1.0 + b), a, b, options))
        .collect();
    Ok(RobustnessGrid {
        state: state.clone(),
        base_n1,
        base_n2,
        n1_offsets: grid.n1_offsets.clone(),
        n2_offsets: grid.n2_offsets.clone(),
        cells,
    })
}

pub fn sweep_from_config(config: &ExperimentConfig) -> Result<RobustnessGrid, ConfigError> {
    robustness_sweep(&config.state, &config.sweep, &config.solver.maxent())
}

fn cell(
    truth: &PhotonDistribution,
    n1: f64,
    n2: f64,
    n1_offset: f64,
    n2_offset: f64,
    options: &MaxEntOptions,
) -> GridCell {
    let mut physical = physicality(n1, n2).unwrap_or(false);
    let (status, fidelity, message) = if !physical {
        (CellStatus::Unphysical, 0.0, None)
    } else {
        match solve_moments(n1, n2, options) {
            Ok(state) => (
                CellStatus::Solved,
                fidelity(truth, &state.distribution()).value(),
                None,
            ),
            Err(e @ (Error::LatticeInfeasible { .. } | Error::NearDegenerate { .. })) => {
                physical = false;
                (CellStatus::LatticeInfeasible, 0.0, Some(e.to_string()))
            }
            Err(e) => (CellStatus::Failed, 0.0, Some(e.to_string())),
        }
    };
    GridCell {
        n1_offset,
        n2_offset,
        n1,
        n2,
        physical,
        status,
        fidelity,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherent3() -> StateSpec {
        StateSpec::Coherent { mean: 3.0 }
    }

    #[test]
    fn grid_order_and_center_cell() {
        let opts = MaxEntOptions::default();
        let g = robustness_sweep(&coherent3(), &SweepConfig::default(), &opts).unwrap();
        assert_eq!(g.cells.len(), 25);
        for (i, &a) in g.n1_offsets.iter().enumerate() {
            for (j, &b) in g.n2_offsets.iter().enumerate() {
                let c = g.cell(i, j);
                assert_eq!((c.n1_offset, c.n2_offset), (a, b));
            }
        }
        let center = g.cell(2, 2);
        let truth = coherent3().distribution(opts.tail_tol).unwrap();
        let direct = solve_moments(g.base_n1, g.base_n2, &opts).unwrap();
        assert_eq!(center.fidelity, fidelity(&truth, &direct.distribution()).value());
    }

    #[test]
    fn unphysical_cells_masked() {
        let wide = SweepConfig {
            n1_offsets: vec![-0.3, 0.0, 0.3],
            n2_offsets: vec![-0.3, 0.0, 0.3],
        };
        let g = robustness_sweep(&coherent3(), &wide, &MaxEntOptions::default()).unwrap();
        let masked: Vec<_> = g.cells.iter().filter(|c| !c.physical).collect();
        assert!(!masked.is_empty());
        for c in &g.cells {
            if c.n2 < c.n1 * c.n1 {
                assert!(!c.physical);
                assert_eq!(c.status, CellStatus::Unphysical);
            }
            if c.physical {
                assert!(c.fidelity > 0.0 && c.fidelity <= 1.0);
            } else {
                assert_eq!(c.fidelity, 0.0);
            }
        }
    }

    #[test]
    fn lattice_infeasible_cell_masked() {
        // N1 = 3.45 needs variance >= 0.2475; offsets give 0.0875
        let grid = SweepConfig {
            n1_offsets: vec![0.15],
            n2_offsets: vec![0.0],
        };
        let g = robustness_sweep(&coherent3(), &grid, &MaxEntOptions::default()).unwrap();
        let c = &g.cells[0];
        assert!(c.n2 >= c.n1 * c.n1);
        assert!(!c.physical);
        assert_eq!(c.status, CellStatus::LatticeInfeasible);
        assert_eq!(c.fidelity, 0.0);
    }
}
