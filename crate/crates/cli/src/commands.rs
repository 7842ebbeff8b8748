//! The three experiments. Each returns a [`Table`]; grid points are evaluated
//! through [`Execution`] and emitted in grid order.

use hstlink::estimator::mse_traces;
use hstlink::metrics::{ber_average, ber_group_with, ChiSquareKernel};
use hstlink::montecarlo::{run, trial_seed, TrialConfig};
use hstlink::tradeoff::build_tradeoff;
use hstlink::{make_layout, Execution, LinkBudget, MetricPoint, PilotLayout};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::{fmt_g, Table};

struct GridPoint {
    k_r_db: f64,
    delta: f64,
    snr_db: f64,
}

/// K_R outermost, then delta, then SNR.
fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &k_r_db in &cfg.k_r_db {
        for &delta in &cfg.deltas {
            for &snr_db in &cfg.snr_db {
                out.push(GridPoint { k_r_db, delta, snr_db });
            }
        }
    }
    out
}

fn max_l(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    let mut m = 0;
    for &d in &cfg.deltas {
        m = m.max(PilotLayout::l_for_delta(d)?);
    }
    Ok(m)
}

fn per_u_cells(values: &[f64], width: usize) -> impl Iterator<Item = String> + '_ {
    (0..width).map(move |i| values.get(i).map(|&v| fmt_g(v)).unwrap_or_default())
}

/// Large-frame analysis on the (K_R, delta, SNR) grid.
pub fn cmd_analyze(cfg: &ExperimentConfig, exec: Execution) -> Result<Table, CliError> {
    let width = max_l(cfg)?;
    let mut header: Vec<String> = ["delta", "snr_db", "K_R_db", "sigma_p_sq"].map(String::from).into();
    header.extend((1..=width).map(|u| format!("sigma_d_sq_u{u}")));
    header.extend(["P_e", "eta_up"].map(String::from));
    let mut table = Table::new(header);

    let settings = cfg.settings();
    let kernels = cfg
        .k_r_db
        .iter()
        .map(|&k| ChiSquareKernel::new(cfg.scenario(k).rician_factor, settings.semi_infinite_nodes))
        .collect::<Result<Vec<_>, _>>()?;
    let points = grid(cfg);
    let per_k = cfg.deltas.len() * cfg.snr_db.len();
    let results = exec.map(points.len(), |i| {
        let p = &points[i];
        let s = cfg.scenario(p.k_r_db);
        let snr = ExperimentConfig::snr_linear(p.snr_db);
        MetricPoint::evaluate_with(&s, p.delta, snr, &settings, &kernels[i / per_k])
    });
    for (p, m) in points.iter().zip(results) {
        let m = m?;
        let mut row = vec![fmt_g(p.delta), fmt_g(p.snr_db), fmt_g(p.k_r_db), fmt_g(m.sigma_p_sq)];
        row.extend(per_u_cells(&m.sigma_d_sq, width));
        row.push(fmt_g(m.p_e));
        row.push(fmt_g(m.eta));
        table.rows.push(row);
    }
    Ok(table)
}

/// Monte Carlo validation of the analysis with `n_p` pilots per frame. The
/// analytic BER uses the finite-frame MSE traces of the simulated layout.
pub fn cmd_mc(cfg: &ExperimentConfig, exec: Execution, progress: bool) -> Result<Table, CliError> {
    let width = max_l(cfg)?;
    let mut header: Vec<String> =
        ["delta", "snr_db", "K_R_db", "empirical_mse_pilot", "mse_pilot_stderr"].map(String::from).into();
    header.extend((1..=width).map(|u| format!("empirical_mse_u{u}")));
    header.extend(["empirical_ber", "ber_stderr", "analytic_ber", "z_score"].map(String::from));
    let mut table = Table::new(header);

    for (i, p) in grid(cfg).into_iter().enumerate() {
        let s = cfg.scenario(p.k_r_db);
        let snr = ExperimentConfig::snr_linear(p.snr_db);
        let l = PilotLayout::l_for_delta(p.delta)?;
        let layout = make_layout(cfg.n_p, l)?;
        if progress {
            eprintln!("point {}: K_R={} dB, delta={}, snr={} dB", i + 1, p.k_r_db, p.delta, p.snr_db);
        }
        let trial = TrialConfig {
            scenario: s,
            layout,
            budget: LinkBudget::from_snr(snr)?,
            num_trials: cfg.num_trials,
            base_seed: trial_seed(cfg.base_seed, i as u64),
            detector_csi: cfg.detector,
        };
        let rep = run(&trial, exec, progress)?;
        let groups: Vec<usize> = (1..=l).collect();
        let traces = mse_traces(&s, cfg.n_p, p.delta, snr, &groups, exec)?;
        let per_group = traces
            .sigma_d_sq
            .iter()
            .map(|&v| ber_group_with(s.rician_factor, snr, v, cfg.closed_nodes))
            .collect::<Result<Vec<_>, _>>()?;
        let analytic = ber_average(&per_group)?;

        let mut row = vec![
            fmt_g(p.delta),
            fmt_g(p.snr_db),
            fmt_g(p.k_r_db),
            fmt_g(rep.mse_pilot.mean),
            fmt_g(rep.mse_pilot.stderr),
        ];
        let mse_u: Vec<f64> = rep.mse_data_per_u.iter().map(|e| e.mean).collect();
        row.extend(per_u_cells(&mse_u, width));
        row.extend([
            fmt_g(rep.ber.mean),
            fmt_g(rep.ber.stderr),
            fmt_g(analytic),
            fmt_g(rep.ber.z_score(analytic)),
        ]);
        table.rows.push(row);
    }
    Ok(table)
}

/// BER versus spectral-efficiency curve over [delta_SE-opt, 1/2] for every
/// (K_R, SNR) pair; each curve is sorted by delta descending.
pub fn cmd_tradeoff(cfg: &ExperimentConfig, exec: Execution) -> Result<Table, CliError> {
    let header = ["delta", "L", "p_e", "eta", "p_e_norm", "eta_norm", "is_anchor", "snr_db", "K_R_db"];
    let mut table = Table::new(header.map(String::from).into());
    let settings = cfg.settings();
    for &k_r_db in &cfg.k_r_db {
        let s = cfg.scenario(k_r_db);
        for &snr_db in &cfg.snr_db {
            let curve = build_tradeoff(&s, ExperimentConfig::snr_linear(snr_db), cfg.l_max, &settings, exec)?;
            for p in &curve.points {
                table.rows.push(vec![
                    fmt_g(p.delta),
                    p.l.to_string(),
                    fmt_g(p.p_e),
                    fmt_g(p.eta),
                    fmt_g(p.p_e_norm),
                    fmt_g(p.eta_norm),
                    p.is_anchor().to_string(),
                    fmt_g(snr_db),
                    fmt_g(k_r_db),
                ]);
            }
        }
    }
    Ok(table)
}
