//! One runner per subcommand. Every runner evaluates its sweep points in
//! parallel and assembles rows in sweep order, so the output does not depend
//! on the thread count.

use fblfas_core::channel::{BlockFit, BlockModel, SystemConfig};
use fblfas_core::fas_stats::{block_pdf_factor_reference, GainDistribution};
use fblfas_core::metrics::{mrc_gain_samples, mrc_outage, outage_probability, statistical_bler};
use fblfas_core::montecarlo::{bound_average, empirical_gain_cdf, max_gain_samples, outage_fraction};
use fblfas_core::quadrature::gauss_laguerre;
use rayon::prelude::*;

use crate::error::CliError;
use crate::settings::{Kind, Settings};
use crate::table::Table;

/// Largest array evaluated analytically; block fitting above this is slow.
pub const ANALYTIC_PORT_CAP: usize = 5000;
/// Largest array simulated; each simulation needs a dense eigendecomposition.
pub const SIMULATION_PORT_CAP: usize = 1000;

pub fn run(settings: &Settings) -> Result<Table, CliError> {
    match settings.kind {
        Kind::Dist => distribution(settings),
        Kind::BlerVsU => sweep(settings, Metric::Bler, Axis::Users),
        Kind::BlerVsSnr => sweep(settings, Metric::Bler, Axis::SnrDb),
        Kind::BlerVsN => sweep(settings, Metric::Bler, Axis::Ports),
        Kind::BlerVsW => sweep(settings, Metric::Bler, Axis::Width),
        Kind::OpVsSnr => sweep(settings, Metric::Outage, Axis::SnrDb),
        Kind::OpVsU => sweep(settings, Metric::Outage, Axis::Users),
        Kind::QuadCheck => quad_check(settings),
    }
}

fn check_ports(ports: usize) -> Result<(), CliError> {
    if ports == 0 || ports > ANALYTIC_PORT_CAP {
        return Err(CliError::usage(format!(
            "`ports` must lie in 1..={ANALYTIC_PORT_CAP}, got {ports}"
        )));
    }
    Ok(())
}

fn fit_note(ports: usize, width: f64, fit: &BlockFit) -> String {
    let sizes: Vec<String> = fit.model.block_sizes().iter().map(|s| s.to_string()).collect();
    let mut note = format!("N {ports} W {width} fitted block sizes {}", sizes.join("+"));
    if let Some(warning) = &fit.warning {
        note.push_str(&format!(" ({warning})"));
    }
    note
}

fn distribution(s: &Settings) -> Result<Table, CliError> {
    let ports = s.usize("ports")?;
    check_ports(ports)?;
    let width = s.f64("width")?;
    let sigma2 = s.f64("sigma2")?;
    let t_max = s.f64("t_max")?;
    let points = s.usize("points")?;
    let samples = s.usize("samples")?;
    if !(t_max > 0.0) || points == 0 {
        return Err(CliError::usage("`t_max` must be > 0 and `points` >= 1"));
    }
    if samples > 0 && ports > SIMULATION_PORT_CAP {
        return Err(CliError::usage(format!(
            "simulation is capped at {SIMULATION_PORT_CAP} ports; pass --samples 0 for N = {ports}"
        )));
    }
    let rule = gauss_laguerre(s.usize("quad_order")?)?;
    let (dist, fit) = GainDistribution::for_array(ports, width, s.f64("mu2")?, sigma2, rule)?;
    let grid: Vec<f64> = (1..=points).map(|k| t_max * k as f64 / points as f64).collect();
    let analytic = grid
        .par_iter()
        .map(|&t| Ok((dist.cdf(t)?, dist.pdf(t)?)))
        .collect::<Result<Vec<(f64, f64)>, fblfas_core::Error>>()?;
    let simulated = if samples > 0 {
        Some(empirical_gain_cdf(ports, width, sigma2, &grid, samples, s.u64("seed")?)?)
    } else {
        None
    };
    let mut table = Table::new(
        ["t", "cdf_analytic", "pdf_analytic", "cdf_mc", "cdf_mc_se"]
            .map(String::from)
            .to_vec(),
    );
    table.note(fit_note(ports, width, &fit));
    for (k, (&t, &(cdf, pdf))) in grid.iter().zip(&analytic).enumerate() {
        let mc = simulated.as_ref().map(|est| &est[k]);
        table.push_row(vec![
            Some(t),
            Some(cdf),
            Some(pdf),
            mc.map(|e| e.value),
            mc.map(|e| e.standard_error),
        ]);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Bler,
    Outage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Users,
    SnrDb,
    Ports,
    Width,
}

impl Axis {
    fn column(self) -> &'static str {
        match self {
            Axis::Users => "users",
            Axis::SnrDb => "snr_db",
            Axis::Ports => "ports",
            Axis::Width => "width",
        }
    }
}

/// Everything about one antenna array that sweep points share.
struct Array {
    ports: usize,
    width: f64,
    dist: GainDistribution,
    /// Best-port gain draws, when simulation is enabled and the array is
    /// small enough.
    gains: Option<Vec<f64>>,
}

fn single<T: Copy>(key: &str, values: &[T], kind: Kind) -> Result<T, CliError> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::usage(format!(
            "`{key}` takes a single value for {}",
            kind.name()
        ))),
    }
}

fn sweep(s: &Settings, metric: Metric, axis: Axis) -> Result<Table, CliError> {
    let kind = s.kind;
    let users = s.usize_list("users")?;
    let snrs = s.f64_list("snr_db")?;
    let ports = s.usize_list("ports")?;
    let widths = s.f64_list("width")?;
    let branches = s.usize_list("mrc")?;
    let samples = s.usize("samples")?;
    let seed = s.u64("seed")?;
    let sigma2 = s.f64("sigma2")?;
    let mu2 = s.f64("mu2")?;
    let gamma_th = match metric {
        Metric::Outage => s.f64("gamma_th")?,
        Metric::Bler => SystemConfig::default().outage_threshold,
    };
    ports.iter().try_for_each(|&n| check_ports(n))?;
    if branches.contains(&0) {
        return Err(CliError::usage("`mrc` branch counts must be >= 1"));
    }

    let xs: Vec<f64> = match axis {
        Axis::Users => users.iter().map(|&u| u as f64).collect(),
        Axis::SnrDb => snrs.clone(),
        Axis::Ports => ports.iter().map(|&n| n as f64).collect(),
        Axis::Width => widths.clone(),
    };
    // Series are the port counts, except when ports are the swept quantity.
    let series: Vec<usize> = if axis == Axis::Ports { vec![0] } else { ports.clone() };
    let fixed_users = if axis == Axis::Users { 0 } else { single("users", &users, kind)? };
    let fixed_snr = if axis == Axis::SnrDb { 0.0 } else { single("snr_db", &snrs, kind)? };
    let fixed_width = if axis == Axis::Width { 0.0 } else { single("width", &widths, kind)? };

    // (ports, width, users, snr_db) at sweep index i for series j.
    let point = |i: usize, j: usize| -> (usize, f64, usize, f64) {
        match axis {
            Axis::Users => (series[j], fixed_width, users[i], fixed_snr),
            Axis::SnrDb => (series[j], fixed_width, fixed_users, snrs[i]),
            Axis::Ports => (ports[i], fixed_width, fixed_users, fixed_snr),
            Axis::Width => (series[j], widths[i], fixed_users, fixed_snr),
        }
    };
    let config_at = |i: usize, j: usize| -> Result<SystemConfig, CliError> {
        let (n, w, u, snr) = point(i, j);
        let config = SystemConfig {
            ports: n,
            antenna_length: w,
            users: u,
            blocklength: s.usize("blocklength")?,
            channel_variance: sigma2,
            noise_variance: 1.0,
            outage_threshold: gamma_th,
        }
        .with_snr_db(snr);
        config.validate()?;
        Ok(config)
    };

    let mut keys: Vec<(usize, f64)> = Vec::new();
    for i in 0..xs.len() {
        for j in 0..series.len() {
            config_at(i, j)?;
            let (n, w, _, _) = point(i, j);
            if !keys.iter().any(|&(kn, kw)| kn == n && kw.to_bits() == w.to_bits()) {
                keys.push((n, w));
            }
        }
    }
    let order = s.usize("quad_order")?;
    let built = keys
        .par_iter()
        .map(|&(n, w)| -> Result<(Array, String), CliError> {
            let (dist, fit) = GainDistribution::for_array(n, w, mu2, sigma2, gauss_laguerre(order)?)?;
            let gains = if samples > 0 && n <= SIMULATION_PORT_CAP {
                Some(max_gain_samples(n, w, sigma2, samples, seed)?)
            } else {
                None
            };
            Ok((Array { ports: n, width: w, dist, gains }, fit_note(n, w, &fit)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mrc_gains: Vec<Vec<f64>> = if metric == Metric::Bler && samples > 0 {
        branches
            .par_iter()
            .map(|&l| mrc_gain_samples(l, sigma2, samples, seed))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let array_at = |i: usize, j: usize| -> &Array {
        let (n, w, _, _) = point(i, j);
        &built
            .iter()
            .find(|(a, _)| a.ports == n && a.width.to_bits() == w.to_bits())
            .expect("every point has an array")
            .0
    };

    let label = |n: usize| if axis == Axis::Ports { String::new() } else { format!("_N{n}") };
    let mut columns = vec![axis.column().to_string()];
    columns.extend(series.iter().map(|&n| format!("fas{}", label(n))));
    for &n in &series {
        columns.push(format!("fas_mc{}", label(n)));
        columns.push(format!("fas_mc_se{}", label(n)));
        if metric == Metric::Outage {
            columns.push(format!("fas_mc_rare{}", label(n)));
        }
    }
    columns.extend(branches.iter().map(|l| format!("mrc_L{l}")));

    let rows = (0..xs.len())
        .into_par_iter()
        .map(|i| -> Result<(Vec<Option<f64>>, Vec<String>), CliError> {
            let mut notes = Vec::new();
            let mut analytic = Vec::new();
            let mut simulated = Vec::new();
            for j in 0..series.len() {
                let config = config_at(i, j)?;
                let array = array_at(i, j);
                analytic.push(Some(match metric {
                    Metric::Bler => {
                        let result = statistical_bler(&config, &array.dist)?;
                        if !result.converged {
                            notes.push(format!(
                                "{} {} N {}: gain integral stopped at error estimate {:e}",
                                axis.column(),
                                xs[i],
                                config.ports,
                                result.error_estimate
                            ));
                        }
                        result.value
                    }
                    Metric::Outage => outage_probability(&config, &array.dist)?,
                }));
                let estimate = match (&array.gains, metric) {
                    (Some(gains), Metric::Bler) => Some(bound_average(gains, &config, seed)?),
                    (Some(gains), Metric::Outage) => Some(outage_fraction(gains, &config, samples, seed)?),
                    (None, _) => None,
                };
                simulated.push(estimate.map(|e| e.value));
                simulated.push(estimate.map(|e| e.standard_error));
                if metric == Metric::Outage {
                    simulated.push(estimate.map(|e| if e.rare { 1.0 } else { 0.0 }));
                }
            }
            let reference = config_at(i, 0)?;
            let mrc = branches
                .iter()
                .enumerate()
                .map(|(k, &l)| -> Result<Option<f64>, CliError> {
                    Ok(match metric {
                        Metric::Outage => Some(mrc_outage(l, &reference)?),
                        Metric::Bler => match mrc_gains.get(k) {
                            Some(gains) => Some(bound_average(gains, &reference, seed)?.value),
                            None => None,
                        },
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut row = vec![Some(xs[i])];
            row.extend(analytic);
            row.extend(simulated);
            row.extend(mrc);
            Ok((row, notes))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(columns);
    for (_, note) in &built {
        table.note(note.clone());
    }
    for (row, notes) in rows {
        table.push_row(row);
        notes.into_iter().for_each(|n| table.note(n));
    }
    Ok(table)
}

fn quad_check(s: &Settings) -> Result<Table, CliError> {
    let mus = s.f64_list("mu")?;
    let size = s.usize("lb")?;
    let sigma2 = s.f64("sigma2")?;
    let t_max = s.f64("t_max")?;
    let points = s.usize("points")?;
    if let Some(mu) = mus.iter().find(|&&mu| !(mu > 0.0 && mu < 1.0)) {
        return Err(CliError::usage(format!("`mu` values must lie in (0, 1), got {mu}")));
    }
    if size == 0 || !(t_max > 0.0) || points == 0 {
        return Err(CliError::usage("`lb` must be >= 1, `t_max` > 0 and `points` >= 1"));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(CliError::usage(format!("`sigma2` must be > 0, got {sigma2}")));
    }
    let rule = gauss_laguerre(s.usize("quad_order")?)?;
    let grid: Vec<f64> = (1..=points).map(|k| t_max * k as f64 / points as f64).collect();
    let cases: Vec<(f64, f64)> = mus.iter().flat_map(|&mu| grid.iter().map(move |&t| (mu, t))).collect();
    let rows = cases
        .par_iter()
        .map(|&(mu, t)| -> Result<(Vec<Option<f64>>, Option<String>), CliError> {
            let mu2 = mu * mu;
            let dist = GainDistribution::new(BlockModel::new(vec![size], mu2)?, sigma2, rule.clone())?;
            let quadrature = dist.pdf(t)?;
            let jacobian = 2.0 / sigma2;
            let oracle = block_pdf_factor_reference(jacobian * t, size, mu2, 1e-12)?;
            let reference = jacobian * oracle.value;
            let note = (!oracle.converged).then(|| format!("oracle unconverged at mu {mu} t {t}"));
            let err = quadrature - reference;
            Ok((vec![Some(mu), Some(t), Some(quadrature), Some(reference), Some(err * err)], note))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(
        ["mu", "t", "gl_value", "oracle_value", "abs_err2"]
            .map(String::from)
            .to_vec(),
    );
    for (row, note) in rows {
        table.push_row(row);
        if let Some(note) = note {
            table.note(note);
        }
    }
    Ok(table)
}
