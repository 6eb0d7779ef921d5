//! Turns a [`ScenarioConfig`] into result tables. Sweep points run in
//! parallel; results are assembled in sweep order.

use rayon::prelude::*;
use thiserror::Error;

use infogap::influence::{influence_cl_limit, influence_functional};
use infogap::kernels::{
    dissipation_kernel, noise_kernel, qfi_kernel_matsubara, qfi_kernel_quadrature,
};
use infogap::overlap::{
    macrofraction_overlap, overlap_cl_limit, phi_functional_quadrature, ModeSet,
};
use infogap::params::validate_params;
use infogap::scales::gap_report;
use infogap::trajectory::{boundary_trajectory, delta};
use infogap::{Constants, PhysicalParams, ScalesReport, ValidatedParams};

use crate::config::{Output, ScenarioConfig};
use crate::table::{ResultTable, TableError, TOOL_VERSION};
use crate::verify;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("at {coords}: {source}")]
    Domain {
        coords: String,
        #[source]
        source: infogap::Error,
    },
    #[error(transparent)]
    Table(#[from] TableError),
}

impl RunError {
    pub fn domain_error(&self) -> Option<&infogap::Error> {
        match self {
            RunError::Domain { source, .. } => Some(source),
            RunError::Table(_) => None,
        }
    }
}

/// One sweep coordinate: the axis value (if sweeping) and its parameters.
struct Point {
    label: Option<(&'static str, f64)>,
    params: PhysicalParams,
}

impl Point {
    fn coords(&self, extra: Option<(&str, f64)>) -> String {
        let mut parts: Vec<String> = self.label.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.extend(extra.map(|(k, v)| format!("{k}={v}")));
        if parts.is_empty() {
            "base point".into()
        } else {
            parts.join(", ")
        }
    }

    fn fail(&self, extra: Option<(&str, f64)>) -> impl Fn(infogap::Error) -> RunError + '_ {
        let coords = self.coords(extra);
        move |source| RunError::Domain {
            coords: coords.clone(),
            source,
        }
    }

    fn prefix(&self) -> Vec<f64> {
        self.label.iter().map(|(_, v)| *v).collect()
    }
}

fn points(cfg: &ScenarioConfig) -> Vec<Point> {
    match &cfg.sweep {
        None => vec![Point {
            label: None,
            params: cfg.params,
        }],
        Some(s) => s
            .values
            .iter()
            .map(|v| Point {
                label: Some((s.axis.name(), *v)),
                params: s.axis.apply(&cfg.params, *v),
            })
            .collect(),
    }
}

fn units(c: &Constants) -> &'static str {
    if *c == Constants::natural() {
        "natural"
    } else {
        "si"
    }
}

fn header(cfg: &ScenarioConfig, output: Output) -> ResultTable {
    let mut columns: Vec<String> = cfg
        .sweep
        .iter()
        .map(|s| s.axis.name().to_string())
        .collect();
    let body: Vec<&str> = match output {
        Output::Kernels => vec![
            "Lambda_tau",
            "tau",
            "nu",
            "eta",
            "phi_quadrature",
            "phi_matsubara",
        ],
        Output::Overlap if cfg.mode_sampling.is_some() => {
            vec!["t", "Phi", "B_exact", "B_cl", "B_modes"]
        }
        Output::Overlap => vec!["t", "Phi", "B_exact", "B_cl"],
        Output::Influence => vec!["t", "re_exponent", "im_exponent", "re_exponent_cl"],
        Output::Scales => ScalesReport::CSV_HEADER.to_vec(),
        Output::Verify => verify::COLUMNS.to_vec(),
    };
    columns.extend(body.into_iter().map(str::to_string));
    ResultTable::new(output.name(), columns)
        .with_metadata("version", TOOL_VERSION)
        .with_metadata("config_sha256", cfg.config_hash.clone())
        .with_metadata("units", units(&cfg.params.constants))
        .with_metadata("table", output.name())
}

type Rows = Vec<Vec<f64>>;

fn kernel_rows(cfg: &ScenarioConfig, pt: &Point, p: &ValidatedParams) -> Result<Rows, RunError> {
    let sd = p.spectral_density();
    let c = p.constants();
    cfg.lambda_tau
        .par_iter()
        .map(|&x| {
            let tau = x / p.lambda();
            let fail = pt.fail(Some(("tau", tau)));
            let nu = noise_kernel(tau, &sd, p.beta(), &c).map_err(&fail)?.value;
            let phi_q = qfi_kernel_quadrature(tau, &sd, p.beta(), &c)
                .map_err(&fail)?
                .value;
            let phi_m = qfi_kernel_matsubara(tau, &sd, p.beta(), &c, &cfg.tolerances.matsubara)
                .map_err(&fail)?
                .value;
            Ok([
                pt.prefix(),
                vec![x, tau, nu, dissipation_kernel(tau, &sd), phi_q, phi_m],
            ]
            .concat())
        })
        .collect()
}

fn overlap_rows(
    cfg: &ScenarioConfig,
    pt: &Point,
    p: &ValidatedParams,
    modes: Option<&ModeSet>,
) -> Result<Rows, RunError> {
    let tr = &cfg.trajectory;
    let c = p.constants();
    cfg.trajectory
        .times
        .par_iter()
        .map(|&t| {
            let fail = pt.fail(Some(("t", t)));
            let x = boundary_trajectory(tr.x.0, tr.x.1, t, p.omega()).map_err(&fail)?;
            let xp =
                boundary_trajectory(tr.x_prime.0, tr.x_prime.1, t, p.omega()).map_err(&fail)?;
            let d = delta(&x, &xp).map_err(&fail)?;
            let phi = phi_functional_quadrature(&d, &p.spectral_density(), p.beta(), &c)
                .map_err(&fail)?
                .value;
            let mut row = pt.prefix();
            row.extend([t, phi, (-phi / c.hbar).exp(), overlap_cl_limit(&d, p)]);
            if let Some(ms) = modes {
                row.push(macrofraction_overlap(ms, &d, p.beta(), &c));
            }
            Ok(row)
        })
        .collect()
}

fn influence_rows(cfg: &ScenarioConfig, pt: &Point, p: &ValidatedParams) -> Result<Rows, RunError> {
    let tr = &cfg.trajectory;
    cfg.trajectory
        .times
        .par_iter()
        .map(|&t| {
            let fail = pt.fail(Some(("t", t)));
            let x = boundary_trajectory(tr.x.0, tr.x.1, t, p.omega()).map_err(&fail)?;
            let xp =
                boundary_trajectory(tr.x_prime.0, tr.x_prime.1, t, p.omega()).map_err(&fail)?;
            let f = influence_functional(&x, &xp, p).map_err(&fail)?;
            let cl = influence_cl_limit(&delta(&x, &xp).map_err(&fail)?, p);
            Ok([pt.prefix(), vec![t, f.re_exponent, f.im_exponent, cl]].concat())
        })
        .collect()
}

fn scales_rows(cfg: &ScenarioConfig, pt: &Point, p: &ValidatedParams) -> Result<Rows, RunError> {
    let report = gap_report(p, cfg.trajectory.separation()).map_err(pt.fail(None))?;
    Ok(vec![[pt.prefix(), report.to_row().to_vec()].concat()])
}

/// Rows of every per-point output for one sweep point, in `outputs` order.
fn run_point(cfg: &ScenarioConfig, pt: &Point, outputs: &[Output]) -> Result<Vec<Rows>, RunError> {
    let p = validate_params(pt.params).map_err(pt.fail(None))?;
    let modes = cfg
        .mode_sampling
        .as_ref()
        .map(|m| m.build(&p.spectral_density()))
        .transpose()
        .map_err(pt.fail(None))?;
    outputs
        .iter()
        .map(|o| match o {
            Output::Kernels => kernel_rows(cfg, pt, &p),
            Output::Overlap => overlap_rows(cfg, pt, &p, modes.as_ref()),
            Output::Influence => influence_rows(cfg, pt, &p),
            Output::Scales => scales_rows(cfg, pt, &p),
            Output::Verify => unreachable!("verify is not evaluated per point"),
        })
        .collect()
}

/// One table per requested output, in the order the outputs were listed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ResultTable>, RunError> {
    let per_point: Vec<Output> = cfg
        .outputs
        .iter()
        .copied()
        .filter(|o| *o != Output::Verify)
        .collect();
    let pts = points(cfg);
    let results: Vec<Vec<Rows>> = pts
        .par_iter()
        .map(|pt| run_point(cfg, pt, &per_point))
        .collect::<Result<_, _>>()?;

    let mut tables = Vec::with_capacity(cfg.outputs.len());
    for output in &cfg.outputs {
        let mut table = header(cfg, *output);
        if *output == Output::Verify {
            let report = verify::run_checks(cfg.seed);
            table = report.into_table(table)?;
        } else {
            let k = per_point
                .iter()
                .position(|o| o == output)
                .expect("listed above");
            for rows in &results {
                for row in &rows[k] {
                    table.push_row(row.clone())?;
                }
            }
        }
        tables.push(table);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const BASE: &str = r#"
[params]
units = "natural"
M = 1.0
Omega = 1.0
gamma = 0.1
Lambda = 20.0
T = 20.0

[trajectory]
x = [1.0, 0.3]
t = 2.0
"#;

    fn cfg(extra: &str) -> ScenarioConfig {
        parse_config(&format!("{extra}\n{BASE}")).unwrap()
    }

    #[test]
    fn scales_without_sweep_is_one_row() {
        let tables = run_scenario(&cfg("outputs = [\"scales\"]")).unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].rows().len(), 1);
        assert_eq!(tables[0].columns().len(), ScalesReport::CSV_HEADER.len());
    }

    #[test]
    fn overlap_on_time_grid() {
        let c = cfg("outputs = [\"overlap\"]").clone();
        let mut c = c;
        c.trajectory.times = (1..=100).map(|i| 0.02 * i as f64).collect();
        let tables = run_scenario(&c).unwrap();
        let t = &tables[0];
        assert_eq!(t.rows().len(), 100);
        assert_eq!(t.columns(), ["t", "Phi", "B_exact", "B_cl"]);
        let b = t.column("B_exact").unwrap();
        assert!(b.iter().all(|v| *v > 0.0 && *v <= 1.0));
        // Phi at t = 2 is the generic reference value
        let phi = t.column("Phi").unwrap();
        assert!((phi[99] - 0.026_780_205_664_713_34).abs() < 1e-12);
    }

    #[test]
    fn sweep_produces_one_row_per_value() {
        let text = "outputs = [\"scales\", \"influence\"]\n[sweep]\naxis = \"T\"\nvalues = [1.0, 2.0, 3.0, 4.0, 5.0]\n";
        let tables = run_scenario(&cfg(text)).unwrap();
        assert_eq!(tables.len(), 2);
        for t in &tables {
            assert_eq!(t.rows().len(), 5);
            assert_eq!(t.columns()[0], "T");
            assert_eq!(t.column("T").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        }
        let decoherence: Vec<f64> = tables[1].column("re_exponent").unwrap();
        assert!(decoherence.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn runs_are_byte_identical() {
        let text = "outputs = [\"overlap\", \"kernels\"]\n[sweep]\naxis = \"Lambda\"\nvalues = [5.0, 10.0, 20.0]\n";
        let c = cfg(text);
        let a: Vec<String> = run_scenario(&c)
            .unwrap()
            .iter()
            .map(|t| t.to_csv().unwrap())
            .collect();
        let b: Vec<String> = run_scenario(&c)
            .unwrap()
            .iter()
            .map(|t| t.to_csv().unwrap())
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn modes_add_a_column() {
        let text =
            "outputs = [\"overlap\"]\n[modes]\nomega_min = 0.01\nomega_max = 20.0\ncount = 64\n";
        let tables = run_scenario(&cfg(text)).unwrap();
        assert_eq!(tables[0].columns().last().unwrap(), "B_modes");
    }

    #[test]
    fn domain_errors_carry_coordinates() {
        let text = "outputs = [\"overlap\"]\n[sweep]\naxis = \"Omega\"\nvalues = [1.0, 1.5707963267948966]\n";
        let err = run_scenario(&cfg(text)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Omega=1.5707963267948966"), "{msg}");
        assert!(msg.contains("t=2"), "{msg}");
        assert!(matches!(
            err.domain_error(),
            Some(infogap::Error::ResonantBoundaryValue { .. })
        ));
    }

    #[test]
    fn metadata_carries_hash_and_version() {
        let c = cfg("outputs = [\"scales\"]");
        let t = &run_scenario(&c).unwrap()[0];
        assert_eq!(
            t.metadata_value("config_sha256"),
            Some(c.config_hash.as_str())
        );
        assert_eq!(t.metadata_value("version"), Some(TOOL_VERSION));
        assert_eq!(t.metadata_value("units"), Some("natural"));
    }
}
