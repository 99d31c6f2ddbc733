use geoguide::grassmann::{q_matrix_trapezoid, reconciled_flow};
use geoguide::io::write_emb1;
use geoguide::{evaluate_flow, extract_subspace, q_matrix, Error};

use crate::args::FlowArgs;
use crate::config::{create_dir, read_matrix, write_text};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct FlowReport {
    pub angles: Vec<f64>,
    /// Subspace dimension after rank capping and reconciliation.
    pub sub_dim: usize,
    pub min_eigenvalue: f64,
    /// Frobenius distance between the closed-form Q and the trapezoid rule.
    pub quadrature_residual: f64,
}

pub fn cmd_flow(a: &FlowArgs) -> CliResult<FlowReport> {
    if let Some(nu) = a.nu.iter().find(|nu| !(0.0..=1.0).contains(*nu)) {
        return Err(CliError::Usage(format!("--nu value {nu} outside [0, 1]")));
    }
    if a.subspace_dim == 0 || a.nodes == 0 {
        return Err(CliError::Usage("--subspace-dim and --nodes must be positive".into()));
    }
    let src = read_matrix(&a.src)?;
    let dst = read_matrix(&a.dst)?;
    if src.cols() != dst.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} has {} columns, {} has {}",
            a.src.display(),
            src.cols(),
            a.dst.display(),
            dst.cols()
        ))
        .into());
    }
    let d = src.cols();
    let k = a.subspace_dim.min(d);
    let flow = reconciled_flow(&extract_subspace(&src, k)?, &extract_subspace(&dst, k)?)?;
    let q = q_matrix(&flow);
    let trap = q_matrix_trapezoid(&flow, a.nodes + 1)?;
    let quadrature_residual = q.q().sub(&trap)?.frobenius_norm();
    let (r_cos, r_sin) = flow.residuals();

    create_dir(&a.out)?;
    let mut angles = String::from("index,theta\n");
    for (i, t) in flow.angles().iter().enumerate() {
        angles.push_str(&format!("{i},{t}\n"));
    }
    write_text(&a.out.join("angles.csv"), &angles)?;
    for nu in &a.nu {
        let pi = evaluate_flow(&flow, *nu)?;
        write_emb1(a.out.join(format!("pi_nu{nu}.emb")), pi.basis())?;
    }
    write_emb1(a.out.join("q.emb"), q.q())?;
    let report = FlowReport {
        angles: flow.angles().to_vec(),
        sub_dim: flow.sub_dim(),
        min_eigenvalue: q.min_eigenvalue(),
        quadrature_residual,
    };
    let diag = format!(
        "key,value\nambient_dim,{d}\nrequested_dim,{}\nsub_dim,{}\nmin_eigenvalue,{}\nquadrature_residual,{}\nquadrature_nodes,{}\nresidual_cos,{r_cos}\nresidual_sin,{r_sin}\n",
        a.subspace_dim, report.sub_dim, report.min_eigenvalue, report.quadrature_residual, a.nodes
    );
    write_text(&a.out.join("diagnostics.csv"), &diag)?;
    let nus: Vec<String> = a.nu.iter().map(f64::to_string).collect();
    let kv = format!(
        "src={}\ndst={}\nsubspace_dim={}\nnu={}\nnodes={}\n",
        a.src.display(),
        a.dst.display(),
        a.subspace_dim,
        nus.join(","),
        a.nodes
    );
    write_text(&a.out.join("config.kv"), &kv)?;
    if report.sub_dim < a.subspace_dim {
        eprintln!("note: subspace dimension {} reduced to {} by rank or ambient size", a.subspace_dim, report.sub_dim);
    }
    println!(
        "flow k={} max_angle={:.6} min_eigenvalue={:e} quadrature_residual={:e}",
        report.sub_dim,
        report.angles.last().copied().unwrap_or(0.0),
        report.min_eigenvalue,
        report.quadrature_residual
    );
    Ok(report)
}
