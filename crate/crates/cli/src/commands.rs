//! Subcommand implementations.

use crate::config::RunConfig;
use crate::output::{header, header_toml, write_atomic};
use bosegas_core::asymptotics;
use bosegas_core::fock;
use bosegas_core::scattering::{self, ScatteringSolution};
use bosegas_core::sweep::{self, SweepOptions};
use bosegas_core::{Error, Result};
use std::path::Path;

fn solve(cfg: &RunConfig) -> Result<ScatteringSolution> {
    let pot = cfg.build_potential()?;
    let r_max = 1.25 * pot.r_support();
    let tol = cfg.tolerance("route_agreement", 1e-6);
    scattering::solve_radial(&pot, r_max, tol)
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        y0_base: cfg.lattice.y0.unwrap_or(0.8),
        y_split: cfg.lattice.y_split.unwrap_or(400.0),
        p_cut: cfg.lattice.p_cut,
        uv_order: 16,
    }
}

fn wants(cfg: &RunConfig, format: &str) -> bool {
    match &cfg.outputs.formats {
        Some(list) => list.iter().any(|f| f == format),
        None => format == "csv",
    }
}

/// `scatter`: solve the two-body problem by both routes, write the table.
pub fn cmd_scatter(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let pot = cfg.build_potential()?;
    let sol = solve(cfg)?;
    let born = scattering::born_series(&pot, None, cfg.physics.born_order.unwrap_or(3))?;
    let mut text = header(&cfg.config_sha256);
    text.push_str(&sol.to_table(400));
    let rel = if sol.a != 0.0 {
        ((sol.a - born.a) / sol.a).abs()
    } else {
        (sol.a - born.a).abs()
    };
    text.push_str(&format!("# born_a = {:.16e}\n# born_method = {}\n", born.a, born.method));
    text.push_str(&format!("# route_gap_rel = {rel:.6e}\n"));
    write_atomic(&out_dir.join("scattering.csv"), &text)?;
    println!(
        "scatter: a = {:.10e}, h = {:.8e}, delta = {:.4}, born gap = {rel:.3e}",
        sol.a, sol.h, sol.delta
    );
    Ok(())
}

const ENERGY_COLUMNS: &str = "rho,l,n,n0,e_m,omega2,omega4,e_total,per_particle,kinetic,hartree,mean_field,pairing,pair_cross,exchange,reduced_total,reduced_cross_term,depletion_fraction";

fn energy_row(pt: &sweep::EnergyPoint) -> String {
    let f = &pt.full;
    let c = &f.channels;
    format!(
        "{:.10e},{:.10e},{:.10e},{:.10e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        pt.rho,
        pt.l,
        f.n,
        f.n0,
        f.e_m,
        f.omega2,
        f.omega4,
        f.e_total,
        f.per_particle,
        c.kinetic,
        c.hartree,
        c.mean_field,
        c.pairing,
        c.pair_cross,
        c.exchange,
        pt.reduced.total,
        pt.reduced.cross_term,
        pt.depletion_fraction
    )
}

/// `energy`: one row per (ρ, L) plus an extrapolated row per density.
pub fn cmd_energy(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let scat = solve(cfg)?;
    let opts = sweep_options(cfg);
    let extrapolate = cfg.lattice.extrapolate.unwrap_or(true);

    let mut csv = header(&cfg.config_sha256);
    csv.push_str(ENERGY_COLUMNS);
    csv.push('\n');
    let mut doc = header_toml(&cfg.config_sha256);

    for rho in cfg.rhos() {
        let l0 = match cfg.lattice.l {
            Some(l) => l,
            None => sweep::base_box_side(&scat, rho, &opts)?,
        };
        if extrapolate {
            let ex = match cfg.lattice.l {
                Some(l) => sweep::extrapolated_point_at(&scat, rho, l, &opts)?,
                None => sweep::extrapolated_point(&scat, rho, &opts)?,
            };
            for pt in &ex.points {
                csv.push_str(&energy_row(pt));
                csv.push('\n');
            }
            csv.push_str(&format!(
                "{:.10e},inf,,,,,,,{:.16e},,,,,,,,,{:.16e}\n",
                rho, ex.e_per_particle, ex.depletion
            ));
            doc.push_str(&format!(
                "[[point]]\nrho = {:e}\nper_particle_extrapolated = {:.16e}\nper_particle_err = {:.3e}\ndepletion = {:.10e}\n\n",
                rho, ex.e_per_particle, ex.e_per_particle_err, ex.depletion
            ));
        } else {
            let pt = sweep::energy_point(&scat, rho, l0, &opts)?;
            csv.push_str(&energy_row(&pt));
            csv.push('\n');
            doc.push_str(&format!(
                "[[point]]\nrho = {:e}\nl = {:e}\nper_particle = {:.16e}\n\n",
                rho, l0, pt.full.per_particle
            ));
        }
    }
    if wants(cfg, "csv") {
        write_atomic(&out_dir.join("energy.csv"), &csv)?;
    }
    if wants(cfg, "doc") {
        write_atomic(&out_dir.join("energy.toml"), &doc)?;
    }
    println!("energy: wrote {} densities", cfg.rhos().len());
    Ok(())
}

/// `lhy-check`: ρ sweep, κ(ρ→0) extraction, verdict against √(32/π)Φ(h).
pub fn cmd_lhy_check(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let scat = solve(cfg)?;
    let opts = sweep_options(cfg);
    let rhos = cfg.rhos();
    let run = sweep::lhy_run(&scat, &rhos, &opts)?;

    let mut csv = header(&cfg.config_sha256);
    csv.push_str("rho,e_per_particle,e_per_particle_err,kappa,depletion,residual_ratio\n");
    for (p, (k, r)) in run
        .points
        .iter()
        .zip(run.kappas.iter().zip(&run.residual_ratios))
    {
        csv.push_str(&format!(
            "{:.10e},{:.16e},{:.3e},{:.12e},{:.10e},{:.6e}\n",
            p.rho, p.e_per_particle, p.e_per_particle_err, k, p.depletion, r
        ));
    }

    let lo = cfg.tolerance("kappa_ratio_low", 0.95);
    let hi = cfg.tolerance("kappa_ratio_high", 1.05);
    let pass = run.ratio >= lo && run.ratio <= hi;
    let s_lam = asymptotics::s_lambda(scat.h)?;
    let mut verdict = header_toml(&cfg.config_sha256);
    verdict.push_str(&format!(
        "a = {:.16e}\nh = {:.16e}\nkappa0 = {:.12e}\npredicted = {:.12e}\nratio = {:.8}\ns_lambda = {:.10}\npass = {pass}\nratio_window = [{lo}, {hi}]\n",
        scat.a, scat.h, run.kappa0, run.predicted, run.ratio, s_lam
    ));

    if wants(cfg, "csv") {
        write_atomic(&out_dir.join("lhy.csv"), &csv)?;
    }
    write_atomic(&out_dir.join("lhy_verdict.toml"), &verdict)?;
    println!(
        "lhy-check: kappa0 = {:.6}, predicted = {:.6}, ratio = {:.4} -> {}",
        run.kappa0,
        run.predicted,
        run.ratio,
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        return Err(Error::Verification(format!(
            "second-order coefficient ratio {:.4} outside [{lo}, {hi}]",
            run.ratio
        )));
    }
    Ok(())
}

/// `oracle`: brute-force Fock checks; exit 1 on any formula mismatch.
pub fn cmd_oracle(
    cfg: &RunConfig,
    out_dir: &Path,
    seed: u64,
    inject_fault: Option<&str>,
) -> Result<()> {
    let pot = cfg.build_potential()?;
    let kernel = pot.kernel(12.0 * (1.0 / pot.width()).max(1.0))?;
    let oc = &cfg.oracle;
    let report = fock::run_oracle_suite(
        &kernel,
        oc.box_side.unwrap_or(2.0 * std::f64::consts::PI),
        oc.draws.unwrap_or(20),
        seed,
        oc.c_max.unwrap_or(0.5),
        oc.sqrt_n0_max.unwrap_or(1.0),
        oc.n_max_pairs.unwrap_or(40),
        oc.n_max.unwrap_or(12),
        inject_fault,
    )?;

    let mut doc = header_toml(&cfg.config_sha256);
    for c in &report.checks {
        doc.push_str(&format!(
            "[[check]]\nname = \"{}\"\nbrute = {:.16e}\nanalytic = {:.16e}\ntail_bound = {:.3e}\ntolerance = {:.3e}\npass = {}\n\n",
            c.name, c.brute, c.analytic, c.tail_bound, c.tolerance, c.pass
        ));
    }
    write_atomic(&out_dir.join("oracle_report.toml"), &doc)?;

    if wants(cfg, "csv") {
        let mut csv = header(&cfg.config_sha256);
        csv.push_str("name,brute,analytic,tail_bound,tolerance,pass\n");
        for c in &report.checks {
            csv.push_str(&format!(
                "{},{:.16e},{:.16e},{:.3e},{:.3e},{}\n",
                c.name, c.brute, c.analytic, c.tail_bound, c.tolerance, c.pass
            ));
        }
        write_atomic(&out_dir.join("oracle_report.csv"), &csv)?;
    }

    let failed = report.failed();
    println!(
        "oracle: {} checks, {} failed",
        report.checks.len(),
        failed.len()
    );
    if !failed.is_empty() {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        return Err(Error::Verification(format!(
            "oracle mismatches: {}",
            names.join(", ")
        )));
    }
    Ok(())
}

/// `phi-table`: CSV of (h, Φ(h), S_λ) over an h-grid "start:stop:step".
pub fn cmd_phi_table(
    grid: &str,
    out_dir: &Path,
    config_sha256: &str,
) -> Result<()> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "h grid must be start:stop:step, got '{grid}'"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config("bad grid start".into()))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config("bad grid stop".into()))?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|_| Error::Config("bad grid step".into()))?;
    if start < 0.0 || stop < start || step <= 0.0 {
        return Err(Error::Config("need 0 <= start <= stop and step > 0".into()));
    }
    let mut csv = header(config_sha256);
    csv.push_str("h,phi,quadrature_error,s_lambda\n");
    let mut h = start;
    while h <= stop + 1e-12 {
        let p = asymptotics::phi(h)?;
        let s = asymptotics::s_lambda(h)?;
        csv.push_str(&format!(
            "{:.10e},{:.16e},{:.3e},{:.16e}\n",
            h, p.value, p.quadrature_error, s
        ));
        h += step;
    }
    write_atomic(&out_dir.join("phi_table.csv"), &csv)?;
    println!("phi-table: wrote grid {grid}");
    Ok(())
}
