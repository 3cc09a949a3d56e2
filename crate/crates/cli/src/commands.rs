use crate::output::{csv_bytes, destination, emit, json_bytes, RunConfig};
use crate::{exit, Cli, Command, Format, FormsTable, MembershipArg, SpaceArg};
use anyhow::{bail, Result};
use equidist::arith::Discriminant;
use equidist::fmt::f17;
use equidist::identities::{run_suite, IdentityCheck};
use equidist::lattice::{covering_radius, enumerate, linnik_min, linnik_scan, rotated_linnik_measure};
use equidist::modular::{FormClassEnsemble, Membership};
use equidist::sphere::{RandomSource, Space};
use equidist::transforms::shc_profile;
use equidist::variance::{brs_report, brs_report_discriminant, brs_report_random, regression_grid, write_reports_csv, VarianceReport};
use serde::Serialize;
use serde_json::json;
use std::io::Write;

/// Runs the parsed command and returns the exit status.
pub fn run(cli: &Cli) -> Result<u8> {
    let config = RunConfig::new(cli)?;
    let path = destination(cli);
    let mut status = exit::OK;
    let bytes = match &cli.command {
        Command::Enumerate(a) => {
            let set = enumerate(a.n)?;
            match cli.format {
                Format::Csv => {
                    let mut body = Vec::new();
                    set.write_csv(&mut body)?;
                    csv_bytes(&config, &body)?
                }
                Format::Json => {
                    let points: Vec<_> = set.points.iter().zip(&set.unit_points).map(|(p, u)| json!({ "x": p, "unit": u })).collect();
                    json_bytes(&config, &json!({ "n": a.n, "count": set.len(), "points": points }))?
                }
            }
        }
        Command::Forms(a) => {
            let ens = FormClassEnsemble::new(Discriminant::new(a.d)?)?;
            match cli.format {
                Format::Csv => {
                    let mut body = Vec::new();
                    match a.table {
                        FormsTable::Forms => ens.write_forms_csv(&mut body)?,
                        FormsTable::Heegner => {
                            if a.d > 0 {
                                bail!(equidist::Error::Domain(format!("Heegner points need D < 0, got {}", a.d)));
                            }
                            ens.write_heegner_csv(&mut body)?
                        }
                    }
                    csv_bytes(&config, &body)?
                }
                Format::Json => {
                    let heegner: Vec<[f64; 2]> = ens.heegner_points.iter().map(|z| [z.re, z.im]).collect();
                    json_bytes(
                        &config,
                        &json!({ "discriminant": a.d, "class_number": ens.forms.len(), "forms": ens.forms, "heegner_points": heegner }),
                    )?
                }
            }
        }
        Command::Geodesics(a) => {
            if a.d <= 0 {
                bail!(equidist::Error::Domain(format!("closed geodesics need D > 0, got {}", a.d)));
            }
            let ens = FormClassEnsemble::new(Discriminant::new(a.d)?)?;
            match cli.format {
                Format::Csv => {
                    let mut body = Vec::new();
                    ens.write_geodesics_csv(&mut body)?;
                    csv_bytes(&config, &body)?
                }
                Format::Json => {
                    let geos: Vec<_> = ens
                        .geodesics
                        .iter()
                        .map(|g| {
                            let mut v = json!({
                                "form": g.form,
                                "endpoints": [g.endpoints.0, g.endpoints.1],
                                "length": g.length,
                                "pell": g.pell,
                            });
                            if a.paths {
                                v["sample_path"] = json!(g.sample_path.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
                            }
                            v
                        })
                        .collect();
                    let total: f64 = ens.geodesics.iter().map(|g| g.length).sum();
                    json_bytes(&config, &json!({ "discriminant": a.d, "total_length": total, "geodesics": geos }))?
                }
            }
        }
        Command::Variance(a) => {
            let reports = variance_reports(cli, a)?;
            let mut csv = Vec::new();
            write_reports_csv(&reports, &mut csv)?;
            match cli.format {
                Format::Csv => csv_bytes(&config, &csv)?,
                Format::Json => {
                    // the aggregate table goes next to a JSON file
                    if let Some(p) = &path {
                        emit(Some(&p.with_extension("csv")), &csv_bytes(&config, &csv)?)?;
                    }
                    json_bytes(&config, &reports)?
                }
            }
        }
        Command::Linnik(a) => {
            let result = if let Some(n) = a.n {
                let min = linnik_min(n, None)?;
                let bound = (n as f64).powf(a.exponent);
                let measure = match a.psi {
                    Some(psi) => Some(rotated_linnik_measure(n, psi, a.samples, RandomSource::new(cli.seed, 0))?),
                    None => None,
                };
                json!({ "n": n, "min_x3": min, "bound": bound, "within_bound": min <= bound, "rotated_measure": measure })
            } else {
                let (Some(lo), Some(hi)) = (a.lo, a.hi) else {
                    bail!(equidist::Error::Domain("linnik needs --n or both --lo and --hi".into()));
                };
                eprintln!("linnik: scanning [{lo}, {hi}]");
                serde_json::to_value(linnik_scan(lo, hi, a.exponent)?)?
            };
            match cli.format {
                Format::Json => json_bytes(&config, &result)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    if a.n.is_some() {
                        writeln!(body, "n,min_x3,bound")?;
                        writeln!(body, "{},{},{}", result["n"], result["min_x3"], f17(result["bound"].as_f64().unwrap_or(f64::NAN)))?;
                    } else {
                        writeln!(body, "n,min_x3,bound")?;
                        for v in result["violations"].as_array().into_iter().flatten() {
                            writeln!(body, "{},{},{}", v["n"], v["min_x3"], f17(v["bound"].as_f64().unwrap_or(f64::NAN)))?;
                        }
                    }
                    csv_bytes(&config, &body)?
                }
            }
        }
        Command::Covering(a) => {
            let c = covering_radius(a.n, a.grid)?;
            match cli.format {
                Format::Json => json_bytes(&config, &c)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    writeln!(body, "n,grid,estimate,lower,upper")?;
                    writeln!(body, "{},{},{},{},{}", c.n, c.grid_resolution, f17(c.estimate), f17(c.lower), f17(c.upper))?;
                    csv_bytes(&config, &body)?
                }
            }
        }
        Command::Transforms(a) => {
            let space = match a.space {
                SpaceArg::Sphere => Space::Sphere,
                SpaceArg::Hyperbolic => Space::Hyperbolic,
            };
            let grid: Vec<f64> = if a.freq.is_empty() {
                if a.steps < 2 {
                    bail!(equidist::Error::Domain("--steps must be at least 2".into()));
                }
                (0..a.steps)
                    .map(|i| {
                        let f = a.fmax * i as f64 / (a.steps - 1) as f64;
                        if space == Space::Sphere {
                            f.round()
                        } else {
                            f
                        }
                    })
                    .collect()
            } else {
                a.freq.clone()
            };
            let profile = shc_profile(space, a.r, a.big_r, &grid)?;
            match cli.format {
                Format::Json => json_bytes(&config, &profile)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    profile.write_csv(&mut body)?;
                    csv_bytes(&config, &body)?
                }
            }
        }
        Command::Check(a) => {
            let checks = run_suite(&a.suite)?;
            let failed = checks.iter().filter(|c| !c.pass).count();
            eprintln!("check {}: {} cases, {} failed", a.suite, checks.len(), failed);
            if failed > 0 {
                status = exit::IDENTITY;
            }
            match cli.format {
                Format::Json => json_bytes(&config, &CheckSummary { all_pass: failed == 0, failed, checks: &checks })?,
                Format::Csv => {
                    let mut body = Vec::new();
                    writeln!(body, "name,lhs_re,lhs_im,rhs_re,rhs_im,abs_diff,tolerance,pass")?;
                    for c in &checks {
                        writeln!(
                            body,
                            "{},{},{},{},{},{},{},{}",
                            c.name,
                            f17(c.lhs.re),
                            f17(c.lhs.im),
                            f17(c.rhs.re),
                            f17(c.rhs.im),
                            f17(c.abs_diff),
                            f17(c.tolerance),
                            c.pass
                        )?;
                    }
                    csv_bytes(&config, &body)?
                }
            }
        }
    };
    emit(path.as_deref(), &bytes)?;
    Ok(status)
}

#[derive(Serialize)]
struct CheckSummary<'a> {
    all_pass: bool,
    failed: usize,
    checks: &'a [IdentityCheck],
}

fn variance_reports(cli: &Cli, a: &crate::VarianceArgs) -> Result<Vec<VarianceReport>> {
    let mut jobs: Vec<(Job, f64, f64)> = Vec::new();
    if a.grid {
        jobs.extend(regression_grid().into_iter().map(|(n, r, big_r)| (Job::Sphere(n), r, big_r)));
    }
    let any_single = !(a.n.is_empty() && a.d.is_empty() && a.random.is_empty());
    if any_single {
        let (Some(r), Some(big_r)) = (a.r, a.big_r) else {
            bail!(equidist::Error::Domain("variance needs --r and --R".into()));
        };
        jobs.extend(a.n.iter().map(|&n| (Job::Sphere(n), r, big_r)));
        jobs.extend(a.d.iter().map(|&d| (Job::Disc(d), r, big_r)));
        jobs.extend(a.random.iter().map(|&m| (Job::Random(m), r, big_r)));
    }
    if jobs.is_empty() {
        bail!(equidist::Error::Domain("variance needs --n, --d, --random or --grid".into()));
    }
    let membership = match a.membership {
        MembershipArg::Kernel => Membership::Kernel,
        MembershipArg::Quotient => Membership::Quotient,
    };
    let total = jobs.len();
    let mut out = Vec::with_capacity(total);
    for (i, (job, r, big_r)) in jobs.into_iter().enumerate() {
        // one stream per job keeps reports independent of the job list
        let src = RandomSource::new(cli.seed, job.stream());
        eprintln!("variance [{}/{}]: {:?} r={} R={}", i + 1, total, job, r, big_r);
        let rep = match job {
            Job::Sphere(n) => brs_report(n, r, big_r, a.samples, a.lmax, src)?,
            Job::Disc(d) => brs_report_discriminant(d, r, big_r, a.samples, src, membership)?,
            Job::Random(m) => brs_report_random(m, r, big_r, a.samples, src)?,
        };
        out.push(rep);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Sphere(u64),
    Disc(i64),
    Random(u64),
}

impl Job {
    fn stream(self) -> u64 {
        match self {
            Job::Sphere(n) => n,
            Job::Disc(d) => (1 << 62) | (d as u64 & ((1 << 62) - 1)),
            Job::Random(m) => (1 << 63) | m,
        }
    }
}
