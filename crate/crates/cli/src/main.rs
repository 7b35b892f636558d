//! Configuration-driven experiment runner: builds fixed-point states, runs
//! the measurement-assisted gauging protocol, verifies parent Hamiltonians,
//! and emits symmetry-fractionalization and defect-fusion reports.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use tqdsim::cohomology::{
    builtin_cocycle, solve_epsilon_on, subgroup_embedding, verify_cocycle_condition, Cocycle3,
    CocycleSpec,
};
use tqdsim::gauging::{run_gauging, verify_outcome_constraint, GaugingPlan};
use tqdsim::groups::{build_group, Elt, GroupSpec, Subgroup};
use tqdsim::hamiltonians::{set_terms, tqd_terms, verify_eigenstate};
use tqdsim::lattice::TriLattice;
use tqdsim::qstate::{build_spt_state, DEFAULT_TERM_BUDGET};
use tqdsim::series::{GroupRef, NormalSeries, SeriesStrategy};
use tqdsim::setprobe::{
    anyon_table, dihedral_halved_theory, fusion_decompose, sfc_setup, sfc_table,
};

#[derive(Parser)]
#[command(
    name = "tqdsim",
    version,
    about = "twisted quantum double and SET toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output path for the report (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Report format.
    #[arg(long, global = true, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct TheoryArgs {
    /// Group descriptor: Z4, Z2xZ2, Z2xZ2xZ2, S3, D4, Q8, ...
    #[arg(long)]
    group: String,
    /// Cocycle parameters, e.g. "p=1", "p1=1,p2=0,p3=1", "k1=1,t3_1_2_3=1".
    #[arg(long, default_value = "")]
    cocycle: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the measurement-assisted gauging protocol and verify the result.
    Gauge {
        #[command(flatten)]
        theory: TheoryArgs,
        /// Torus size, e.g. 2x2 or 3x3.
        #[arg(long, default_value = "2x2")]
        lattice: String,
        /// Decomposition strategy.
        #[arg(long, default_value = "quotient-chain")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with forced outcomes: [[ [p..] per vertex ] per level].
        #[arg(long)]
        force_outcomes: Option<std::path::PathBuf>,
    },
    /// Build the gauged state directly and verify the parent Hamiltonians.
    Verify {
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long, default_value = "2x2")]
        lattice: String,
        /// Gauge only this normal subgroup (comma-separated element indices)
        /// and verify the SET Hamiltonian instead.
        #[arg(long)]
        normal: Option<String>,
    },
    /// Symmetry-fractionalization table of the SET from gauging a subgroup.
    Sfc {
        #[command(flatten)]
        theory: TheoryArgs,
        /// Normal subgroup to gauge (comma-separated element indices);
        /// defaults to the first step of the derived chain.
        #[arg(long)]
        normal: Option<String>,
    },
    /// Defect fusion rules from the tensor-squared open ribbon matrix.
    Fusion {
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long)]
        normal: Option<String>,
        /// Defect flux sector (element index); defaults to the smallest
        /// nontrivial section representative.
        #[arg(long)]
        flux: Option<u8>,
    },
    /// Exhaustive cocycle-condition check.
    CocycleCheck {
        #[command(flatten)]
        theory: TheoryArgs,
        /// Check every builtin family and parameter tuple instead.
        #[arg(long)]
        all: bool,
    },
    /// Mutual braiding table of the anyons of the gauged subgroup double.
    Braiding {
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long)]
        normal: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum StrategyArg {
    QuotientChain,
    SequentialNormal,
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct Report {
    version: String,
    config: BTreeMap<String, String>,
    results: Vec<CheckResult>,
    elapsed_ms: u128,
}

impl Report {
    fn new(config: BTreeMap<String, String>) -> Self {
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            results: Vec::new(),
            elapsed_ms: 0,
        }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.results.push(CheckResult {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Text => {
                let width = self
                    .results
                    .iter()
                    .map(|r| r.name.len())
                    .max()
                    .unwrap_or(0)
                    .max(5);
                let mut out = String::new();
                for (k, v) in &self.config {
                    out.push_str(&format!("# {k} = {v}\n"));
                }
                for r in &self.results {
                    out.push_str(&format!(
                        "{:<width$}  {}  {}\n",
                        r.name,
                        if r.pass { "pass" } else { "FAIL" },
                        r.detail,
                    ));
                }
                out.push_str(&format!(
                    "{} checks, {} failed, {} ms\n",
                    self.results.len(),
                    self.results.iter().filter(|r| !r.pass).count(),
                    self.elapsed_ms
                ));
                out
            }
        }
    }
}

fn parse_cocycle(group_spec: &GroupSpec, text: &str) -> Result<CocycleSpec, String> {
    let mut kv = BTreeMap::new();
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("bad cocycle parameter {part:?}"))?;
        let value: i64 = v
            .trim()
            .parse()
            .map_err(|_| format!("bad value in {part:?}"))?;
        kv.insert(k.trim().to_string(), value);
    }
    let check_keys = |allowed: &[&str], kv: &BTreeMap<String, i64>| -> Result<(), String> {
        for k in kv.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(format!("unknown cocycle parameter {k}"));
            }
        }
        Ok(())
    };
    match group_spec {
        GroupSpec::Quaternion => {
            check_keys(&["p"], &kv)?;
            Ok(CocycleSpec::Quaternion {
                p: *kv.get("p").unwrap_or(&0),
            })
        }
        GroupSpec::Dihedral(_) => {
            check_keys(&["p1", "p2", "p3"], &kv)?;
            Ok(CocycleSpec::Dihedral {
                p1: *kv.get("p1").unwrap_or(&0),
                p2: *kv.get("p2").unwrap_or(&0),
                p3: *kv.get("p3").unwrap_or(&0),
            })
        }
        GroupSpec::Cyclic(factors) if factors.len() == 1 => {
            check_keys(&["p"], &kv)?;
            Ok(CocycleSpec::CyclicTypeOne {
                p: *kv.get("p").unwrap_or(&0),
            })
        }
        GroupSpec::Cyclic(factors) => {
            let mut type1 = vec![0i64; factors.len()];
            let mut type2 = BTreeMap::new();
            let mut type3 = BTreeMap::new();
            for (k, v) in &kv {
                if let Some(i) = k.strip_prefix('k').and_then(|s| s.parse::<usize>().ok()) {
                    if i == 0 || i > factors.len() {
                        return Err(format!("factor index out of range in {k}"));
                    }
                    type1[i - 1] = *v;
                } else if let Some(rest) = k.strip_prefix("t1_") {
                    let i: usize = rest.parse().map_err(|_| format!("bad key {k}"))?;
                    if i == 0 || i > factors.len() {
                        return Err(format!("factor index out of range in {k}"));
                    }
                    type1[i - 1] = *v;
                } else if let Some(rest) = k.strip_prefix("t2_") {
                    type2.insert(rest.to_string(), *v);
                } else if let Some(rest) = k.strip_prefix("t3_") {
                    type3.insert(rest.to_string(), *v);
                } else {
                    return Err(format!("unknown cocycle parameter {k}"));
                }
            }
            Ok(CocycleSpec::CyclicProduct {
                type1,
                type2,
                type3,
            })
        }
    }
}

fn parse_lattice(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once('x')
        .ok_or_else(|| format!("bad lattice {text:?}"))?;
    Ok((
        a.parse().map_err(|_| format!("bad lattice {text:?}"))?,
        b.parse().map_err(|_| format!("bad lattice {text:?}"))?,
    ))
}

fn parse_members(group: &GroupRef, text: &str) -> Result<Subgroup, String> {
    let members: Result<Vec<Elt>, String> = text
        .split(',')
        .map(|s| {
            let i: u8 = s
                .trim()
                .parse()
                .map_err(|_| format!("bad element index {s:?}"))?;
            if (i as usize) < group.order() {
                Ok(Elt(i))
            } else {
                Err(format!("element index {i} out of range"))
            }
        })
        .collect();
    let info = group
        .subgroup_analysis(&members?)
        .map_err(|e| e.to_string())?;
    if !info.is_normal {
        return Err("subgroup is not normal".to_string());
    }
    Ok(info.subgroup)
}

struct TheoryContext {
    group: GroupRef,
    omega: Cocycle3,
    config: BTreeMap<String, String>,
}

fn build_theory(args: &TheoryArgs) -> Result<TheoryContext, String> {
    let spec = GroupSpec::parse(&args.group).map_err(|e| e.to_string())?;
    let group: GroupRef = Arc::new(build_group(&spec).map_err(|e| e.to_string())?);
    let cocycle_spec = parse_cocycle(&spec, &args.cocycle)?;
    let omega = builtin_cocycle(&group, &cocycle_spec).map_err(|e| e.to_string())?;
    let mut config = BTreeMap::new();
    config.insert("group".to_string(), args.group.clone());
    config.insert("cocycle".to_string(), args.cocycle.clone());
    Ok(TheoryContext {
        group,
        omega,
        config,
    })
}

fn default_normal(group: &GroupRef) -> Result<Subgroup, String> {
    let series = NormalSeries::derive(group.clone(), SeriesStrategy::QuotientChain)
        .map_err(|e| e.to_string())?;
    Ok(series.levels[0].subgroup.clone())
}

fn run() -> Result<(Report, Format, Option<std::path::PathBuf>), String> {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut report = match &cli.command {
        Command::Gauge {
            theory,
            lattice,
            strategy,
            seed,
            force_outcomes,
        } => {
            let ctx = build_theory(theory)?;
            let (lx, ly) = parse_lattice(lattice)?;
            let lat = Arc::new(TriLattice::torus(lx, ly).map_err(|e| e.to_string())?);
            let strat = match strategy {
                StrategyArg::QuotientChain => SeriesStrategy::QuotientChain,
                StrategyArg::SequentialNormal => SeriesStrategy::SequentialNormal,
            };
            let series =
                NormalSeries::derive(ctx.group.clone(), strat).map_err(|e| e.to_string())?;
            let forced = match force_outcomes {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
                    Some(serde_json::from_str(&text).map_err(|e| e.to_string())?)
                }
                None => None,
            };
            let mut config = ctx.config.clone();
            config.insert("lattice".into(), format!("{lx}x{ly}"));
            config.insert("strategy".into(), format!("{strategy:?}"));
            config.insert("seed".into(), seed.to_string());
            let mut report = Report::new(config);
            let spt = build_spt_state(&ctx.omega, lat.clone(), DEFAULT_TERM_BUDGET)
                .map_err(|e| e.to_string())?;
            let plan = GaugingPlan {
                series,
                lattice: lat.clone(),
                omega: ctx.omega.clone(),
                seed: *seed,
                forced,
            };
            let (state, trace) = run_gauging(&spt, &plan).map_err(|e| e.to_string())?;
            for step in &trace.steps {
                report.push(
                    format!("outcome constraint level {}", step.level),
                    verify_outcome_constraint(&step.record, &plan.series),
                    format!("{} corrections", step.corrections.len()),
                );
            }
            let family = tqd_terms(&ctx.omega, &lat);
            let v = verify_eigenstate(&state, &family, 1e-9);
            let worst = v.checks.iter().map(|c| c.deviation).fold(0.0f64, f64::max);
            report.push(
                "eigenstate",
                v.all_pass,
                format!("{} terms, max deviation {:.2e}", v.checks.len(), worst),
            );
            report
        }
        Command::Verify {
            theory,
            lattice,
            normal,
        } => {
            let ctx = build_theory(theory)?;
            let (lx, ly) = parse_lattice(lattice)?;
            let lat = Arc::new(TriLattice::torus(lx, ly).map_err(|e| e.to_string())?);
            let mut config = ctx.config.clone();
            config.insert("lattice".into(), format!("{lx}x{ly}"));
            let mut report = Report::new(config);
            let spt = build_spt_state(&ctx.omega, lat.clone(), DEFAULT_TERM_BUDGET)
                .map_err(|e| e.to_string())?;
            let v = match normal {
                None => {
                    let gauged = spt.apply_gauging_map().map_err(|e| e.to_string())?;
                    verify_eigenstate(&gauged, &tqd_terms(&ctx.omega, &lat), 1e-9)
                }
                Some(members) => {
                    let sub = parse_members(&ctx.group, members)?;
                    let qdata = Arc::new(
                        ctx.group
                            .quotient_with_section(&sub)
                            .map_err(|e| e.to_string())?,
                    );
                    let set_state = spt
                        .apply_partial_gauging_map(&qdata)
                        .map_err(|e| e.to_string())?;
                    verify_eigenstate(&set_state, &set_terms(&ctx.omega, qdata, &lat), 1e-9)
                }
            };
            for check in &v.checks {
                report.push(
                    format!("{:?}", check.term),
                    check.pass,
                    format!("deviation {:.2e}", check.deviation),
                );
            }
            report
        }
        Command::Sfc { theory, normal } => {
            let ctx = build_theory(theory)?;
            let sub = match normal {
                Some(m) => parse_members(&ctx.group, m)?,
                None => default_normal(&ctx.group)?,
            };
            let mut config = ctx.config.clone();
            config.insert("normal".into(), sub.describe());
            let mut report = Report::new(config);
            let emb = subgroup_embedding(&ctx.group, &sub);
            let nu = ctx.omega.restrict(&emb);
            let theory_table = anyon_table(&nu, &emb, None).map_err(|e| e.to_string())?;
            let qdata = ctx
                .group
                .quotient_with_section(&sub)
                .map_err(|e| e.to_string())?;
            let setup = sfc_setup(&ctx.omega, &qdata, theory_table).map_err(|e| e.to_string())?;
            let table = sfc_table(&setup).map_err(|e| e.to_string())?;
            for cell in &table.cells {
                report.push(
                    format!("w(q{}, q{})", cell.q1, cell.q2),
                    true,
                    format!("0_x x 0_x = {}", cell.label),
                );
            }
            report.push("w cocycle identity", table.cocycle_ok, "fusion-level check");
            report
        }
        Command::Fusion {
            theory,
            normal,
            flux,
        } => {
            let ctx = build_theory(theory)?;
            let sub = match normal {
                Some(m) => parse_members(&ctx.group, m)?,
                None => default_normal(&ctx.group)?,
            };
            let qdata = ctx
                .group
                .quotient_with_section(&sub)
                .map_err(|e| e.to_string())?;
            let x = match flux {
                Some(i) => Elt(*i),
                None => *qdata
                    .section
                    .iter()
                    .find(|&&q| q != Elt(0))
                    .ok_or("no nontrivial symmetry sector")?,
            };
            let mut config = ctx.config.clone();
            config.insert("normal".into(), sub.describe());
            config.insert("flux".into(), format!("{}", x.0));
            let mut report = Report::new(config);
            let emb = subgroup_embedding(&ctx.group, &sub);
            let theory_table = match dihedral_halved_theory(&ctx.omega, &emb) {
                Ok(t) if sub.order() == 4 => t,
                _ => {
                    let nu = ctx.omega.restrict(&emb);
                    anyon_table(&nu, &emb, None).map_err(|e| e.to_string())?
                }
            };
            // coset representatives for the flux conjugacy class
            let class = ctx.group.conjugacy_class(x);
            let mut b_reps = Vec::new();
            for &c in &class {
                let b = ctx
                    .group
                    .elements()
                    .find(|&b| ctx.group.conj(b, x) == c)
                    .expect("class element is a conjugate");
                b_reps.push(b);
            }
            let mut flux_set = class.clone();
            for &a in &class {
                for &b in &class {
                    let p = ctx.group.mul(a, b);
                    if !flux_set.contains(&p) {
                        flux_set.push(p);
                    }
                }
            }
            let eps = solve_epsilon_on(&ctx.omega, &flux_set, &sub)
                .map_err(|e| e.to_string())?
                .canonical();
            let out = fusion_decompose(&ctx.omega, &qdata, &theory_table, x, &b_reps, &eps, 1e-9)
                .map_err(|e| e.to_string())?;
            report.push(
                "defect fusion",
                true,
                format!(
                    "0_x x 0_x = {}{}",
                    out.labels.join(" + "),
                    if out.conjectured_operator {
                        "  (conjectured operator form)"
                    } else {
                        ""
                    }
                ),
            );
            report
        }
        Command::CocycleCheck { theory, all } => {
            if *all {
                let mut report = Report::new(BTreeMap::new());
                for (name, gname, spec) in builtin_sweep() {
                    let gspec = GroupSpec::parse(&gname).expect("sweep names parse");
                    let group: GroupRef = Arc::new(build_group(&gspec).map_err(|e| e.to_string())?);
                    let omega = builtin_cocycle(&group, &spec).map_err(|e| e.to_string())?;
                    report.push(name, verify_cocycle_condition(&omega), "exhaustive");
                }
                report
            } else {
                let ctx = build_theory(theory)?;
                let mut report = Report::new(ctx.config.clone());
                report.push(
                    "cocycle condition",
                    verify_cocycle_condition(&ctx.omega),
                    "exhaustive",
                );
                report
            }
        }
        Command::Braiding { theory, normal } => {
            let ctx = build_theory(theory)?;
            let sub = match normal {
                Some(m) => parse_members(&ctx.group, m)?,
                None => default_normal(&ctx.group)?,
            };
            let mut config = ctx.config.clone();
            config.insert("normal".into(), sub.describe());
            let mut report = Report::new(config);
            let emb = subgroup_embedding(&ctx.group, &sub);
            let theory_table = match dihedral_halved_theory(&ctx.omega, &emb) {
                Ok(t) if sub.order() == 4 => t,
                _ => {
                    let nu = ctx.omega.restrict(&emb);
                    anyon_table(&nu, &emb, None).map_err(|e| e.to_string())?
                }
            };
            report.push(
                "mutual statistics nondegenerate",
                theory_table.braiding_nondegenerate(),
                format!("{} anyons", theory_table.len()),
            );
            for a in 0..theory_table.len() {
                for b in a..theory_table.len() {
                    let phase = theory_table.braiding(a, b);
                    if !phase.is_one() {
                        report.push(
                            format!(
                                "B({}, {})",
                                theory_table.anyons[a].label, theory_table.anyons[b].label
                            ),
                            true,
                            phase.to_string(),
                        );
                    }
                }
            }
            report
        }
    };
    report.elapsed_ms = started.elapsed().as_millis();
    Ok((report, cli.format, cli.out))
}

/// Every builtin (family, parameters) combination the acceptance sweep
/// covers: (label, group, spec).
fn builtin_sweep() -> Vec<(String, String, CocycleSpec)> {
    let mut out = Vec::new();
    for n in 2..=4i64 {
        for p in 0..n {
            out.push((
                format!("Z{n} p={p}"),
                format!("Z{n}"),
                CocycleSpec::CyclicTypeOne { p },
            ));
        }
    }
    for k1 in 0..2 {
        for k2 in 0..2 {
            for k3 in 0..2 {
                let mut type2 = BTreeMap::new();
                type2.insert("1_2".to_string(), k3);
                out.push((
                    format!("Z2xZ2 k1={k1},k2={k2},t2_1_2={k3}"),
                    "Z2xZ2".to_string(),
                    CocycleSpec::CyclicProduct {
                        type1: vec![k1, k2],
                        type2,
                        type3: BTreeMap::new(),
                    },
                ));
            }
        }
    }
    for k1 in 0..2 {
        for k2 in 0..2 {
            for k3 in 0..2 {
                for t3 in 0..2 {
                    let mut type3 = BTreeMap::new();
                    type3.insert("1_2_3".to_string(), t3);
                    out.push((
                        format!("Z2xZ2xZ2 k1={k1},k2={k2},k3={k3},t3={t3}"),
                        "Z2xZ2xZ2".to_string(),
                        CocycleSpec::CyclicProduct {
                            type1: vec![k1, k2, k3],
                            type2: BTreeMap::new(),
                            type3,
                        },
                    ));
                }
            }
        }
    }
    for p1 in 0..3 {
        for p2 in 0..2 {
            out.push((
                format!("S3 p1={p1},p2={p2}"),
                "S3".to_string(),
                CocycleSpec::Dihedral { p1, p2, p3: 0 },
            ));
        }
    }
    for p1 in 0..4 {
        for p2 in 0..2 {
            for p3 in 0..2 {
                out.push((
                    format!("D4 p1={p1},p2={p2},p3={p3}"),
                    "D4".to_string(),
                    CocycleSpec::Dihedral { p1, p2, p3 },
                ));
            }
        }
    }
    for p in 0..4 {
        out.push((
            format!("Q8 p={p}"),
            "Q8".to_string(),
            CocycleSpec::Quaternion { p },
        ));
    }
    out
}

fn main() -> ExitCode {
    match run() {
        Ok((report, format, out)) => {
            let rendered = report.render(format);
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &rendered) {
                        eprintln!("cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    println!(
                        "{} checks, {} failed -> {}",
                        report.results.len(),
                        report.results.iter().filter(|r| !r.pass).count(),
                        path.display()
                    );
                }
                None => print!("{rendered}"),
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
