//! One function per command: compute, then hand back metrics and artifacts.

use ndsym::decomposition::{verify_fujiwara, verify_key_lemma, DecompositionOptions};
use ndsym::io;
use ndsym::markov::{
    displacement_moments, empirical_check, sample_paths, transition_kernel_on, verify_evolution_family, TransitionKernel,
};
use ndsym::parametrix::{cross_validate, LeviOptions};
use ndsym::pdo::{compose_kn_checked, frozen_exp_symbol};
use ndsym::symbols::{check_assumptions, fd, linspace, random_sample_pairs, verify_ndf_properties, NdfOptions, SampleBox, SamplePlan};
use ndsym::timeslice::{evolve_time_sliced, plim_extrapolate, Partition, PlimOptions};
use serde_json::json;

use crate::config::{Command, Prepared};
use crate::CliError;

/// Result of a command before anything is written.
pub struct Outcome {
    pub passed: bool,
    pub metrics: serde_json::Value,
    pub seed: Option<u64>,
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn new(passed: bool, metrics: serde_json::Value) -> Self {
        Self { passed, metrics, seed: None, artifacts: vec![] }
    }

    fn artifact(mut self, name: &str, text: String) -> Self {
        self.artifacts.push((name.into(), text));
        self
    }

    fn json<T: serde::Serialize>(self, name: &str, value: &T) -> Result<Self, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(ndsym::Error::from)?;
        text.push('\n');
        Ok(self.artifact(name, text))
    }
}

/// Largest relative L² distance accepted between the parametrix and time slicing.
pub const CROSS_VALIDATION_TOL: f64 = 1e-2;

pub fn execute(command: Command, p: &Prepared) -> Result<Outcome, CliError> {
    match command {
        Command::CheckSymbol => check_symbol(p),
        Command::Evolve => evolve(p),
        Command::Compose => compose(p),
        Command::Kernel => kernel(p),
        Command::Sample => sample(p),
        Command::VerifyDecomposition => verify_decomposition(p),
        Command::VerifyFamily => verify_family(p),
        Command::Convergence => convergence(p),
        Command::CrossValidate => cross_validation(p),
    }
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, axis| {
        acc.iter().flat_map(|p| axis.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect()
    })
}

fn check_symbol(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let (a, g) = (&p.symbol, &p.grid);
    let seed = nu.seed.unwrap_or(0);
    let s = p.config.time.s;
    let x_ref = vec![0.0; g.d];
    let samples = random_sample_pairs(g.d, nu.n_samples, nu.sample_radius, seed);
    let ndf = verify_ndf_properties(|xi| a.eval(s, &x_ref, xi), &samples, &NdfOptions::default())?;

    let per_axis_x = if g.d == 1 { 8 } else { 4 };
    let xs: Vec<f64> = (0..per_axis_x).map(|i| g.node(i * g.n / per_axis_x)).collect();
    let xi_max = g.freq(g.n - 1).abs().min(nu.sample_radius);
    let xis = linspace(-xi_max, xi_max, if g.d == 1 { 33 } else { 9 });
    let plan = SamplePlan {
        times: vec![s, p.mid(), p.config.time.t],
        sample: SampleBox::new(product(&vec![xs; g.d]), product(&vec![xis; g.d])),
        l: 2,
        l_prime: 2,
        fd_step: fd::FD_STEP,
    };
    let assumptions = check_assumptions(a, &plan)?;
    let passed = ndf.passed() && assumptions.passed();
    let metrics = json!({
        "peetre_max": ndf.peetre.constant,
        "growth": ndf.growth.constant,
        "growth_doubled": ndf.growth_doubled,
        "c0": ndf.c0.constant,
        "cnd_min_eigenvalue": ndf.cnd.constant,
        "a1_seminorm": assumptions.a1.constant,
        "a2_ellipticity": assumptions.a2.constant,
        "a3_ratio": assumptions.a3.constant,
        "warnings": assumptions.warnings,
    });
    let mut out = Outcome::new(passed, metrics).json("check_symbol.json", &json!({ "ndf": ndf, "assumptions": assumptions }))?;
    out.seed = Some(seed);
    Ok(out)
}

fn evolve(p: &Prepared) -> Result<Outcome, CliError> {
    let u0 = p.initial();
    let u = evolve_time_sliced(&p.symbol, &p.partition, &u0, p.config.numeric.n_quad)?;
    let mass = |f: &ndsym::pdo::GridFunction| f.values.iter().map(|v| v.re).sum::<f64>() * p.grid.cell_volume();
    let finite = u.values.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let metrics = json!({
        "slices": p.partition.num_slices(),
        "mesh": p.partition.mesh(),
        "mass_initial": mass(&u0),
        "mass_final": mass(&u),
        "l2_initial": u0.l2_norm(),
        "l2_final": u.l2_norm(),
        "sup_final": u.sup_norm(),
    });
    Ok(Outcome::new(finite, metrics)
        .artifact("u0.csv", io::grid_function_to_csv(&u0))
        .artifact("u_t.csv", io::grid_function_to_csv(&u)))
}

fn compose(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let (s, m, t) = (p.config.time.s, p.mid(), p.config.time.t);
    let p1 = frozen_exp_symbol(&p.symbol, s, m, &p.grid, nu.n_quad)?;
    let p2 = frozen_exp_symbol(&p.symbol, m, t, &p.grid, nu.n_quad)?;
    let (c, rep) = compose_kn_checked(&p1, &p2, nu.eps)?;
    let single = frozen_exp_symbol(&p.symbol, s, t, &p.grid, nu.n_quad)?;
    let distance = c.sub(&single)?.sup_norm();
    let passed = c.is_finite() && (nu.eps == 0.0 || rep.halving_change <= nu.tol);
    let metrics = json!({
        "eps": rep.eps,
        "halving_change": rep.halving_change,
        "distance_to_single_slice": distance,
        "sup_norm": c.sup_norm(),
    });
    Ok(Outcome::new(passed, metrics).artifact("composed_symbol.csv", io::symbol_to_csv(&c)))
}

/// Row-sum, positivity and contraction thresholds of a stored kernel.
fn kernel_metrics(k: &TransitionKernel) -> (bool, serde_json::Value) {
    let (cons, min, norm) = (k.conservation_defect(), k.min_entry(), k.row_norm());
    let passed = cons <= 1e-6 && min >= -1e-4 && norm <= 1.0 + 1e-6;
    (passed, json!({ "conservation": cons, "min_entry": min, "contraction": norm, "max_imag": k.max_imag }))
}

fn kernel(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let k = transition_kernel_on(&p.symbol, &p.partition, &p.grid, nu.smoothing, nu.n_quad)?;
    let (passed, metrics) = kernel_metrics(&k);
    Ok(Outcome::new(passed, metrics).artifact("kernel.csv", io::kernel_to_csv(&k)))
}

fn sample(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let seed = nu.seed.unwrap_or(0);
    let times = p.partition.times();
    let kernels = times
        .windows(2)
        .map(|w| transition_kernel_on(&p.symbol, &Partition::new(w.to_vec())?, &p.grid, nu.smoothing, nu.n_quad))
        .collect::<ndsym::Result<Vec<_>>>()?;
    let ens = sample_paths(&kernels, &p.x0(), nu.n_paths, seed)?;
    let tv = empirical_check(&ens, &kernels[0], 0)?;
    let tv_bound = (p.grid.size() as f64 / nu.n_paths as f64).sqrt();
    let last = ens.times.len() - 1;
    let (mean, var) = if p.grid.d == 1 { displacement_moments(&ens, &p.grid, last) } else { (f64::NAN, f64::NAN) };
    let metrics = json!({
        "n_paths": nu.n_paths,
        "steps": kernels.len(),
        "final_mean_displacement": mean,
        "final_variance": var,
        "tv_first_step": tv,
        "tv_bound": tv_bound,
        "clamped_mass": ens.clamped_mass,
    });
    let mut out = Outcome::new(tv <= tv_bound, metrics)
        .artifact("ensemble.csv", io::ensemble_to_csv(&ens))
        .json("seed.json", &io::SeedRecord::of(&ens))?;
    out.seed = Some(seed);
    Ok(out)
}

fn verify_decomposition(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let k = p.partition.num_slices() - 1;
    if !(1..=3).contains(&k) {
        return Err(CliError::Config(format!("verify-decomposition needs 2 to 4 slices, got {}", k + 1)));
    }
    let opts = DecompositionOptions { n_quad: nu.n_quad, n_theta: nu.n_theta, eps: nu.eps, ..Default::default() };
    let lemma = verify_key_lemma(&p.symbol, &p.partition, &p.grid, &opts)?;
    let fujiwara = if k == 3 { Some(verify_fujiwara(&p.symbol, &p.partition, &p.grid, &opts)?) } else { None };
    let passed = lemma.passed && fujiwara.as_ref().is_none_or(|f| f.passed);
    let metrics = json!({
        "k": k,
        "identity_residual": lemma.identity_residual,
        "residual_without_remainder": lemma.residual_without_remainder,
        "scaling_checks_passed": lemma.scaling_checks.iter().all(|c| c.pass),
        "fujiwara_residual": fujiwara.as_ref().map(|f| f.identity_residual),
    });
    Outcome::new(passed, metrics).json("decomposition.json", &json!({ "key_lemma": lemma, "fujiwara": fujiwara }))
}

fn verify_family(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let t = &p.config.time;
    let rep = verify_evolution_family(&p.symbol, t.s, p.mid(), t.t, p.partition.num_slices(), &p.grid, nu.smoothing, nu.n_quad)?;
    let metrics = json!({
        "ck_defect": rep.ck_defect,
        "ck_ratio": rep.ck_ratio,
        "min_entry": rep.min_entry,
        "contraction": rep.contraction,
        "conservation": rep.conservation,
    });
    Outcome::new(rep.passed, metrics).json("family.json", &rep)
}

fn convergence(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let t = &p.config.time;
    let opts = PlimOptions { tol: nu.tol, k_max: nu.k_max, n_quad: nu.n_quad, eps: nu.eps, record_timing: nu.record_timing };
    let res = plim_extrapolate(&p.symbol, t.s, t.t, &p.grid, &opts)?;
    let last = res.trace.last().expect("at least one level");
    let metrics = json!({ "converged": res.converged, "levels": res.trace.len(), "final_k": last.k, "final_delta": last.delta });
    Ok(Outcome::new(res.converged, metrics)
        .artifact("trace.csv", io::trace_to_csv(&res.trace))
        .artifact("plim_symbol.csv", io::symbol_to_csv(&res.symbol)))
}

fn cross_validation(p: &Prepared) -> Result<Outcome, CliError> {
    let nu = &p.config.numeric;
    let t = &p.config.time;
    let k_top = p.partition.num_slices();
    let mut ks: Vec<usize> = std::iter::successors(Some(k_top), |k| (k % 2 == 0 && *k > 4).then_some(k / 2)).collect();
    ks.reverse();
    let depths: Vec<usize> = (0..=nu.depth).collect();
    let opts = LeviOptions { depth: nu.depth, n_time_nodes: nu.n_time_nodes, n_quad: nu.n_quad, ..Default::default() };
    let rep = cross_validate(&p.symbol, t.s, t.t, &depths, &ks, &p.initial(), &opts)?;
    let best = rep.rows.iter().find(|r| r.depth == nu.depth && r.k == k_top).map(|r| r.distance).unwrap_or(f64::NAN);
    let passed = rep.monotone && best <= CROSS_VALIDATION_TOL;
    let metrics = json!({ "distance": best, "monotone": rep.monotone, "J": nu.depth, "k": k_top });
    Ok(Outcome::new(passed, metrics).artifact("cross_validation.csv", io::cross_validation_to_csv(&rep)))
}
