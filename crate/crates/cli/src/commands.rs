//! One entry point per subcommand; all return `Outcome` so `main` can map
//! verify mismatches to their own exit status.

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

use qladder_core::evolution::Evolver;
use qladder_core::model::LadderModel;
use qladder_core::{gfactors, oracle, rat, spectrum};

use crate::output::{self, Format, Provenance, Sink, Table};
use crate::spec::{self, ModelSpec};

pub enum Outcome {
    Ok,
    Mismatch,
}

const PRECISION_ENV: &str = "QLADDER_PRECISION_BITS";

#[derive(Args)]
pub struct CommonArgs {
    /// Model spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    pub model: String,
    /// Output destination: a path, or `csv`/`json` for stdout.
    #[arg(long)]
    pub out: Option<String>,
    /// Table format (defaults to csv, or the `--out` extension).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl CommonArgs {
    fn load(&self) -> Result<(ModelSpec, LadderModel)> {
        spec::load(&self.model)
    }

    fn sink(&self) -> Sink {
        Sink::new(self.out.as_deref(), self.format)
    }
}

/// Ceiling for the certified-series working precision, in bits.
fn precision_ceiling(flag: Option<u32>) -> Result<Option<u32>> {
    if let Some(bits) = flag {
        return Ok(Some(bits));
    }
    match std::env::var(PRECISION_ENV) {
        Ok(s) => {
            let bits = s
                .parse::<u32>()
                .with_context(|| format!("{PRECISION_ENV} must be a bit count, got {s:?}"))?;
            Ok(Some(bits))
        }
        Err(_) => Ok(None),
    }
}

fn make_evolver(model: &LadderModel, precision_bits: Option<u32>) -> Result<Evolver> {
    Ok(match precision_ceiling(precision_bits)? {
        Some(bits) => Evolver::with_precision_ceiling(model.clone(), bits),
        None => Evolver::new(model.clone()),
    })
}

fn parse_tau_list(list: &str, scaled: bool, model: &LadderModel) -> Result<Vec<f64>> {
    let scale = if scaled { model.frequency_scale().max(f64::MIN_POSITIVE) } else { 1.0 };
    list.split(',')
        .map(|s| {
            let t: f64 = s.trim().parse().with_context(|| format!("bad tau {s:?}"))?;
            if !t.is_finite() {
                bail!("tau must be finite");
            }
            Ok(t / scale)
        })
        .collect()
}

/// `--initial`: a basis index, or a comma list of amplitudes (`re` or
/// `re:im` per component, padded with zeros up to the dimension).
fn parse_initial(arg: &str, dim: usize) -> Result<Vec<Complex64>> {
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    if let Ok(idx) = arg.trim().parse::<usize>() {
        if idx >= dim {
            bail!("initial index {idx} outside dimension {dim}");
        }
        amps[idx] = Complex64::new(1.0, 0.0);
        return Ok(amps);
    }
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() > dim {
        bail!("{} amplitudes for dimension {dim}", parts.len());
    }
    for (a, part) in amps.iter_mut().zip(parts) {
        let (re, im) = match part.split_once(':') {
            Some((re, im)) => (re, im),
            None => (part, "0"),
        };
        *a = Complex64::new(
            re.trim().parse().with_context(|| format!("bad amplitude {part:?}"))?,
            im.trim().parse().with_context(|| format!("bad amplitude {part:?}"))?,
        );
    }
    if amps.iter().all(|a| a.norm_sqr() == 0.0) {
        bail!("initial state is identically zero");
    }
    Ok(amps)
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

// --- model show -------------------------------------------------------

#[derive(Args)]
pub struct ShowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn model_show(args: &ShowArgs) -> Result<Outcome> {
    let (spec, model) = args.common.load()?;
    let betas: Vec<String> = model.betas().iter().map(rat::to_exact_string).collect();
    let mut sink = args.common.sink();
    if args.common.format.is_none() && args.common.out.is_none() {
        // The JSON document is the canonical, re-parseable description.
        sink.format = Format::Json;
    }
    match sink.format {
        Format::Json => {
            // The document embeds the original family/params keys, so it
            // re-parses to the identical model.
            let mut doc = serde_json::to_value(&spec)?;
            let obj = doc.as_object_mut().expect("specs serialize to objects");
            obj.insert("N".into(), model.n_max().into());
            obj.insert("dim".into(), model.dim().into());
            obj.insert("reducible".into(), model.is_reducible().into());
            if spec.family != "custom" {
                obj.insert("betas".into(), betas.into());
            }
            let mut w = sink_writer(&sink)?;
            use std::io::Write;
            writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Csv => {
            let rows = betas
                .into_iter()
                .enumerate()
                .map(|(n, b)| vec![n.to_string(), b])
                .collect();
            let provenance = Provenance::new(spec::short_hash(&spec), None);
            output::emit(&sink, &provenance, &Table { columns: &["n", "beta"], rows })?;
        }
    }
    Ok(Outcome::Ok)
}

fn sink_writer(sink: &Sink) -> Result<Box<dyn std::io::Write>> {
    Ok(match &sink.path {
        Some(p) => Box::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    })
}

// --- gfactors ---------------------------------------------------------

#[derive(Args)]
pub struct GfactorsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Starting basis index k.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Highest series order l to tabulate.
    #[arg(long = "max-l")]
    pub max_l: usize,
}

pub fn gfactors(args: &GfactorsArgs) -> Result<Outcome> {
    let (spec, model) = args.common.load()?;
    let table = gfactors::g_recursive(&model, args.k, args.max_l)?;
    let mut rows = Vec::with_capacity(model.dim() * (args.max_l + 1));
    for n in 0..model.dim() {
        for l in 0..=args.max_l {
            rows.push(vec![
                n.to_string(),
                l.to_string(),
                rat::to_exact_string(table.value(n, l)),
            ]);
        }
    }
    let provenance = Provenance::new(spec::short_hash(&spec), None);
    output::emit(&args.common.sink(), &provenance, &Table { columns: &["n", "l", "g"], rows })?;
    Ok(Outcome::Ok)
}

// --- evolve -----------------------------------------------------------

#[derive(Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma list of times.
    #[arg(long)]
    pub tau: String,
    /// Interpret times in units of 1/sqrt(max beta).
    #[arg(long = "scaled-tau")]
    pub scaled_tau: bool,
    /// Initial state: basis index, or comma list of `re` / `re:im` amplitudes.
    #[arg(long, default_value = "0")]
    pub initial: String,
    /// Certified absolute error budget per output amplitude.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Working precision ceiling in bits (overrides QLADDER_PRECISION_BITS).
    #[arg(long = "precision-bits")]
    pub precision_bits: Option<u32>,
}

pub fn evolve(args: &EvolveArgs) -> Result<Outcome> {
    let (spec, model) = args.common.load()?;
    let taus = parse_tau_list(&args.tau, args.scaled_tau, &model)?;
    let amps = parse_initial(&args.initial, model.dim())?;
    let mut evolver = make_evolver(&model, args.precision_bits)?;
    let mut rows = Vec::new();
    for &tau in &taus {
        let (out, err) = evolver.evolve_state(&amps, tau, args.tol)?;
        for (n, a) in out.iter().enumerate() {
            rows.push(vec![
                fmt_f64(tau),
                n.to_string(),
                fmt_f64(a.re),
                fmt_f64(a.im),
                fmt_f64(a.norm_sqr()),
                format!("{err:e}"),
            ]);
        }
    }
    let provenance = Provenance::new(spec::short_hash(&spec), Some(args.tol));
    let table = Table { columns: &["tau", "n", "re", "im", "prob", "err_bound"], rows };
    output::emit(&args.common.sink(), &provenance, &table)?;
    Ok(Outcome::Ok)
}

// --- spectrum ---------------------------------------------------------

#[derive(Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Absolute eigenvalue tolerance for the bisection.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Also emit eigenvector components (one row per lambda and n).
    #[arg(long)]
    pub eigenvectors: bool,
}

pub fn spectrum_cmd(args: &SpectrumArgs) -> Result<Outcome> {
    let (spec, model) = args.common.load()?;
    let ev = spectrum::eigenvalues(&model, args.tol)?;
    let provenance = Provenance::new(spec::short_hash(&spec), Some(args.tol));
    let table = if args.eigenvectors {
        let mut rows = Vec::new();
        for (j, lambda) in ev.iter().enumerate() {
            let (v, _residual) =
                spectrum::eigenvector(&model, *lambda, spectrum::Normalization::Unit)?;
            for (n, psi) in v.iter().enumerate() {
                rows.push(vec![j.to_string(), fmt_f64(*lambda), n.to_string(), fmt_f64(*psi)]);
            }
        }
        Table { columns: &["j", "lambda", "n", "psi"], rows }
    } else {
        let rows =
            ev.iter().enumerate().map(|(j, l)| vec![j.to_string(), fmt_f64(*l)]).collect();
        Table { columns: &["j", "lambda"], rows }
    };
    output::emit(&args.common.sink(), &provenance, &table)?;
    Ok(Outcome::Ok)
}

// --- stationary -------------------------------------------------------

#[derive(Args)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// psi0 pins psi_0 = 1 (plot convention); unit gives a unit vector.
    #[arg(long, value_parser = ["unit", "psi0"], default_value = "psi0")]
    pub normalize: String,
}

pub fn stationary(args: &StationaryArgs) -> Result<Outcome> {
    let (spec, model) = args.common.load()?;
    let normalize = match args.normalize.as_str() {
        "unit" => spectrum::Normalization::Unit,
        _ => spectrum::Normalization::Psi0,
    };
    let st = spectrum::stationary_state(&model, normalize)?;
    let rows = (0..=model.n_max() / 2)
        .map(|p| {
            let n = 2 * p;
            vec![
                p.to_string(),
                n.to_string(),
                fmt_f64(st.psi[n]),
                rat::to_exact_string(&st.psi_squared[n]),
            ]
        })
        .collect();
    let provenance = Provenance::new(spec::short_hash(&spec), None);
    let table = Table { columns: &["p", "n", "psi", "psi_squared"], rows };
    output::emit(&args.common.sink(), &provenance, &table)?;
    Ok(Outcome::Ok)
}

// --- verify -----------------------------------------------------------

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma list of times for the propagator cross-check.
    #[arg(long, default_value = "1.0")]
    pub tau: String,
    /// Interpret times in units of 1/sqrt(max beta).
    #[arg(long = "scaled-tau")]
    pub scaled_tau: bool,
    /// Certified series tolerance used for the fast path.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Working precision ceiling in bits (overrides QLADDER_PRECISION_BITS).
    #[arg(long = "precision-bits")]
    pub precision_bits: Option<u32>,
}

struct Check {
    name: &'static str,
    deviation: f64,
    threshold: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.deviation <= self.threshold
    }
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome> {
    let (_, model) = args.common.load()?;
    let taus = parse_tau_list(&args.tau, args.scaled_tau, &model)?;
    let scale = model.frequency_scale().max(1.0);
    let dim = model.dim();
    let mut evolver = make_evolver(&model, args.precision_bits)?;
    let mut checks = Vec::new();

    let mut u_dev = 0.0f64;
    let mut defect = 0.0f64;
    for &tau in &taus {
        let u = evolver.propagator(tau, args.tol)?;
        let dense = oracle::dense_propagator(&model, tau);
        for n in 0..dim {
            for k in 0..dim {
                u_dev = u_dev.max((u.entry(n, k) - dense.entry(n, k)).norm());
            }
        }
        defect = defect.max(u.unitarity_defect());
    }
    checks.push(Check {
        name: "propagator vs dense exponential",
        deviation: u_dev,
        threshold: 1e-9f64.max(100.0 * args.tol),
    });
    checks.push(Check {
        name: "propagator unitarity",
        deviation: defect,
        threshold: 10.0 * dim as f64 * args.tol,
    });

    let ev = spectrum::eigenvalues(&model, 1e-13 * scale)?;
    let dense = oracle::dense_spectrum(&model);
    let ev_dev = ev
        .iter()
        .zip(&dense.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    checks.push(Check {
        name: "eigenvalues vs dense solver",
        deviation: ev_dev,
        threshold: 1e-10 * scale,
    });

    // Coefficient recursion against exact minor evaluation at rational points.
    let cp = spectrum::char_poly(&model);
    let mut cp_dev = 0.0f64;
    for num in [-3i64, 1, 2, 5] {
        let lam = BigRational::new(BigInt::from(num), BigInt::from(2));
        let ys = spectrum::minor_sequence_exact(&model, &lam);
        if cp.evaluate_exact(&lam) != ys[dim] {
            cp_dev = f64::INFINITY;
        }
    }
    checks.push(Check {
        name: "characteristic polynomial vs minors",
        deviation: cp_dev,
        threshold: 0.0,
    });

    if !model.is_reducible() {
        let mut vec_dev = 0.0f64;
        let h = oracle::dense_hamiltonian(&model);
        for lambda in &ev {
            let (v, _) = spectrum::eigenvector(&model, *lambda, spectrum::Normalization::Unit)?;
            for r in 0..dim {
                let hv: f64 = (0..dim).map(|c| h.entry(r, c) * v[c]).sum();
                vec_dev = vec_dev.max((hv - lambda * v[r]).abs() / scale);
            }
        }
        checks.push(Check {
            name: "eigenvector residuals",
            deviation: vec_dev,
            threshold: 1e-8,
        });

        // Continued fractions against exact minor ratios at a generic point.
        let lam = BigRational::new(BigInt::from(7), BigInt::from(13))
            * rat::f64_to_rational(scale).expect("scale is finite");
        let lam_f = rat::rational_to_f64(&lam);
        let ys = spectrum::minor_sequence_exact(&model, &lam);
        let mut cf_dev = 0.0f64;
        for n in 0..model.n_max() {
            let pair =
                spectrum::ratio_continued_fraction(&model, n, lam_f, spectrum::Direction::Upward)?;
            if ys[n + 1].is_zero() || pair.is_pole() {
                continue;
            }
            let reference = rat::rational_to_f64(&(&model.betas()[n] * &ys[n] / &ys[n + 1]));
            cf_dev = cf_dev.max((pair.ratio() - reference).abs() / reference.abs().max(1.0));
        }
        checks.push(Check {
            name: "continued fractions vs minor ratios",
            deviation: cf_dev,
            threshold: 1e-12,
        });

        if model.n_max() % 2 == 0 {
            let st = spectrum::stationary_state(&model, spectrum::Normalization::Unit)?;
            checks.push(Check {
                name: "stationary state residual",
                deviation: st.residual,
                threshold: 1e-10,
            });
        }
    }

    let mut all_pass = true;
    println!("{:<40} {:>13} {:>13}  status", "check", "max deviation", "threshold");
    for c in &checks {
        all_pass &= c.pass();
        println!(
            "{:<40} {:>13.3e} {:>13.3e}  {}",
            c.name,
            c.deviation,
            c.threshold,
            if c.pass() { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        println!("overall: PASS");
        Ok(Outcome::Ok)
    } else {
        println!("overall: FAIL");
        Ok(Outcome::Mismatch)
    }
}

pub fn validate_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        Err(anyhow!("tolerance must be a positive finite number, got {tol}"))
    } else {
        Ok(())
    }
}
