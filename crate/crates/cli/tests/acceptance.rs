//! Acceptance gate: every release-blocking claim, one test and one
//! PASS/FAIL line each, at the stated tolerances.

use std::process::Command;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use qladder_core::model::{self, LadderModel};
use qladder_core::{evolution, gfactors, oracle, rat, spectrum};

fn criterion(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("acceptance: {name}: PASS"),
        Err(why) => {
            println!("acceptance: {name}: FAIL — {why}");
            panic!("{name}: {why}");
        }
    }
}

/// Built-in families at a given top index, one per constructor shape.
fn builtins(n_top: u64) -> Vec<LadderModel> {
    vec![
        model::make_k_photon(1, n_top).unwrap(),
        model::make_k_photon(2, n_top).unwrap(),
        model::make_k_photon(3, n_top).unwrap(),
        model::make_two_mode(2, 2, 2 * n_top, 1).unwrap(),
        model::make_two_mode(3, 1, 3 * n_top, 0).unwrap(),
        model::make_three_mode(n_top),
        model::make_multi_mode(1, &[1, 2], &[0, 1], n_top).unwrap(),
    ]
}

#[test]
fn g_factor_routes_agree_exactly() {
    criterion("g-factor triple equivalence (k <= 3, N <= 12, l <= 8)", || {
        let start = std::time::Instant::now();
        for k_op in 1u32..=3 {
            for n_top in 0u64..=12 {
                let m = model::make_k_photon(k_op, n_top).unwrap();
                for k in 0..m.dim() {
                    let rec = gfactors::g_recursive(&m, k, 8).map_err(|e| e.to_string())?;
                    let hes = gfactors::g_hessenberg(&m, k, 8).map_err(|e| e.to_string())?;
                    for n in 0..m.dim() {
                        for l in 0..=8usize {
                            let a = rec.value(n, l);
                            if a != hes.value(n, l) {
                                return Err(format!(
                                    "recursion vs Hessenberg at k_op={k_op} N={n_top} (n={n},k={k},l={l})"
                                ));
                            }
                            let nested = gfactors::g_nested_sum(&m, n, k, l)
                                .map_err(|e| e.to_string())?;
                            if a != &nested {
                                return Err(format!(
                                    "recursion vs nested sum at k_op={k_op} N={n_top} (n={n},k={k},l={l})"
                                ));
                            }
                        }
                    }
                }
            }
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() > 60 {
            return Err(format!("runtime budget exceeded: {elapsed:?} > 1 min"));
        }
        Ok(())
    });
}

#[test]
fn propagator_matches_dense_oracle() {
    criterion("evolution vs dense oracle (N <= 20, 1e-9)", || {
        let start = std::time::Instant::now();
        let mut battery = builtins(20);
        battery.push(model::make_k_photon(3, 15).unwrap());
        for m in battery {
            if m.dim() > 21 {
                continue;
            }
            let scale = m.frequency_scale();
            for t in [0.1, 0.5, 1.0] {
                let tau = t / scale;
                let u = evolution::propagator(&m, tau, 1e-12).map_err(|e| e.to_string())?;
                let dense = oracle::dense_propagator(&m, tau);
                for n in 0..m.dim() {
                    for k in 0..m.dim() {
                        let d = (u.entry(n, k) - dense.entry(n, k)).norm();
                        if d > 1e-9 {
                            return Err(format!(
                                "{} at tau={t}/scale entry ({n},{k}): |diff| = {d:e}",
                                m.family().describe()
                            ));
                        }
                    }
                }
            }
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() > 120 {
            return Err(format!("runtime budget exceeded: {elapsed:?} > 2 min"));
        }
        Ok(())
    })
}

#[test]
fn propagator_stays_unitary_at_n40() {
    criterion("unitarity <= 10(N+1) tol at N <= 40", || {
        let start = std::time::Instant::now();
        let tol = 1e-12;
        for m in [
            model::make_k_photon(1, 40).unwrap(),
            model::make_k_photon(2, 40).unwrap(),
            model::make_two_mode(2, 3, 80, 2).unwrap(),
            model::make_three_mode(40),
        ] {
            let bound = 10.0 * m.dim() as f64 * tol;
            let scale = m.frequency_scale();
            for t in [0.5, 2.0] {
                let u = evolution::propagator(&m, t / scale, tol).map_err(|e| e.to_string())?;
                let defect = u.unitarity_defect();
                if defect > bound {
                    return Err(format!(
                        "{} at tau={t}/scale: defect {defect:e} > {bound:e}",
                        m.family().describe()
                    ));
                }
            }
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() > 300 {
            return Err(format!("runtime budget exceeded: {elapsed:?} > 5 min"));
        }
        Ok(())
    })
}

#[test]
fn closed_forms_of_smallest_ladders() {
    criterion("two-level cos/sin and squeezed cos^2/sin^2 closed forms (1e-12)", || {
        let two_level = model::make_custom(vec![
            BigRational::one(),
            BigRational::zero(),
        ])
        .unwrap();
        let squeezed = model::make_k_photon(1, 2).unwrap();
        for i in 0..=24 {
            let tau = core::f64::consts::PI * i as f64 / 24.0;
            let g00 = evolution::gamma(&two_level, 0, 0, tau, 1e-13)
                .map_err(|e| e.to_string())?
                .value;
            if (g00 - tau.cos()).abs() > 1e-12 {
                return Err(format!("gamma_00({tau}) = {g00} vs cos = {}", tau.cos()));
            }
            let (u10, _) = evolution::propagator_element(&two_level, 1, 0, tau, 1e-13)
                .map_err(|e| e.to_string())?;
            let want = Complex64::new(0.0, -tau.sin());
            if (u10 - want).norm() > 1e-12 {
                return Err(format!("U_10({tau}) = {u10} vs -i sin = {want}"));
            }
            let (u00, _) = evolution::propagator_element(&squeezed, 0, 0, tau, 1e-13)
                .map_err(|e| e.to_string())?;
            let c2 = tau.cos() * tau.cos();
            if (u00 - Complex64::new(c2, 0.0)).norm() > 1e-12 {
                return Err(format!("U_00({tau}) = {u00} vs cos^2 = {c2}"));
            }
            let (u20, _) = evolution::propagator_element(&squeezed, 2, 0, tau, 1e-13)
                .map_err(|e| e.to_string())?;
            let s2 = -tau.sin() * tau.sin();
            if (u20 - Complex64::new(s2, 0.0)).norm() > 1e-12 {
                return Err(format!("U_20({tau}) = {u20} vs -sin^2 = {s2}"));
            }
        }
        Ok(())
    })
}

#[test]
fn eigenvalues_match_dense_solver() {
    criterion("spectrum vs dense (N <= 30, 1e-10 scaled), symmetry, zero mode", || {
        let start = std::time::Instant::now();
        let mut battery = builtins(30);
        // Small dimensions exercise the zero-mode parity claim on both sides.
        for n_top in 1..=8 {
            battery.push(model::make_k_photon(1, n_top).unwrap());
        }
        for m in battery {
            let scale = m.frequency_scale();
            let ev = spectrum::eigenvalues(&m, 1e-13 * scale).map_err(|e| e.to_string())?;
            let dense = oracle::dense_spectrum(&m).eigenvalues;
            for (a, b) in ev.iter().zip(&dense) {
                if (a - b).abs() > 1e-10 * scale {
                    return Err(format!(
                        "{}: {a} vs dense {b}",
                        m.family().describe()
                    ));
                }
            }
            for i in 0..ev.len() {
                if (ev[i] + ev[ev.len() - 1 - i]).abs() > 1e-10 * scale {
                    return Err(format!("{}: spectrum not symmetric", m.family().describe()));
                }
            }
            let has_zero = ev.iter().any(|l| l.abs() < 1e-9 * scale);
            if has_zero != (m.n_max() % 2 == 0) {
                return Err(format!(
                    "{}: zero mode present = {has_zero} with N = {}",
                    m.family().describe(),
                    m.n_max()
                ));
            }
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() > 120 {
            return Err(format!("runtime budget exceeded: {elapsed:?} > 2 min"));
        }
        Ok(())
    })
}

#[test]
fn char_poly_coefficients_are_consistent() {
    criterion("char poly: nested sums exact (N <= 12), root product 1e-8 rel (N <= 10)", || {
        for m in builtins(12) {
            if m.n_max() > 12 {
                continue;
            }
            let cp = spectrum::char_poly(&m);
            for (l, c) in cp.coeffs().iter().enumerate() {
                let nested = spectrum::char_coeff_nested_sum(&m, l);
                if c != &nested {
                    return Err(format!(
                        "{}: coefficient l={l} recursion vs nested sum",
                        m.family().describe()
                    ));
                }
            }
        }
        for m in builtins(10) {
            if m.n_max() > 10 {
                continue;
            }
            let scale = m.frequency_scale().max(1.0);
            let cp = spectrum::char_poly(&m);
            let dim = m.dim();
            // Monic polynomial in x = lambda/scale from the oracle roots.
            let mut prod = vec![0.0f64; dim + 1];
            prod[0] = 1.0;
            for root in oracle::dense_spectrum(&m).eigenvalues {
                let x = root / scale;
                for i in (0..dim).rev() {
                    let lower = prod[i] * -x;
                    prod[i + 1] += lower;
                }
                // highest-first storage: shift through in place
            }
            for (l, c) in cp.coeffs().iter().enumerate() {
                // coefficient of x^{dim-2l} with sign (-1)^l, scaled.
                let sign = if l % 2 == 1 { -1.0 } else { 1.0 };
                let exact = sign * scaled_coeff(c, scale, 2 * l as i32);
                let from_roots = prod[2 * l];
                let denom = exact.abs().max(1.0);
                if (exact - from_roots).abs() > 1e-8 * denom {
                    return Err(format!(
                        "{}: coefficient l={l}: exact {exact} vs roots {from_roots}",
                        m.family().describe()
                    ));
                }
            }
            // Odd powers vanish identically; the root product must agree.
            for i in (1..=dim).step_by(2) {
                if prod[i].abs() > 1e-8 {
                    return Err(format!(
                        "{}: odd coefficient {i} from roots = {}",
                        m.family().describe(),
                        prod[i]
                    ));
                }
            }
        }
        Ok(())
    })
}

/// `c / scale^pow` through exact mantissa/exponent splitting.
fn scaled_coeff(c: &BigRational, scale: f64, pow: i32) -> f64 {
    let (mant, exp) = rat::rational_to_f64_exp(c);
    rat::ldexp(mant / scale.powi(pow), exp)
}

#[test]
fn eigenvectors_and_ratio_fractions_are_consistent() {
    criterion("eigenvectors: residual 1e-10, dense match 1e-8, ratios 1e-12 rel", || {
        for m in builtins(20) {
            if m.dim() > 21 {
                continue;
            }
            let scale = m.frequency_scale();
            let h = oracle::dense_hamiltonian(&m);
            let dense = oracle::dense_spectrum(&m);
            let lambdas = spectrum::eigenvalues(&m, 1e-15 * scale).map_err(|e| e.to_string())?;
            for (j, lambda) in lambdas.iter().enumerate() {
                let (v, _) = spectrum::eigenvector(&m, *lambda, spectrum::Normalization::Unit)
                    .map_err(|e| e.to_string())?;
                let mut residual = 0.0f64;
                for r in 0..m.dim() {
                    let hv: f64 = (0..m.dim()).map(|c| h.entry(r, c) * v[c]).sum();
                    residual = residual.max((hv - lambda * v[r]).abs());
                }
                if residual > 1e-10 * scale {
                    return Err(format!(
                        "{} lambda={lambda}: residual {residual:e} > 1e-10 scaled",
                        m.family().describe()
                    ));
                }
                let col = &dense.eigenvectors[j];
                let anchor = (0..m.dim())
                    .max_by(|&a, &b| col[a].abs().partial_cmp(&col[b].abs()).unwrap())
                    .unwrap();
                let flip = if v[anchor] * col[anchor] < 0.0 { -1.0 } else { 1.0 };
                for (a, b) in v.iter().zip(col) {
                    if (a - flip * b).abs() > 1e-8 {
                        return Err(format!(
                            "{} lambda={lambda}: component {a} vs dense {b}",
                            m.family().describe()
                        ));
                    }
                }
            }
            // Ratio fractions against exact minor ratios at generic points.
            for num in [3i64, -5, 9] {
                let lam = BigRational::new(BigInt::from(num), BigInt::from(4))
                    * rat::f64_to_rational(scale).unwrap();
                let lam_f = rat::rational_to_f64(&lam);
                let ys = spectrum::minor_sequence_exact(&m, &lam);
                for n in 0..m.n_max() {
                    let pair = spectrum::ratio_continued_fraction(
                        &m,
                        n,
                        lam_f,
                        spectrum::Direction::Upward,
                    )
                    .map_err(|e| e.to_string())?;
                    if ys[n + 1].is_zero() || pair.is_pole() {
                        continue;
                    }
                    let reference =
                        rat::rational_to_f64(&(&m.betas()[n] * &ys[n] / &ys[n + 1]));
                    let rel = (pair.ratio() - reference).abs() / reference.abs().max(1e-300);
                    if rel > 1e-12 {
                        return Err(format!(
                            "{} R_{n}({lam_f}): {} vs {reference} (rel {rel:e})",
                            m.family().describe(),
                            pair.ratio()
                        ));
                    }
                }
            }
        }
        Ok(())
    })
}

#[test]
fn stationary_distribution_of_squeezed_ladder() {
    criterion("stationary CSV for k=2, N=100: 51 rows, psi_0^2 = 1, interior minimum", || {
        let start = std::time::Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_qladder"))
            .args([
                "stationary",
                "--model",
                r#"{"family":"k_photon","params":{"k":2,"N":100}}"#,
            ])
            .output()
            .map_err(|e| format!("running qladder: {e}"))?;
        if !out.status.success() {
            return Err(format!(
                "qladder stationary exited with {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let mut squares = Vec::new();
        for line in text.lines() {
            if line.starts_with('#') || line.starts_with("p,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(format!("malformed row {line:?}"));
            }
            squares.push(rat::parse_rational(fields[3]).map_err(|e| e.to_string())?);
        }
        if squares.len() != 51 {
            return Err(format!("{} rows, wanted 51", squares.len()));
        }
        if !squares[0].is_one() {
            return Err("psi_0^2 != 1".to_string());
        }
        if squares.iter().any(|q| !q.is_positive()) {
            return Err("a squared amplitude is not positive".to_string());
        }
        if squares[1] >= squares[0] {
            return Err("psi_2^2 >= psi_0^2: no local maximum at p=0".to_string());
        }
        if squares[49] >= squares[50] {
            return Err("psi_98^2 >= psi_100^2: no local maximum at p=50".to_string());
        }
        let m = model::make_k_photon(2, 100).unwrap();
        let st = spectrum::stationary_state(&m, spectrum::Normalization::Psi0)
            .map_err(|e| e.to_string())?;
        if st.residual > 1e-10 {
            return Err(format!("stationary residual {:e} > 1e-10", st.residual));
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() > 30 {
            return Err(format!("runtime budget exceeded: {elapsed:?} > 30 s"));
        }
        Ok(())
    })
}

#[test]
fn hamiltonian_power_expansion_is_exact() {
    criterion("H^m expansion vs rational matrix powers (N <= 10, m <= 12, all k)", || {
        let mut battery = builtins(10);
        battery.push(
            model::make_custom(
                [(3, 2), (5, 7), (2, 1), (9, 4), (0, 1)]
                    .iter()
                    .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
                    .collect(),
            )
            .unwrap(),
        );
        for m in battery {
            if m.n_max() > 10 {
                continue;
            }
            let dim = m.dim();
            for k in 0..dim {
                // Monic-basis column: climbing carries 1, descending beta_{j-1}.
                let mut state = vec![BigRational::zero(); dim];
                state[k] = BigRational::one();
                for pow in 0..=12usize {
                    let coeffs =
                        gfactors::expand_a_power(&m, pow, k).map_err(|e| e.to_string())?;
                    for (j, c) in state.iter().enumerate() {
                        let reported = coeffs.get(&j).cloned().unwrap_or_else(BigRational::zero);
                        if c != &reported {
                            return Err(format!(
                                "{}: H^{pow} e_{k} component {j}",
                                m.family().describe()
                            ));
                        }
                    }
                    let mut next = vec![BigRational::zero(); dim];
                    for (j, c) in state.iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        if j > 0 {
                            next[j - 1] += c * &m.betas()[j - 1];
                        }
                        if j + 1 < dim {
                            next[j + 1] += c;
                        }
                    }
                    state = next;
                }
            }
        }
        Ok(())
    })
}
