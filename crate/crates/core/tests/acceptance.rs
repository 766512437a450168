//! Acceptance criteria, one test per criterion. Every sub-check prints a
//! PASS/FAIL line with the measured value and its band; a test fails when any
//! of its sub-checks does.

use atomtrace::analysis::{
    detect_atoms, estimate_g2, fit_g2, g2_model, optimal_threshold, optimal_threshold_weighted, poisson_error_rates,
    sliding_count_ns, G2Estimate,
};
use atomtrace::physics::{
    detuning_scan, efficiency_overall, fluorescence_duration_scan, integrate_transit, transit_for, AtomKinematics,
    EfficiencyChain, ProbeBeamConfig, TransitionParams, DEFAULT_EXIT_FRACTION, DEFAULT_STEP,
};
use atomtrace::pipeline::match_arrivals;
use atomtrace::sim::rng::{substream_rng, Substream};
use atomtrace::sim::{emit_photons_for_atom, simulate_stream, SimulationConfig};
use atomtrace::units::{angular_to_mhz, ns_to_secs};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Criterion {
    id: &'static str,
    failed: Vec<String>,
}

/// Fixed-point for ordinary magnitudes, scientific for small ones.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-2 {
        format!("{x:.4e}")
    } else {
        format!("{x:.4}")
    }
}

impl Criterion {
    fn new(id: &'static str) -> Self {
        Criterion { id, failed: Vec::new() }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("[{}] {} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, self.id);
        if !ok {
            self.failed.push(name.to_owned());
        }
    }

    /// `value` within `rel` of `target`.
    fn rel(&mut self, name: &str, value: f64, target: f64, rel: f64) {
        let ok = ((value - target) / target).abs() <= rel;
        self.check(
            name,
            ok,
            format!(
                "{} vs {} ± {:.1}% [{}, {}]",
                num(value),
                num(target),
                rel * 100.0,
                num(target * (1.0 - rel)),
                num(target * (1.0 + rel))
            ),
        );
    }

    fn within(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.check(name, (lo..=hi).contains(&value), format!("{value:.6} in [{lo}, {hi}]"));
    }

    fn finish(self) {
        assert!(self.failed.is_empty(), "{} failed: {:?}", self.id, self.failed);
    }
}

fn rb85_beam(p: &TransitionParams, saturation: f64, detuning_gamma: f64) -> ProbeBeamConfig {
    ProbeBeamConfig::nominal_geometry(p, saturation, detuning_gamma * p.gamma())
}

#[test]
fn c1_photon_yield() {
    let mut c = Criterion::new("C1");
    let p = TransitionParams::rubidium85();
    let kin = AtomKinematics::falling();
    let beam = rb85_beam(&p, 2.7, 0.43).with_interaction_time(60e-6, &kin);
    let rec = integrate_transit(&p, &beam, &kin, DEFAULT_STEP).unwrap();
    c.check("interaction time", (rec.interaction_time - 60e-6).abs() < 1e-12, format!("{} s", rec.interaction_time));
    c.rel("N_phot at s=2.7, Δ=0.43Γ, 60 µs", rec.n_phot, 660.0, 0.05);
    c.finish();
}

#[test]
fn c2_optimal_detuning() {
    let mut c = Criterion::new("C2");
    let p = TransitionParams::rubidium85();
    let kin = AtomKinematics::falling();
    let beam = rb85_beam(&p, 3.0, 0.0);
    // 0.01 Γ = 60 kHz grid over ±2Γ.
    let grid: Vec<f64> = (-200..=200).map(|i| f64::from(i) * 0.01 * p.gamma()).collect();
    let scan = detuning_scan(&p, &beam, &kin, 50e-6, &grid, DEFAULT_STEP).unwrap();
    let (d_opt, n_opt) = scan.optimum();
    let mhz = angular_to_mhz(d_opt);
    c.within("Δ_opt (MHz)", mhz, 2.4 - 0.5, 2.4 + 0.5);
    c.rel("peak yield", n_opt, 580.0, 0.10);
    c.finish();
}

#[test]
fn c3_duration_saturation() {
    let mut c = Criterion::new("C3");
    let p = TransitionParams::rubidium85();
    let kin = AtomKinematics::falling();
    let beam = rb85_beam(&p, 3.0, 1.0);
    let short: Vec<f64> = [10e-6, 20e-6, 30e-6, 40e-6, 50e-6, 60e-6].iter().map(|t| t * kin.v_perp).collect();
    let long: Vec<f64> = [250e-6, 300e-6, 400e-6, 600e-6, 1000e-6].iter().map(|t| t * kin.v_perp).collect();
    for (dz, d) in fluorescence_duration_scan(&p, &beam, &kin, &short, DEFAULT_EXIT_FRACTION, DEFAULT_STEP).unwrap() {
        let dtau = dz / kin.v_perp;
        c.rel(&format!("duration ≈ Δτ at Δτ = {:.0} µs (µs)", dtau * 1e6), d * 1e6, dtau * 1e6, 0.10);
    }
    for (dz, d) in fluorescence_duration_scan(&p, &beam, &kin, &long, DEFAULT_EXIT_FRACTION, DEFAULT_STEP).unwrap() {
        c.rel(&format!("plateau at Δτ = {:.0} µs (µs)", dz / kin.v_perp * 1e6), d * 1e6, 120.0, 0.20);
    }
    c.finish();
}

/// Exact Poisson probabilities with rational λ: partial sums of λᵏ/k! up to
/// `terms`, normalized by the full series (truncation below 1e-40 here).
fn rational_poisson(lambda: &BigRational, terms: u32) -> Vec<BigRational> {
    let mut term = BigRational::one();
    let mut out = vec![term.clone()];
    for k in 1..terms {
        term = term * lambda / BigRational::from_integer(BigInt::from(k));
        out.push(term.clone());
    }
    out
}

fn big_to_f64(x: &BigRational) -> f64 {
    let scale = BigInt::one() << 400u32;
    let scaled = (x * BigRational::from_integer(scale.clone())).to_integer();
    scaled.to_f64().unwrap() / scale.to_f64().unwrap()
}

/// P(X ≥ n) and P(X < n) for X ~ Poisson(num/den), exactly in rationals.
fn oracle_tails(num: i64, den: i64, n: u32) -> (f64, f64) {
    let lambda = BigRational::new(BigInt::from(num), BigInt::from(den));
    let terms = rational_poisson(&lambda, 160);
    let total: BigRational = terms.iter().fold(BigRational::zero(), |a, b| a + b);
    let below: BigRational = terms[..n as usize].iter().fold(BigRational::zero(), |a, b| a + b);
    let upper = (&total - &below) / &total;
    let lower = below / total;
    (big_to_f64(&upper), big_to_f64(&lower))
}

#[test]
fn c4_poisson_error_oracle() {
    let mut c = Criterion::new("C4");
    let r = poisson_error_rates(0.56, 20.4, 6).unwrap();
    c.rel("fake = P(X ≥ 6 | 0.56)", r.fake, 2.7e-5, 0.10);
    c.rel("miss = P(X < 6 | 20.4 + 0.56)", r.miss, 3.4e-5, 0.15);

    let (fake_oracle, _) = oracle_tails(56, 100, 6);
    let (_, miss_oracle) = oracle_tails(2096, 100, 6);
    c.check(
        "fake agrees with rational oracle",
        ((r.fake - fake_oracle) / fake_oracle).abs() < 1e-12,
        format!("{:.15e} vs {:.15e}", r.fake, fake_oracle),
    );
    c.check(
        "miss agrees with rational oracle",
        ((r.miss - miss_oracle) / miss_oracle).abs() < 1e-12,
        format!("{:.15e} vs {:.15e}", r.miss, miss_oracle),
    );

    // Occupancy of a 60 µs window at R_A = 1.8 kHz.
    let occupancy = 1.8e3 * 60e-6;
    let t = optimal_threshold(0.56, 20.4, occupancy).unwrap();
    c.check("optimal_threshold at the operating occupancy", t == 6, format!("{t} (expected 6, occupancy {occupancy})"));
    let equal = optimal_threshold_weighted(0.56, 20.4, 1.0, 1.0).unwrap();
    println!("[INFO] C4 equal-weight threshold (distribution crossing): {equal}");
    c.finish();
}

struct SeedRun {
    total_rate: f64,
    g2_zero: f64,
    delta_tau: f64,
    n_per_atom: f64,
    true_atoms: usize,
    detected: usize,
    missed: usize,
    fake: usize,
}

fn run_seed(seed: u64) -> SeedRun {
    let cfg = SimulationConfig::operating_point(seed);
    let stream = simulate_stream(&cfg).unwrap();
    let est = estimate_g2(&stream, 2e-6, 300e-6).unwrap();
    let fit = fit_g2(&est, cfg.noise_rate, stream.total_rate()).unwrap();
    let report = detect_atoms(&stream, 60e-6, 6).unwrap();
    let truth: Vec<f64> = stream.metadata().truth.as_ref().unwrap().iter().map(|a| ns_to_secs(a.arrival_ns)).collect();
    let m = match_arrivals(&truth, &report.atom_arrivals, cfg.interaction_time());
    SeedRun {
        total_rate: stream.total_rate(),
        g2_zero: fit.g2_zero,
        delta_tau: fit.delta_tau,
        n_per_atom: fit.n_per_atom,
        true_atoms: truth.len(),
        detected: report.len(),
        missed: m.missed,
        fake: m.fake,
    }
}

#[test]
fn c5_end_to_end() {
    let mut c = Criterion::new("C5");
    const SEEDS: u64 = 50;
    let runs: Vec<SeedRun> = (0..SEEDS).into_par_iter().map(|s| run_seed(1000 + s)).collect();
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&SeedRun) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let span = |f: &dyn Fn(&SeedRun) -> f64| {
        runs.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };

    c.rel("(a) mean total event rate (Hz)", mean(&|r| r.total_rate), 42.4e3, 0.05);

    let all_in =
        |f: &dyn Fn(&SeedRun) -> f64, lo: f64, hi: f64| runs.iter().filter(|r| (lo..=hi).contains(&f(r))).count();
    let (g_lo, g_hi) = span(&|r| r.g2_zero);
    let k = all_in(&|r| r.g2_zero, 5.5, 7.5);
    c.check(
        "(b) g²(0) in [5.5, 7.5] on every seed",
        k == runs.len(),
        format!("{k}/{} seeds, range [{g_lo:.3}, {g_hi:.3}]", runs.len()),
    );
    let (t_lo, t_hi) = span(&|r| r.delta_tau * 1e6);
    let k = all_in(&|r| r.delta_tau * 1e6, 55.0, 65.0);
    c.check(
        "(b) Δτ = 60 ± 5 µs on every seed",
        k == runs.len(),
        format!("{k}/{} seeds, range [{t_lo:.2}, {t_hi:.2}] µs", runs.len()),
    );
    let (n_lo, n_hi) = span(&|r| r.n_per_atom);
    let k = all_in(&|r| r.n_per_atom, 17.0, 23.0);
    c.check(
        "(c) ⟨N⟩ in [17, 23] on every seed",
        k == runs.len(),
        format!("{k}/{} seeds, range [{n_lo:.2}, {n_hi:.2}]", runs.len()),
    );

    let k = runs
        .iter()
        .filter(|r| (r.detected as f64 - r.true_atoms as f64).abs() <= 3.0 * (r.true_atoms as f64).sqrt())
        .count();
    c.check(
        "(d) detected count within 3σ Poisson of the true count on every seed",
        k == runs.len(),
        format!(
            "{k}/{} seeds; mean true {:.1}, mean detected {:.1}",
            runs.len(),
            mean(&|r| r.true_atoms as f64),
            mean(&|r| r.detected as f64)
        ),
    );

    let predicted = poisson_error_rates(0.56, 20.4, 6).unwrap();
    let atoms: usize = runs.iter().map(|r| r.true_atoms).sum();
    let missed: usize = runs.iter().map(|r| r.missed).sum();
    let expect_miss = atoms as f64 * predicted.miss;
    let sigma_miss = (atoms as f64 * predicted.miss * (1.0 - predicted.miss)).sqrt();
    c.check(
        "(d) miss count consistent with prediction at 3σ binomial",
        (missed as f64 - expect_miss).abs() <= 3.0 * sigma_miss.max(1.0),
        format!("{missed} of {atoms} atoms missed, expected {expect_miss:.3} ± {sigma_miss:.3}"),
    );
    // Background-only windows over all seeds: record length / window, less atom occupancy.
    let windows = n * 0.524 / 60e-6 * (1.0 - 1.8e3 * 60e-6);
    let fakes: usize = runs.iter().map(|r| r.fake).sum();
    let expect_fake = windows * predicted.fake;
    let sigma_fake = (windows * predicted.fake * (1.0 - predicted.fake)).sqrt();
    c.check(
        "(d) fake count consistent with prediction at 3σ binomial",
        (fakes as f64 - expect_fake).abs() <= 3.0 * sigma_fake.max(1.0),
        format!("{fakes} fakes over {} seeds, expected {expect_fake:.2} ± {sigma_fake:.2}", runs.len()),
    );
    c.finish();
}

#[test]
fn c6_exact_model_round_trip() {
    let mut c = Criterion::new("C6");
    let (ra, rn) = (1.8e3, 9.4e3);
    for &re in &[2.0e5, 3.4e5, 5.0e5] {
        for &dt in &[30e-6, 60e-6, 120e-6] {
            let bin = 2e-6;
            let lags: Vec<f64> = (0..150).map(|i| (f64::from(i) + 0.5) * bin).collect();
            let values: Vec<f64> = lags.iter().map(|&l| g2_model(l, ra, re, dt, rn)).collect();
            let norm = 1e6;
            let counts = values.iter().map(|v| (v * norm).round() as u64).collect();
            let est = G2Estimate { lags, values, counts, bin_width: bin, normalization: norm };
            let total = rn + ra * re * dt;
            let fit = fit_g2(&est, rn, total).unwrap();
            let e_re = ((fit.event_rate - re) / re).abs();
            let e_dt = ((fit.delta_tau - dt) / dt).abs();
            c.check(
                &format!("R_E = {:.0} kHz, Δτ = {:.0} µs", re / 1e3, dt * 1e6),
                e_re < 1e-6 && e_dt < 1e-6,
                format!("rel. errors R_E {e_re:.2e}, Δτ {e_dt:.2e} (< 1e-6)"),
            );
        }
    }
    c.finish();
}

fn brute_count(ts: &[u64], w: u64, t: i64) -> u32 {
    ts.iter().filter(|&&e| e as i64 >= t && e as i64 <= t + w as i64).count() as u32
}

/// Upper tail of the χ² distribution by the Wilson–Hilferty cube-root normal
/// approximation, adequate for ≥ 10 degrees of freedom.
fn chi2_z(stat: f64, df: f64) -> f64 {
    let h = 2.0 / (9.0 * df);
    ((stat / df).cbrt() - (1.0 - h)) / h.sqrt()
}

#[test]
fn c7_oracle_equivalence() {
    let mut c = Criterion::new("C7");
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0usize;
    let mut probes = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(0..=1000);
        let horizon = rng.random_range(1_000..5_000_000u64);
        let w = rng.random_range(1..200_000u64);
        let mut ts: Vec<u64> = (0..n).map(|_| rng.random_range(0..horizon)).collect();
        ts.sort_unstable();
        let sc = sliding_count_ns(&ts, w);
        // Every piece boundary, one before it, and random probes.
        let mut at: Vec<i64> = sc.breakpoints.iter().flat_map(|&(t, _)| [t - 1, t]).collect();
        at.extend((0..200).map(|_| rng.random_range(-(w as i64)..horizon as i64 + 1)));
        for t in at {
            probes += 1;
            if sc.at(t) != brute_count(&ts, w, t) {
                mismatches += 1;
            }
        }
    }
    c.check(
        "sliding_count equals brute force on 100 streams",
        mismatches == 0,
        format!("{mismatches} mismatches in {probes} probes"),
    );

    let p = TransitionParams::rubidium85().without_recoil();
    let kin = AtomKinematics::falling();
    let beam = rb85_beam(&p, 2.7, 0.0);
    let transit = transit_for(&p, &beam, &kin, 60e-6, DEFAULT_STEP).unwrap();
    let rate = transit.max_rate();
    let flat = transit.samples.iter().all(|s| (s.rate - rate).abs() <= 1e-9 * rate);
    c.check("transit rate is constant without recoil", flat, format!("R = {rate:.6e} /s"));

    // Gaps between consecutive photons (from t = 0) of many atoms, in 20
    // equiprobable bins of Exp(R).
    const ATOMS: u64 = 400;
    const BINS: usize = 20;
    let mut hist = [0u64; BINS];
    let mut counts = Vec::new();
    for a in 0..ATOMS {
        let mut r = substream_rng(5, Substream::Atom(a));
        let em = emit_photons_for_atom(&transit, 1.0, &mut r).unwrap();
        counts.push(em.detected.len() as f64);
        let mut prev = 0.0;
        for &t in &em.detected {
            let u = 1.0 - (-(t - prev) * rate).exp();
            hist[((u * BINS as f64) as usize).min(BINS - 1)] += 1;
            prev = t;
        }
    }
    let total: u64 = hist.iter().sum();
    let expected = total as f64 / BINS as f64;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let z = chi2_z(chi2, (BINS - 1) as f64);
    c.check(
        "inter-arrival gaps vs Exp(R): χ² within 3σ",
        z.abs() <= 3.0,
        format!("χ² = {chi2:.2}, df = {}, z = {z:.2}", BINS - 1),
    );

    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    let lambda = rate * 60e-6;
    let z_mean = (mean - lambda) / (lambda / counts.len() as f64).sqrt();
    c.check(
        "photons per atom: mean = RΔτ within 3σ",
        z_mean.abs() <= 3.0,
        format!("{mean:.2} vs {lambda:.2}, z = {z_mean:.2}"),
    );
    // Var of the sample variance of Poisson(λ) ≈ (λ + 2λ²/(n−1)) / n·…; use the normal approximation 2λ²/(n−1).
    let z_var =
        (var - lambda) / (2.0 * lambda * lambda / (counts.len() - 1) as f64 + lambda / counts.len() as f64).sqrt();
    c.check("photons per atom: variance = mean within 3σ", z_var.abs() <= 3.0, format!("var {var:.2}, z = {z_var:.2}"));
    c.finish();
}

#[test]
fn c8_efficiency_cascade() {
    let mut c = Criterion::new("C8");
    let mirrors = efficiency_overall(&EfficiencyChain::mirror_setup());
    c.check("mirror stages", (mirrors - 0.64).abs() < 1e-15, format!("{mirrors} (exact 0.8 × 0.8 = 0.64)"));

    let full = efficiency_overall(&EfficiencyChain::collection().with_detector(0.12).unwrap());
    let exact = 0.8 * 0.8 * 0.99f64.powi(4) * 0.70 * 0.85 * (2.0 / 3.0) * 0.12;
    c.check(
        "full chain equals product of stages",
        ((full - exact) / exact).abs() < 1e-14,
        format!("{full:.10} vs {exact:.10}"),
    );
    c.check(
        "full chain with 12% QE ≈ 3%",
        (full * 100.0).round() == 3.0,
        format!("{:.3}% rounds to {}%", full * 100.0, (full * 100.0).round()),
    );
    let half = efficiency_overall(&EfficiencyChain::collection().with_detector(0.06).unwrap());
    c.check(
        "full chain with 6% QE ≈ 1.5%",
        (half * 1000.0).round() == 15.0,
        format!("{:.3}% rounds to {:.1}%", half * 100.0, (half * 1000.0).round() / 10.0),
    );
    c.finish();
}
