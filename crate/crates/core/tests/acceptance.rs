//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured margin (run with `--nocapture` to see them).
//!
//! Every tolerance is pinned here; the suite is deterministic given the
//! fixed seeds below.

use std::sync::Arc;
use std::time::{Duration, Instant};

use entropytest::counts::word_counts;
use entropytest::entropy::{conditional_entropy, empirical_entropy};
use entropytest::hypothesis::{
    run_code_test, run_predictor_test, CodeEvidence, Decision,
};
use entropytest::measures::{log_measure, LaplacePredictor, MeasureSpec, Predictor};
use entropytest::mc::{estimate_power, estimate_type1, ExperimentSpec, Hypothesis};
use entropytest::rng::SeededRng;
use entropytest::sequence::{parse_str, Alphabet, Sequence};
use entropytest::sources::{random_bernoulli, random_markov, SourceModel, SourceSpec};
use entropytest::verify::{run_group, VerifyGroup};

fn binary() -> Arc<Alphabet> {
    Arc::new(Alphabet::binary())
}

fn all_binary_words(t: usize) -> impl Iterator<Item = Sequence> {
    (0..1usize << t).map(move |code| {
        let word: Vec<u8> = (0..t).rev().map(|b| ((code >> b) & 1) as u8).collect();
        Sequence::from_indices(binary(), word).unwrap()
    })
}

fn budget(start: Instant, limit: Duration, what: &str) -> Duration {
    let elapsed = start.elapsed();
    assert!(
        elapsed < limit,
        "{what} took {elapsed:?}, over the {limit:?} budget"
    );
    elapsed
}

fn bernoulli_spec(p0: f64) -> SourceSpec {
    SourceSpec {
        kind: "bernoulli".into(),
        alphabet: "binary".into(),
        probs: Some(vec![p0, 1.0 - p0]),
        order: None,
        transitions: None,
        initial: None,
        states: None,
        transition: None,
        emission: None,
    }
}

fn markov1_spec(rows: [[f64; 2]; 2]) -> SourceSpec {
    SourceSpec {
        kind: "markov".into(),
        alphabet: "binary".into(),
        probs: None,
        order: Some(1),
        transitions: Some(
            [
                ("0".to_string(), rows[0].to_vec()),
                ("1".to_string(), rows[1].to_vec()),
            ]
            .into_iter()
            .collect(),
        ),
        initial: None,
        states: None,
        transition: None,
        emission: None,
    }
}

/// Criterion 1: exact Type I accounting by full enumeration. With the
/// add-one measure at t=8, m=0, the mass any i.i.d. source places on the
/// rejection region never exceeds the level.
#[test]
fn criterion_01_exact_type1_enumeration() {
    let start = Instant::now();
    let laplace = LaplacePredictor::new(2);
    let mut rng = SeededRng::new(401, 0).rng();
    let sources: Vec<SourceModel> = (0..50)
        .map(|_| SourceModel::Bernoulli(random_bernoulli(binary(), &mut rng)))
        .collect();

    let mut worst = f64::NEG_INFINITY;
    for alpha in [0.1, 0.5] {
        // The rejection region at this level, over all 256 samples.
        let rejected: Vec<Sequence> = all_binary_words(8)
            .filter(|seq| {
                run_predictor_test(seq, 0, &laplace, alpha).unwrap().decision
                    == Decision::Reject
            })
            .collect();
        for tau in &sources {
            let mass: f64 = rejected
                .iter()
                .map(|seq| tau.log_probability(seq).unwrap().exp2())
                .sum();
            worst = worst.max(mass - alpha);
            assert!(
                mass <= alpha + 1e-12,
                "alpha={alpha}: rejection mass {mass} exceeds the level"
            );
        }
    }
    let elapsed = budget(start, Duration::from_secs(5), "criterion 1");
    println!(
        "PASS criterion 1: exact Type I enumeration — max(mass - alpha) = {worst:.3e} over 50 \
         sources x 2 levels, 256 samples each ({elapsed:.2?})"
    );
}

/// Criterion 2: Monte Carlo Type I stays within binomial slack of the level
/// for both an i.i.d. null and a randomized memory-1 null.
#[test]
fn criterion_02_monte_carlo_type1() {
    let start = Instant::now();
    let cap = 0.0646; // 0.05 + 3 sqrt(0.05 * 0.95 / 2000)

    let mut rates = Vec::new();
    // i.i.d. null tested at m = 0.
    let spec = ExperimentSpec {
        hypothesis: Hypothesis::H0,
        order: 0,
        alpha: 0.05,
        measure: "mixture".into(),
        lengths: vec![1000],
        trials: 2000,
        seed: 402,
        source: bernoulli_spec(0.3),
    };
    let report = estimate_type1(&spec).unwrap();
    rates.push(("bernoulli(0.3) m=0", report.cells[0].rejection_rate));

    // Randomized memory-1 null tested at m = 1.
    let mut rng = SeededRng::new(402, 1).rng();
    let chain = random_markov(binary(), 1, 0.05, &mut rng).unwrap();
    let rows = [
        [chain.transition_row(0)[0], chain.transition_row(0)[1]],
        [chain.transition_row(1)[0], chain.transition_row(1)[1]],
    ];
    let spec = ExperimentSpec {
        hypothesis: Hypothesis::H0,
        order: 1,
        alpha: 0.05,
        measure: "mixture".into(),
        lengths: vec![1000],
        trials: 2000,
        seed: 403,
        source: markov1_spec(rows),
    };
    let report = estimate_type1(&spec).unwrap();
    rates.push(("random markov-1 m=1", report.cells[0].rejection_rate));

    for (name, rate) in &rates {
        assert!(rate <= &cap, "{name}: rejection rate {rate} above {cap}");
    }
    let elapsed = budget(start, Duration::from_secs(120), "criterion 2");
    println!(
        "PASS criterion 2: Monte Carlo Type I — rates {:?} all <= {cap} at alpha=0.05, N=2000, \
         t=1000 ({elapsed:.2?})",
        rates.iter().map(|(_, r)| *r).collect::<Vec<_>>()
    );
}

/// Criterion 3: power against a sticky memory-1 chain tested at m = 0
/// reaches 0.99 by t=2000 and the power curve is nondecreasing within two
/// binomial standard errors.
#[test]
fn criterion_03_power_curve() {
    let start = Instant::now();
    let spec = ExperimentSpec {
        hypothesis: Hypothesis::H1,
        order: 0,
        alpha: 0.05,
        measure: "mixture".into(),
        lengths: vec![50, 200, 1000, 2000, 5000],
        trials: 500,
        seed: 404,
        source: markov1_spec([[0.9, 0.1], [0.1, 0.9]]),
    };
    let report = estimate_power(&spec).unwrap();
    let rate_at = |t: usize| {
        report
            .cells
            .iter()
            .find(|c| c.t == t)
            .unwrap_or_else(|| panic!("missing cell t={t}"))
            .rejection_rate
    };

    let r2000 = rate_at(2000);
    assert!(r2000 >= 0.99, "power {r2000} at t=2000 below 0.99");

    let trend: Vec<f64> = [50, 200, 1000, 5000].iter().map(|&t| rate_at(t)).collect();
    let n = spec.trials as f64;
    for w in trend.windows(2) {
        let (a, b) = (w[0], w[1]);
        let se = ((a * (1.0 - a) + b * (1.0 - b)) / n).sqrt();
        assert!(
            b >= a - 2.0 * se,
            "power dropped from {a} to {b} (2 SE = {:.4})",
            2.0 * se
        );
    }
    let elapsed = budget(start, Duration::from_secs(180), "criterion 3");
    println!(
        "PASS criterion 3: power curve — rate(t=2000) = {r2000}, trend over \
         t=[50,200,1000,5000] = {trend:?} nondecreasing within 2 SE ({elapsed:.2?})"
    );
}

/// Criterion 4: the add-one estimator's expected step error stays strictly
/// under (n-1)/(t+1) for randomized i.i.d. sources, by exhaustive
/// enumeration.
#[test]
fn criterion_04_laplace_bound() {
    let start = Instant::now();
    let report = run_group(VerifyGroup::LaplaceBound, 405);
    assert!(report.passed, "{}", report.detail);
    let elapsed = budget(start, Duration::from_secs(30), "criterion 4");
    println!("PASS criterion 4: Laplace step-error bound — {} ({elapsed:.2?})", report.detail);
}

/// Criterion 5: every randomized source of memory at most m assigns each
/// sample at most 2^(-(t-m) h*_m), exhaustively over binary samples.
#[test]
fn criterion_05_markov_likelihood_domination() {
    let start = Instant::now();
    let report = run_group(VerifyGroup::AppendixDomination, 406);
    assert!(report.passed, "{}", report.detail);
    let elapsed = budget(start, Duration::from_secs(60), "criterion 5");
    println!(
        "PASS criterion 5: memory-m likelihood domination — {} ({elapsed:.2?})",
        report.detail
    );
}

/// Criterion 6: the measure induced by any Kraft-feasible code table
/// dominates the code lengths.
#[test]
fn criterion_06_code_measure_domination() {
    let start = Instant::now();
    let report = run_group(VerifyGroup::Claim1, 407);
    assert!(report.passed, "{}", report.detail);
    let elapsed = budget(start, Duration::from_secs(5), "criterion 6");
    println!("PASS criterion 6: code-to-measure domination — {} ({elapsed:.2?})", report.detail);
}

/// Criterion 7: induced measures are exact probability distributions on
/// every sample length, exhaustively.
#[test]
fn criterion_07_measure_normalization() {
    let start = Instant::now();
    let report = run_group(VerifyGroup::Normalization, 408);
    assert!(report.passed, "{}", report.detail);
    let elapsed = budget(start, Duration::from_secs(30), "criterion 7");
    println!("PASS criterion 7: measure normalization — {} ({elapsed:.2?})", report.detail);
}

/// Criterion 8: the worked add-one values and the worked pair count.
#[test]
fn criterion_08_worked_values() {
    let start = Instant::now();
    let a = binary();

    // Add-one prediction after 01010.
    let mut laplace: Box<dyn Predictor> = Box::new(LaplacePredictor::new(2));
    for &x in parse_str("01010", &a).unwrap().indices() {
        laplace.update(x);
    }
    let dist = laplace.predict();
    assert!((dist[0] - 4.0 / 7.0).abs() <= 1e-12, "L(0|01010) = {}", dist[0]);
    assert!((dist[1] - 3.0 / 7.0).abs() <= 1e-12, "L(1|01010) = {}", dist[1]);

    // Induced add-one measure of 0101.
    let lp = log_measure(&LaplacePredictor::new(2), &parse_str("0101", &a).unwrap()).unwrap();
    assert!((lp - (1.0f64 / 30.0).log2()).abs() <= 1e-12, "L(0101) = 2^{lp}");

    // Overlapping pair count in 000100.
    let counts = word_counts(&parse_str("000100", &a).unwrap(), 2).unwrap();
    assert_eq!(counts.count(&[0, 0]), 3);

    let elapsed = budget(start, Duration::from_secs(1), "criterion 8");
    println!(
        "PASS criterion 8: worked values — L(0|01010)=4/7, L(1|01010)=3/7, L(0101)=1/30, \
         pair count 3 ({elapsed:.2?})"
    );
}

/// Criterion 9: at t = 100000 the order mixture's per-symbol log-loss sits
/// within 0.05 bits of the entropy rate, and the order-2 plug-in entropy
/// within 0.01 bits of the exact h_2, for at least 19 of 20 randomized
/// binary memory-2 sources.
#[test]
fn criterion_09_universality_surrogate() {
    let start = Instant::now();
    let t = 100_000usize;
    let mut rng = SeededRng::new(409, 0).rng();
    let mixture = MeasureSpec::parse("mixture").unwrap().build_for_test(2, 2);

    let mut rate_hits = 0usize;
    let mut entropy_hits = 0usize;
    let mut max_rate_gap = 0f64;
    let mut max_entropy_gap = 0f64;
    for i in 0..20u64 {
        let src = SourceModel::Markov(random_markov(binary(), 2, 0.05, &mut rng).unwrap());
        let h_rate = conditional_entropy(&src, 2).unwrap().bits_per_symbol();
        let sample = src.sample(t, SeededRng::new(410, i)).unwrap();

        let per_symbol_loss = -log_measure(mixture.as_ref(), &sample).unwrap() / t as f64;
        let rate_gap = (per_symbol_loss - h_rate).abs();
        max_rate_gap = max_rate_gap.max(rate_gap);
        if rate_gap <= 0.05 {
            rate_hits += 1;
        }

        let h_hat = empirical_entropy(&sample, 2).unwrap().bits_per_symbol();
        let entropy_gap = (h_hat - h_rate).abs();
        max_entropy_gap = max_entropy_gap.max(entropy_gap);
        if entropy_gap <= 0.01 {
            entropy_hits += 1;
        }
    }
    assert!(rate_hits >= 19, "mixture log-loss within 0.05 bits for only {rate_hits}/20 sources");
    assert!(
        entropy_hits >= 19,
        "plug-in entropy within 0.01 bits for only {entropy_hits}/20 sources"
    );
    let elapsed = budget(start, Duration::from_secs(120), "criterion 9");
    println!(
        "PASS criterion 9: universality surrogate — log-loss gap <= 0.05 for {rate_hits}/20 \
         (max {max_rate_gap:.4}), plug-in gap <= 0.01 for {entropy_hits}/20 \
         (max {max_entropy_gap:.4}) at t=100000 ({elapsed:.2?})"
    );
}

/// Criterion 10: the code-based test driven by a real compressor rejects a
/// strictly alternating sample and accepts a fair-coin sample.
#[test]
fn criterion_10_code_based_test_end_to_end() {
    let start = Instant::now();
    let codec = ["gzip -c", "xz -c", "bzip2 -c"]
        .iter()
        .map(|cmd| entropytest::codecs::ExternalCodec::new(*cmd))
        .find(|codec| {
            let probe = parse_str("01010101", &binary()).unwrap();
            entropytest::codecs::external_code_length(codec, &probe).is_ok()
        })
        .expect("no compressor (gzip/xz/bzip2) available on PATH");

    let alternating = parse_str(&"01".repeat(50_000), &binary()).unwrap();
    let out = run_code_test(&alternating, 0, CodeEvidence::External(&codec), 0.01).unwrap();
    assert_eq!(
        out.decision,
        Decision::Reject,
        "alternating sample not rejected: statistic {} bits",
        out.statistic_bits
    );
    let reject_stat = out.statistic_bits;

    let coin = SourceModel::Bernoulli(
        entropytest::sources::BernoulliSource::new(binary(), vec![0.5, 0.5]).unwrap(),
    );
    let sample = coin.sample(10_000, SeededRng::new(411, 0)).unwrap();
    let out = run_code_test(&sample, 0, CodeEvidence::External(&codec), 0.01).unwrap();
    assert_eq!(
        out.decision,
        Decision::Accept,
        "fair-coin sample rejected: statistic {} bits",
        out.statistic_bits
    );

    let elapsed = budget(start, Duration::from_secs(30), "criterion 10");
    println!(
        "PASS criterion 10: code-based test with {:?} — alternating rejected \
         (statistic {reject_stat:.0} bits), fair coin accepted (statistic {:.0} bits) \
         ({elapsed:.2?})",
        codec.command(),
        out.statistic_bits
    );
}
