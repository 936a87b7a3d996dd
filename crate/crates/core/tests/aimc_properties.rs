use aimc_core::aimc::{
    crossbar_mvm_adc, dac_quantize, lut_build, lut_eval, program_weights, AimcMlp, AimcRbm, LutFunction, QuantConfig,
    QuantPreset,
};
use aimc_core::bench::{run_host_bench, sweep_batch, SimulatedClock, SyntheticProbe};
use aimc_core::numeric::median;
use aimc_core::perf::{map_network, perf_report, ArchConfig};
use aimc_core::ref_models::{rbm_log_psi, Activation, MlpParams, RbmParams, SpinConfiguration, SvddTarget};
use aimc_core::workloads::{enumerate_zero_mag_states, synth_events};
use aimc_core::Error;
use ndarray::Array2;
use proptest::prelude::*;

fn median_error(p: &RbmParams, states: &[SpinConfiguration], q: &QuantConfig) -> f64 {
    let rbm = AimcRbm::program(p, states, q, &ArchConfig::default()).unwrap();
    let aimc = rbm.log_psi_batch(states).unwrap();
    let errors: Vec<f64> = states
        .iter()
        .zip(&aimc)
        .map(|(s, a)| (a - rbm_log_psi(p, s).unwrap()).abs())
        .collect();
    median(&errors).unwrap()
}

#[test]
fn fidelity_improves_with_precision() {
    let states = enumerate_zero_mag_states(16).unwrap();
    let p = RbmParams::random_uniform(16, 2, 0.1, 21);
    let errors: Vec<f64> = [6u32, 8, 10, 12, 14]
        .iter()
        .map(|&bits| {
            let q = QuantConfig {
                adc_bits: bits,
                weight_levels: 1 << bits,
                lut_entries: 1 << bits,
                input_clip_percentile: 100.0,
                adc_clip_percentile: 100.0,
                ..QuantConfig::default()
            };
            median_error(&p, &states, &q)
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
}

#[test]
fn noisy_preset_is_reproducible_and_seed_dependent() {
    let states = enumerate_zero_mag_states(12).unwrap();
    let p = RbmParams::random_uniform(12, 2, 0.3, 4);
    let q = QuantConfig::preset(QuantPreset::Noisy);
    let run = |q: &QuantConfig| {
        AimcRbm::program(&p, &states, q, &ArchConfig::default())
            .unwrap()
            .log_psi_batch(&states)
            .unwrap()
    };
    assert_eq!(run(&q), run(&q));
    let other = QuantConfig { rng_seed: 99, ..q.clone() };
    assert_ne!(run(&q), run(&other));
}

#[test]
fn read_noise_stream_is_per_sample() {
    let events = synth_events(64, 3, 0.1).unwrap().events;
    let p = MlpParams::random_he(&[57, 32, 5], Activation::Elu, 8).unwrap();
    let q = QuantConfig {
        read_noise_sigma: 0.01,
        ..QuantConfig::default()
    };
    let net = AimcMlp::program(&p, SvddTarget::new(5, 1.0).unwrap(), &events, &q, &ArchConfig::default()).unwrap();
    let batch = net.score_batch(&events).unwrap();
    for (k, e) in events.iter().enumerate() {
        assert_eq!(net.score_at(e, k as u64).unwrap(), batch[k]);
    }
}

#[test]
fn lut_error_bound_holds_inside_the_domain() {
    for f in [LutFunction::Log2Cosh, LutFunction::Square] {
        let l = lut_build(f, -3.0, 3.0, 257).unwrap();
        for k in 0..=6000 {
            let x = -3.0 + k as f64 * 1e-3;
            assert!((lut_eval(&l, x) - f.eval(x)).abs() <= l.error_bound() * (1.0 + 1e-12), "{f:?} at {x}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adc_counters_stay_in_range(
        seed in any::<u64>(),
        rows in 1usize..64,
        cols in 1usize..32,
        gain in 1e-3f64..10.0,
        bits in 2u32..12,
    ) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let w = Array2::from_shape_fn((rows, cols), |_| next());
        let q = QuantConfig { adc_bits: bits, adc_gain: gain, ..QuantConfig::default() };
        let xb = program_weights(w.view(), &q).unwrap();
        let x: Vec<i32> = (0..rows).map(|_| dac_quantize(next() * 10.0, 1.0 / 127.0, q.dac_bits)).collect();
        let r = crossbar_mvm_adc(&xb, &x, &q).unwrap();
        for (&p, &n) in r.pos.iter().zip(&r.neg) {
            prop_assert!(p <= q.adc_max() && n <= q.adc_max());
            prop_assert!(p == 0 || n == 0);
        }
    }

    #[test]
    fn dac_codes_are_symmetric_and_bounded(x in -1e6f64..1e6, scale in 1e-4f64..10.0, bits in 2u32..17) {
        let c = dac_quantize(x, scale, bits);
        let max = (1i32 << (bits - 1)) - 1;
        prop_assert!(c.abs() <= max);
        prop_assert_eq!(dac_quantize(-x, scale, bits), -c);
    }

    #[test]
    fn rbm_spin_flip_symmetry_survives_quantization(seed in any::<u64>(), alpha in 1usize..4) {
        let p = RbmParams {
            b: ndarray::Array1::zeros(8 * alpha),
            ..RbmParams::random_uniform(8, alpha, 0.5, seed)
        };
        let states = enumerate_zero_mag_states(8).unwrap();
        let rbm = AimcRbm::program(&p, &states, &QuantConfig::default(), &ArchConfig::default()).unwrap();
        for s in &states {
            prop_assert_eq!(rbm.log_psi_at(s, 0).unwrap(), rbm.log_psi_at(&s.flipped(), 0).unwrap());
        }
    }

    #[test]
    fn pipeline_figures_depend_only_on_depth(
        dims in prop::collection::vec((1usize..=512, 1usize..=512), 1..=4),
    ) {
        let arch = ArchConfig::default();
        let m = map_network("w", &dims, &arch).unwrap();
        let r = perf_report(&m, &arch).unwrap();
        prop_assert_eq!(r.throughput, 1.0 / arch.t_stage);
        prop_assert_eq!(r.latency, (dims.len() + 1) as f64 * arch.t_stage);
        let expected = dims.len() as f64 * (arch.p_xbar + arch.p_ldpu) + arch.p_dpu;
        prop_assert!((r.power - expected).abs() <= 1e-15);
        prop_assert_eq!(r.energy_per_inference, r.power / r.throughput);
    }

    #[test]
    fn oversized_layers_are_rejected(rows in 1usize..2048, cols in 1usize..2048) {
        let out = map_network("w", &[(rows, cols)], &ArchConfig::default());
        if rows > 512 || cols > 512 {
            let unmappable = matches!(out, Err(Error::Unmappable { .. }));
            prop_assert!(unmappable);
        } else {
            prop_assert!(out.is_ok());
        }
    }

    #[test]
    fn bench_identities_hold_exactly(
        rate in 1e-3f64..1e4,
        batch in 1usize..5000,
        per_sample in 1e-10f64..1e-5,
        overhead in 0.0f64..1e-3,
        min_fraction in 0.5f64..0.999,
    ) {
        let mut probe = SyntheticProbe::new(rate).unwrap();
        let mut clock = SimulatedClock::default();
        clock.per_sample = per_sample;
        clock.batch_overhead = overhead;
        let mut runner = |_: &[u32]| Ok(());
        let r = run_host_bench(&mut runner, &[1u32, 2, 3], batch, &mut probe, &mut clock, min_fraction).unwrap();
        let n = r.samples as f64;
        prop_assert_eq!(r.samples, r.repetitions * batch as u64);
        prop_assert_eq!(r.throughput * r.elapsed, n);
        let e = r.energy.unwrap();
        prop_assert_eq!(r.e_sample.unwrap() * n, e);
        prop_assert!((r.e_sample.unwrap() * r.throughput - rate).abs() <= 1e-9 * rate);
        prop_assert!(r.compute_fraction >= min_fraction);
    }

    #[test]
    fn constant_rate_sweep_picks_the_fastest_batch(rate in 0.1f64..1000.0, overhead in 1e-7f64..1e-3) {
        let mut probe = SyntheticProbe::new(rate).unwrap();
        let mut clock = SimulatedClock::default();
        clock.batch_overhead = overhead;
        let mut runner = |_: &[u8]| Ok(());
        let candidates = [16, 100, 1024, 5000, 12870];
        let (best, results) = sweep_batch(&mut runner, &[0u8], &candidates, &mut probe, &mut clock, 0.99).unwrap();
        let fastest = results.iter().max_by(|a, b| a.throughput.total_cmp(&b.throughput)).unwrap();
        let frugal = results.iter().min_by(|a, b| a.e_sample.unwrap().total_cmp(&b.e_sample.unwrap())).unwrap();
        prop_assert_eq!(best, fastest.batch);
        prop_assert_eq!(fastest.batch, frugal.batch);
    }
}
