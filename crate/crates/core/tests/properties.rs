use proptest::prelude::*;
use seamsim_core::circuit::{build_memory_circuit, parse, serialize};
use seamsim_core::decoder::dem::xor_combine;
use seamsim_core::decoder::{extract_dem, RestrictionDecoder};
use seamsim_core::experiment::{wilson_ci, z_detector_colors};
use seamsim_core::framesim::Sampler;
use seamsim_core::lattice::build_lattice;
use seamsim_core::noise::{attenuation, expected_wait, idle_pauli_probs, round_idle_time, NoiseParams};
use seamsim_core::partition::{monolithic, partition_lattice};
use seamsim_core::schedule::{plan_rounds, tau_star, CrossoverRate, Policy};

fn policy() -> impl Strategy<Value = Policy> {
    prop_oneof![
        Just(Policy::MeasureAll),
        Just(Policy::Monolithic),
        (1usize..8).prop_map(|tau| Policy::SkipSeam { tau }),
        (1e5f64..1e9).prop_map(|r| Policy::Adaptive { r_c: CrossoverRate::Fixed(r) }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn idle_channel_is_valid_and_monotone(dt in 0.0f64..1e-3, extra in 0.0f64..1e-3, t1 in 1e-6f64..1e-3, frac in 0.1f64..2.0) {
        let t2 = t1 * frac;
        let a = idle_pauli_probs(dt, t1, t2).unwrap();
        let b = idle_pauli_probs(dt + extra, t1, t2).unwrap();
        for ch in [a, b] {
            prop_assert!(ch.p_x >= 0.0 && ch.p_z >= 0.0 && ch.p_x == ch.p_y);
            prop_assert!(ch.total() <= 0.75 + 1e-12);
        }
        prop_assert!(b.p_x >= a.p_x);
        prop_assert!(b.p_x + b.p_z >= a.p_x + a.p_z - 1e-15);
    }

    #[test]
    fn wait_is_quadratic_in_pairs(n in 0usize..200, links in 1u32..8, len in 0.0f64..20_000.0, egr in 1e5f64..1e9) {
        let p_att = attenuation(len, 0.2);
        prop_assert!(p_att > 0.0 && p_att <= 1.0);
        let w1 = expected_wait(n, links, p_att, egr).unwrap();
        let w2 = expected_wait(2 * n, links, p_att, egr).unwrap();
        prop_assert!((w2 - 4.0 * w1).abs() <= 1e-12 * w2.max(1e-300));
        let params = NoiseParams { egr, links, fiber_length_m: len, ..NoiseParams::default() };
        let idle = round_idle_time(n, &params).unwrap();
        prop_assert!(idle >= params.t_ro && idle >= w1);
    }

    #[test]
    fn wilson_brackets_the_rate(n in 1u64..1_000_000, k_frac in 0.0f64..=1.0) {
        let k = ((n as f64) * k_frac) as u64;
        let (lo, hi) = wilson_ci(k, n, 1.96).unwrap();
        let rate = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= rate && rate <= hi && hi <= 1.0);
        let (lo99, hi99) = wilson_ci(k, n, 2.576).unwrap();
        prop_assert!(lo99 <= lo && hi99 >= hi);
    }

    #[test]
    fn xor_combine_is_a_parity(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        prop_assert!((xor_combine(a, b) - xor_combine(b, a)).abs() < 1e-15);
        let l = xor_combine(xor_combine(a, b), c);
        let r = xor_combine(a, xor_combine(b, c));
        prop_assert!((l - r).abs() < 1e-12);
        prop_assert_eq!(xor_combine(a, 0.0), a);
        prop_assert!((0.0..=1.0).contains(&xor_combine(a, b)));
    }

    #[test]
    fn policy_strings_round_trip(p in policy()) {
        let back: Policy = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn plans_follow_the_modulo_rule(p in policy(), half in 1usize..12, rounds in 1usize..30, egr in 1e5f64..1e9) {
        let d = 2 * half + 1;
        let plan = plan_rounds(&p, d, rounds, egr).unwrap();
        let tau = p.effective_tau(d, egr).unwrap().max(1);
        prop_assert_eq!(plan.rounds(), rounds);
        prop_assert_eq!(plan.effective_tau, tau);
        for (t, &m) in plan.measure_seam.iter().enumerate() {
            prop_assert_eq!(m, t % tau == 0);
        }
        if let Policy::Adaptive { r_c: CrossoverRate::Fixed(r_c) } = p {
            prop_assert_eq!(tau, tau_star(d, egr, r_c).max(1));
        }
    }

    #[test]
    fn sample_ranges_are_slices(first in 0usize..3000, count in 1usize..1500, seed in any::<u64>()) {
        let c = parse("QUBITS 2\nRZ 0 1\nH 0 !DEP1 0.3\nH 0\nCX 0 1\nMZ 0 1 !FLIP 0.1\nDETECTOR 0\nDETECTOR 0 1\nOBSERVABLE 1\n").unwrap();
        let sampler = Sampler::new(&c).unwrap();
        let all = sampler.sample(first + count, seed);
        let part = sampler.sample_range(first, count, seed);
        for s in 0..count {
            prop_assert_eq!(part.row(s), all.row(first + s));
            prop_assert_eq!(part.observable_flips[s], all.observable_flips[first + s]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compiled_circuits_round_trip(d in prop::sample::select(vec![3usize, 5]), p in policy(), egr in 1e6f64..1e9, seed in any::<u64>()) {
        let l = build_lattice(d).unwrap();
        let part = if p.is_monolithic() { monolithic(&l) } else { partition_lattice(&l, seed).unwrap() };
        let noise = NoiseParams { egr, ..NoiseParams::default() };
        let plan = plan_rounds(&p, d, d, egr).unwrap();
        let e = build_memory_circuit(&l, &part, &plan, &noise, d).unwrap();
        let text = serialize(&e.circuit);
        prop_assert_eq!(parse(&text).unwrap(), e.circuit.clone());
        prop_assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn decoding_is_pure(seed in any::<u64>()) {
        let l = build_lattice(3).unwrap();
        let part = partition_lattice(&l, 0).unwrap();
        let plan = plan_rounds(&Policy::MeasureAll, 3, 3, 5e7).unwrap();
        let e = build_memory_circuit(&l, &part, &plan, &NoiseParams::with_p(0.01), 3).unwrap();
        let dem = extract_dem(&e.circuit);
        let dec = RestrictionDecoder::new(&dem, &z_detector_colors(&e));
        let samples = Sampler::new(&e.circuit).unwrap().sample(64, seed);
        let mut ws = dec.workspace();
        let first: Vec<_> = (0..64).map(|s| dec.decode_row(&mut ws, samples.row(s))).collect();
        let mut fresh = dec.workspace();
        for s in (0..64).rev() {
            prop_assert_eq!(dec.decode_row(&mut fresh, samples.row(s)), first[s]);
            prop_assert_eq!(dec.decode(&mut ws, &samples.fired(s)), first[s]);
        }
    }
}
