use atma_core::alias::{aliased_coef, aliased_coef_direct, block_spectrum};
use atma_core::beam::{
    angle_grid, argmax_angle, array_factor, beam_angle, radiated_power, AfForm, BeamDirection,
};
use atma_core::link::{simulate_link, LinkParams, ModulationModel};
use atma_core::metrics::{aclr_for, check_constraints, AclrSide};
use atma_core::{ArrayConfig, ModConfig, Precoder};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = ModConfig> {
    (2usize..=8, 1usize..=16, 1usize..=4)
        .prop_filter("O_tau <= A", |(_, a, o)| o <= a)
        .prop_map(|(n, a, o)| ModConfig::new(n, a, o).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factored_and_termwise_aliasing_agree(cfg in config(), d_seed in 0usize..64, i in -40i64..40) {
        let d = d_seed % cfg.delay_count();
        let p = Precoder::alternating(cfg.alias_factor());
        let x = aliased_coef(i, d, &cfg, &p).unwrap();
        let y = aliased_coef_direct(i, d, &cfg, &p).unwrap();
        prop_assert!((x - y).norm() < 1e-12);
    }

    #[test]
    fn aclr_independent_of_delay(cfg in config()) {
        let p = Precoder::alternating(cfg.alias_factor());
        let w = 3 * cfg.alias_factor() as i64;
        let reference = aclr_for(&cfg, &p, AclrSide::Lower).unwrap();
        for d in 0..cfg.delay_count() {
            let s = block_spectrum(&cfg, d, &p, w).unwrap();
            prop_assert!((atma_core::metrics::aclr(&s).unwrap() - reference).abs() < 1e-9);
        }
    }

    #[test]
    fn radiated_power_is_steering_invariant(n in 2usize..=8, o in 1usize..=2, i in -3i64..=3) {
        let cfg = ModConfig::new(n, 2, o).unwrap();
        let acfg = ArrayConfig::new(8, 0.5, 28e9).unwrap();
        let theta = angle_grid(4001);
        let p0 = radiated_power(&theta, &array_factor(&theta, i, 0, &acfg, &cfg, AfForm::Simplified));
        for d in 1..cfg.delay_count() {
            let p = radiated_power(&theta, &array_factor(&theta, i, d, &acfg, &cfg, AfForm::Simplified));
            prop_assert!((p / p0 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn link_is_deterministic(seed in any::<u64>(), snr in 0.0f64..40.0) {
        let cfg = ModConfig::new(4, 4, 2).unwrap();
        let mut params = LinkParams::new(cfg, 8);
        params.seed = seed;
        params.snr_db = Some(snr);
        params.delay = (seed % 8) as usize;
        let a = simulate_link(&params).unwrap();
        let b = simulate_link(&params).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn valid_configs_run_end_to_end(cfg in config()) {
        prop_assume!(check_constraints(&cfg, cfg.n_states()).is_empty());
        let mut params = LinkParams::new(cfg, cfg.n_states());
        params.receiver.equalize_amplitude = true;
        let res = simulate_link(&params).unwrap();
        prop_assert_eq!(res.per_block_gain.len(), cfg.alias_factor());
        prop_assert!(res.measured_evm < 1e-9);
    }
}

#[test]
fn full_and_simplified_patterns_agree_near_broadside() {
    let theta = angle_grid(18001);
    for (n, a, o) in [(2usize, 1usize, 1usize), (4, 1, 1), (4, 8, 2), (2, 8, 1)] {
        let cfg = ModConfig::new(n, a, o).unwrap().with_sample_rate(1e9).unwrap();
        let acfg = ArrayConfig::new(8, 0.5, 100.0 * cfg.pulse_frequency()).unwrap();
        for d in 0..cfg.delay_count() {
            let BeamDirection::Visible(t) = beam_angle(0, d, &cfg, 0.5) else { continue };
            if t.to_degrees().abs() > 15.0 {
                continue;
            }
            let simple = argmax_angle(&theta, &array_factor(&theta, 0, d, &acfg, &cfg, AfForm::Simplified));
            let full = argmax_angle(&theta, &array_factor(&theta, 0, d, &acfg, &cfg, AfForm::Full));
            let diff = (simple.unwrap() - full.unwrap()).abs().to_degrees();
            assert!(diff < 0.1, "N={n} A={a} O={o} d={d}: {diff}");
        }
    }
}

#[test]
fn sample_hold_model_tracks_continuous_model() {
    let cfg = ModConfig::new(4, 8, 2).unwrap();
    let mut params = LinkParams::new(cfg, 8);
    params.delay = 3;
    params.upsample = 64;
    let exact = simulate_link(&params).unwrap();
    params.model = ModulationModel::SampleHold;
    let held = simulate_link(&params).unwrap();
    for (x, y) in exact.per_block_gain.iter().zip(&held.per_block_gain) {
        assert!((x - y).norm() < 1e-3);
    }
}
