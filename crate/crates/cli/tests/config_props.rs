use cmt_scatter::config::{parse_config, parse_real, Quantity, Sweep};
use proptest::prelude::*;

proptest! {
    #[test]
    fn plain_numbers_round_trip(x in -1e6f64..1e6) {
        prop_assert_eq!(parse_real(&x.to_string()), Some(x));
    }

    #[test]
    fn pi_multiples_scale(k in 0.0f64..10.0) {
        let v = parse_real(&format!("{k} pi")).unwrap();
        prop_assert!((v - k * std::f64::consts::PI).abs() <= 1e-15 * v.abs().max(1.0));
    }

    #[test]
    fn sweeps_are_monotone_with_exact_ends(start in -5.0f64..5.0, span in 1e-3f64..10.0, points in 2usize..2000) {
        let sweep = Sweep { quantity: Quantity::Energy, start, stop: start + span, points };
        let v = sweep.values();
        prop_assert_eq!(v.len(), points);
        prop_assert_eq!(v[0], start);
        prop_assert_eq!(v[points - 1], start + span);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn chain_configs_round_trip(sites in 1usize..50, t in 0.01f64..2.0, points in 2usize..100) {
        let text = format!("[model]\nkind = chain1d\nN = {sites}\nt = {t}\n[sweep]\nquantity = E\nstart = 0.1\nstop = 3.9\npoints = {points}\n");
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.sweep.unwrap().points, points);
        prop_assert_eq!(cfg.incoming, vec![0]);
    }

    #[test]
    fn garbage_lines_are_reported_not_panicked(line in "[ -~]{0,40}") {
        let text = format!("[model]\nkind = chain1d\nN = 3\nt = 0.5\n{line}\n");
        if let Err(errors) = parse_config(&text) {
            prop_assert!(!errors.0.is_empty());
        }
    }
}
