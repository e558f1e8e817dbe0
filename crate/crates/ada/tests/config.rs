use ada::config::RunConfig;
use proptest::prelude::*;

#[test]
fn every_key_is_rendered() {
    let text = RunConfig::default().render();
    for key in ["[run]", "seed = 0", "[ada]", "nu = 0.015", "step_size = auto", "kinds = all", "mode = steps"] {
        assert!(text.contains(key), "missing {}", key);
    }
}

#[test]
fn bad_values_name_their_key() {
    for (text, line, key) in [
        ("[ada]\nnu = fast\n", 2, "ada.nu"),
        ("[pipeline]\nada = yes\n", 2, "pipeline.ada"),
        ("[eval]\n\n\nkinds = fog\n", 4, "eval.kinds"),
        ("[attack]\nnorms = l3\n", 2, "attack.norms"),
        ("[corruption]\narch = vqvae\n", 2, "corruption.arch"),
        ("[sweep]\nmode = both\n", 2, "sweep.mode"),
        ("[run]\nseed\n", 2, "seed"),
        ("[run\n", 1, "[run"),
    ] {
        let e = RunConfig::parse(text).unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (line, key), "{}", text);
    }
}

proptest! {
    #[test]
    fn render_parse_round_trip(seed in any::<u64>(), nu in 0.0f64..1.0, lr in 1e-6f64..1.0, steps in 0usize..50, ada in any::<bool>()) {
        let mut c = RunConfig::default();
        c.run.seed = seed;
        c.ada.nu = nu;
        c.train.lr = lr;
        c.ada.steps = steps;
        c.pipeline.ada = ada;
        c.noise.etas = vec![nu, lr];
        prop_assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }
}
