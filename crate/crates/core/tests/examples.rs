//! Every runnable example must run to completion.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().expect(stringify!($name));
        }
    };
}

example!(term_structure);
example!(riccati_cascade);
example!(simulate_paths);
example!(mean_curve);
example!(measure_change);
example!(verify_pricing);
example!(comparison);
example!(from_config);
