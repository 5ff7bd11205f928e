// Every example doubles as a smoke test. The accuracy study is left to the
// acceptance suite, which runs it at full size.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(exact_permanent);
example!(cyclic_ratios);
example!(closed_forms);
example!(finite_classifier);
example!(partition_crp);
example!(cross_validation);
example!(chequerboard_table);
example!(microarray_pipeline);
example!(bench_orders);
example!(config_and_provenance);
