//! Round-trip property for the JSON interchange format: parse, serialize
//! and parse again must reproduce the spec exactly.

use fjnet::network::NetworkSpec;
use fjnet::service::ServiceDistribution;
use proptest::prelude::*;

fn service_strategy() -> impl Strategy<Value = ServiceDistribution> {
    prop_oneof![
        (0.0f64..5.0).prop_map(|c| ServiceDistribution::Deterministic { c }),
        (0.1f64..5.0).prop_map(|mean| ServiceDistribution::Exponential { mean }),
        (0.0f64..2.0, 0.0f64..3.0)
            .prop_map(|(lo, width)| ServiceDistribution::Uniform { lo, hi: lo + width }),
        (1u32..6, 0.1f64..5.0)
            .prop_map(|(shape, mean)| ServiceDistribution::Erlang { shape, mean }),
    ]
}

/// Arbitrary DAG: nodes with services plus a subset of forward pairs
/// (acyclic by construction).
fn spec_strategy() -> impl Strategy<Value = NetworkSpec> {
    (1usize..=7)
        .prop_flat_map(|n| {
            let services = prop::collection::vec(service_strategy(), n);
            let pair_count = n * (n - 1) / 2;
            let mask = prop::collection::vec(any::<bool>(), pair_count);
            (services, mask).prop_map(move |(services, mask)| {
                let mut arcs = Vec::new();
                let mut idx = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if mask[idx] {
                            arcs.push((i, j));
                        }
                        idx += 1;
                    }
                }
                NetworkSpec::new(services, arcs).expect("forward arcs are acyclic")
            })
        })
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(spec in spec_strategy()) {
        let text = spec.to_json_string();
        let back = NetworkSpec::from_json_str(&text).unwrap();
        prop_assert_eq!(&spec, &back);
        let twice = NetworkSpec::from_json_str(&back.to_json_string()).unwrap();
        prop_assert_eq!(back, twice);
    }

    #[test]
    fn fingerprint_is_invariant_under_round_trip(spec in spec_strategy()) {
        let back = NetworkSpec::from_json_str(&spec.to_json_string()).unwrap();
        prop_assert_eq!(spec.fingerprint(), back.fingerprint());
    }
}
