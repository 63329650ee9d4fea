use distreg::measures::{make_discrete, Points};
use distreg_cli::io::{read_distribution, write_distribution};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn written_distributions_read_back_identically(
        d in 1usize..4,
        raw in prop::collection::vec((prop::array::uniform3(-1e6f64..1e6), 1e-3f64..1.0), 1..30),
    ) {
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let coords: Vec<f64> = raw.iter().flat_map(|r| r.0[..d].to_vec()).collect();
        let weights: Vec<f64> = raw.iter().map(|r| r.1 / total).collect();
        let dist = make_discrete(Points::new(coords, d).unwrap(), weights).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_distribution(std::fs::File::create(&path).unwrap(), &dist).unwrap();
        let back = read_distribution(&path).unwrap();
        prop_assert_eq!(back.atoms().coords(), dist.atoms().coords());
        let same_bits = back.weights().iter().zip(dist.weights()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same_bits);
        prop_assert_eq!(back, dist);
    }
}
