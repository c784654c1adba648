use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cpd_core::cartan::{cartan_projection, element_with_projection, random_rotation, GroupElement};
use cpd_core::gauge::polyhedral_gauge;
use cpd_core::orbit::{
    read_dataset_from, write_dataset_to, DatasetHeader, DedupMode, OrbitDataset, OrbitRecord,
};
use cpd_core::spectrum::{delta_tilde_from_psi, lambda0_from_delta_tilde, lambda0_from_psi};
use cpd_core::synth::{PsiModel, PsiShape};
use cpd_core::verify::random_min_linear;
use cpd_core::{ChamberVector, GroupDescriptor, RootSystem};

const GROUPS: [&str; 4] = ["sl2", "sl3", "sl2xsl2", "sl4"];

fn rs(i: usize) -> RootSystem {
    RootSystem::new(&GROUPS[i].parse::<GroupDescriptor>().unwrap())
}

fn chamber_vector(r: &RootSystem, seed: u64, scale: f64) -> ChamberVector {
    r.random_chamber_vector(&mut ChaCha8Rng::seed_from_u64(seed)).scaled(scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gauge_is_homogeneous(g in 0..4usize, seed: u64, scale in 0.0..30.0f64, s in 0.0..5.0f64, t in 0.01..100.0f64) {
        let r = rs(g);
        let h = chamber_vector(&r, seed, scale);
        let d = polyhedral_gauge(&r, s, &h).unwrap();
        let dt = polyhedral_gauge(&r, s, &h.scaled(t)).unwrap();
        prop_assert!((dt - t * d).abs() <= 1e-12 * dt.abs().max(1.0));
    }

    #[test]
    fn gauge_forms_agree(g in 0..4usize, seed: u64, scale in 0.0..30.0f64, s in 0.0..5.0f64) {
        let r = rs(g);
        let h = chamber_vector(&r, seed, scale);
        let rn = r.rho_norm();
        let pairing: f64 = h.coords().iter().zip(r.rho().coords()).map(|(a, b)| a * b).sum();
        let norm = h.coords().iter().map(|x| x * x).sum::<f64>().sqrt();
        let case_split = if s <= rn { s * pairing / rn } else { pairing + (s - rn) * norm };
        let d = polyhedral_gauge(&r, s, &h).unwrap();
        prop_assert!((d - case_split).abs() <= 1e-12 * d.abs().max(1.0));
        // the gauge sits between the polyhedral and the Riemannian length
        if s <= rn {
            prop_assert!(d <= s * norm + 1e-12 * norm.max(1.0));
        } else {
            prop_assert!(d >= pairing - 1e-12 * pairing.max(1.0));
        }
    }

    #[test]
    fn weyl_group_preserves_the_form(g in 0..4usize, seed: u64, steps in proptest::collection::vec(0..3usize, 0..12)) {
        let r = rs(g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = r.random_vector(&mut rng);
        let w = r.random_vector(&mut rng);
        let (mut v2, mut w2) = (v.clone(), w.clone());
        for i in steps {
            let i = i % r.rank();
            v2 = r.simple_reflection(i, &v2);
            w2 = r.simple_reflection(i, &w2);
        }
        prop_assert!((r.inner(&v, &w) - r.inner(&v2, &w2)).abs() <= 1e-12 * (1.0 + r.norm(&v) * r.norm(&w)));
        let folded = r.fold_into_chamber(&v2);
        prop_assert!(r.in_closed_chamber(&folded));
        prop_assert!((r.norm(&folded) - r.norm(&v)).abs() <= 1e-12 * r.norm(&v).max(1.0));
    }

    #[test]
    fn rho_is_strictly_dominant(g in 0..4usize, seed: u64) {
        let r = rs(g);
        let u = r.normalized(&chamber_vector(&r, seed, 1.0));
        let p = r.rho_pairing(&u);
        prop_assert!(p > 1e-9);
        prop_assert!(p <= r.rho_norm() + 1e-12);
    }

    #[test]
    fn cartan_projection_is_bi_invariant(n in 2..5usize, seed: u64, spread in 0.0..4.0f64) {
        let desc = format!("sl{n}");
        let r = RootSystem::new(&desc.parse::<GroupDescriptor>().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = r.random_vector(&mut rng).scaled(spread);
        let g = element_with_projection(h.coords(), &mut rng);
        let k = random_rotation(n, &mut rng) * &g * random_rotation(n, &mut rng);
        let mu = cartan_projection(&r, &GroupElement::new(vec![g]).unwrap()).unwrap();
        let mu_k = cartan_projection(&r, &GroupElement::new(vec![k]).unwrap()).unwrap();
        let want = r.fold_into_chamber(&h);
        for i in 0..n {
            // rounding the input moves sigma_i by eps * sigma_1 in absolute terms
            let tol = 1e-9 + 100.0 * f64::EPSILON * (want[0] - want[i]).exp();
            prop_assert!((mu[i] - mu_k[i]).abs() <= tol, "{:?} vs {:?}", mu, mu_k);
            prop_assert!((mu[i] - want[i]).abs() <= tol, "{:?} vs {:?}", mu, want);
        }
    }

    #[test]
    fn bottom_of_spectrum_formulas_agree(g in 0..4usize, seed: u64) {
        let r = rs(g);
        let m = random_min_linear(&r, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = lambda0_from_psi(&r, (&m).into());
        let b = lambda0_from_delta_tilde(&r, delta_tilde_from_psi(&r, (&m).into()).value).value;
        prop_assert!((a - b).abs() <= 1e-9);
        prop_assert!((0.0..=r.rho_norm().powi(2)).contains(&a));
    }

    #[test]
    fn modified_exponent_is_monotone(g in 0..4usize, seed: u64, bump in 0.0..1.0f64) {
        let r = rs(g);
        let m = random_min_linear(&r, &mut ChaCha8Rng::seed_from_u64(seed));
        let PsiShape::MinLinear(phis) = &m.shape else { unreachable!() };
        let bigger = PsiModel::min_linear(phis.iter().map(|p| p.add(&r.rho().scaled(bump))).collect()).unwrap();
        let before = delta_tilde_from_psi(&r, (&m).into()).value;
        let after = delta_tilde_from_psi(&r, (&bigger).into()).value;
        prop_assert!(after >= before - 1e-9);
    }

    #[test]
    fn records_round_trip_bit_exact(
        g in 0..4usize,
        seeds in proptest::collection::vec(any::<u64>(), 0..40),
        scale in 0.0..1e6f64,
    ) {
        let r = rs(g);
        let mut records: Vec<OrbitRecord> = seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| OrbitRecord::new(&r, i as u32 / 4, chamber_vector(&r, s, scale), 1.0))
            .collect();
        records.sort_by(|a, b| a.cmp_canonical(b));
        let ds = OrbitDataset {
            header: DatasetHeader {
                group: r.descriptor().clone(),
                synthetic: false,
                form: r.form_label().into(),
                fingerprint: "00".into(),
                max_length: 10,
                dedup: DedupMode::Float,
                weighted: false,
                meta: Vec::new(),
            },
            records,
        };
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.records.len(), ds.records.len());
        for (a, b) in ds.records.iter().zip(&back.records) {
            prop_assert_eq!(a.word_length, b.word_length);
            for (x, y) in a.mu.coords().iter().zip(b.mu.coords()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
