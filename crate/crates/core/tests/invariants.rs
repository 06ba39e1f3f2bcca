use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use proptest::prelude::*;

use distlab::census::represented_upto;
use distlab::classify::{top_cap_len, top_cap_split};
use distlab::lattice::{gauss_reduce, GramMatrix, LatticeModel, QuadForm};
use distlab::pointset::LatticePointSet;
use distlab::rational::{format_rational, parse_rational, rat};
use distlab::spectrum::{
    distance_spectrum, distinct_distance_count, energy_of_coords, line_histogram_of_coords, shift_histogram_of_coords,
    spectrum_of_coords,
};

fn points(min_len: usize, max_len: usize, span: i64) -> impl Strategy<Value = Vec<[i64; 2]>> {
    prop::collection::btree_set((-span..=span, -span..=span).prop_map(|(x, y)| [x, y]), min_len..=max_len)
        .prop_map(|s| s.into_iter().collect())
}

fn forms() -> impl Strategy<Value = QuadForm> {
    (1i64..=4, -3i64..=3, 1i64..=6).prop_filter_map("definite and primitive", |(a, b, c)| QuadForm::new(a, b, c).ok())
}

fn diff(p: [i64; 2], q: [i64; 2]) -> [i64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn all_pairs_spectrum(pts: &[[i64; 2]], form: &QuadForm) -> BTreeMap<u64, u64> {
    let mut m = BTreeMap::new();
    for (i, &p) in pts.iter().enumerate() {
        for (j, &q) in pts.iter().enumerate() {
            if i != j {
                *m.entry(form.key(diff(p, q))).or_insert(0) += 1;
            }
        }
    }
    m
}

fn collinear(a: [i64; 2], b: [i64; 2], c: [i64; 2]) -> bool {
    let (u, v) = (diff(b, a), diff(c, a));
    u[0] * v[1] == u[1] * v[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spectrum_matches_all_pairs(pts in points(2, 30, 12), form in forms()) {
        let spec = spectrum_of_coords(&pts, &form).unwrap();
        let got: BTreeMap<u64, u64> = spec.entries.iter().map(|e| (e.key, e.m)).collect();
        prop_assert_eq!(&got, &all_pairs_spectrum(&pts, &form));
        prop_assert!(spec.entries.windows(2).all(|w| w[0].key < w[1].key));
        prop_assert_eq!(spec.total_mass(), (pts.len() * (pts.len() - 1)) as u64);
    }

    #[test]
    fn distinct_count_agrees_with_spectrum(pts in points(2, 40, 20), hex in any::<bool>()) {
        let model = Arc::new(LatticeModel::builtin(if hex { "hex" } else { "Z2" }).unwrap());
        let x = LatticePointSet::from_points(model, pts).unwrap();
        prop_assert_eq!(distinct_distance_count(&x).unwrap(), distance_spectrum(&x).unwrap().k());
    }

    #[test]
    fn energy_counts_additive_quadruples(pts in points(1, 10, 6)) {
        let mut quads = 0u128;
        for a in &pts {
            for b in &pts {
                for c in &pts {
                    for d in &pts {
                        if a[0] + b[0] == c[0] + d[0] && a[1] + b[1] == c[1] + d[1] {
                            quads += 1;
                        }
                    }
                }
            }
        }
        prop_assert_eq!(energy_of_coords(&pts).energy_with_diagonal, quads);
    }

    #[test]
    fn shifts_are_symmetric_and_total_n_squared(pts in points(1, 30, 10)) {
        let h = shift_histogram_of_coords(&pts);
        let mut brute: HashMap<[i64; 2], u64> = HashMap::new();
        for &p in &pts {
            for &q in &pts {
                *brute.entry(diff(p, q)).or_insert(0) += 1;
            }
        }
        for (v, r) in &brute {
            prop_assert_eq!(h.get(*v), *r);
            prop_assert_eq!(h.get([-v[0], -v[1]]), *r);
        }
        let sum_sq: u128 = brute.values().map(|&r| r as u128 * r as u128).sum();
        prop_assert_eq!(h.energy().energy_with_diagonal, sum_sq);
    }

    #[test]
    fn line_histogram_matches_brute_force(pts in points(1, 20, 5)) {
        let lines = line_histogram_of_coords(&pts);
        prop_assert!(lines.identity_holds());
        let n = pts.len();
        if n >= 2 {
            let mut best = 2;
            for i in 0..n {
                for j in i + 1..n {
                    best = best.max(pts.iter().filter(|&&c| collinear(pts[i], pts[j], c)).count() as u64);
                }
            }
            prop_assert_eq!(lines.heaviest().map(|h| h.1), Some(best));
        }
    }

    #[test]
    fn top_cap_square_bound(pts in points(2, 40, 15), theta in 0.01f64..1.0) {
        let x = LatticePointSet::from_points(Arc::new(LatticeModel::builtin("Z2").unwrap()), pts).unwrap();
        let spec = distance_spectrum(&x).unwrap();
        let cap = top_cap_split(&spec, top_cap_len(spec.k(), theta));
        prop_assert!(cap.holds);
        prop_assert_eq!(cap.top_mass + cap.bottom_mass, spec.total_mass());
    }

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = rat(n, d);
        let text = format_rational(&r);
        prop_assert_eq!(parse_rational(&text).unwrap(), r);
    }

    #[test]
    fn reduction_is_an_equivalent_reduced_basis(a in 1i64..50, b in -60i64..60, c in 1i64..50) {
        prop_assume!(b * b < 4 * a * c);
        let g = GramMatrix::new(rat(a, 1), rat(b, 2), rat(c, 1)).unwrap();
        let (change, reduced) = gauss_reduce(&g).unwrap();
        let m = change.m;
        prop_assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
        prop_assert_eq!(g.transform(&change), reduced.clone());
        let two_g12 = reduced.g12.clone() * rat(2, 1);
        prop_assert!(two_g12.clone() <= reduced.g11 && -two_g12 <= reduced.g11);
        prop_assert!(reduced.g11 <= reduced.g22);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn census_matches_enumeration(form in forms(), t in 1u64..3000) {
        let table = represented_upto(&form, t, 1 << 30).unwrap();
        let mut hit = vec![false; t as usize + 1];
        let r = ((4 * form.a.max(form.c) as u64 * t) as f64).sqrt() as i64 + 2;
        for x in -r..=r {
            for y in -r..=r {
                let v = form.eval([x, y]);
                if (x, y) != (0, 0) && v >= 1 && v as u64 <= t {
                    hit[v as usize] = true;
                }
            }
        }
        for v in 1..=t {
            prop_assert_eq!(table.is_represented(v), hit[v as usize], "value {}", v);
        }
        prop_assert_eq!(table.count(), hit.iter().filter(|&&h| h).count() as u64);
    }
}

#[test]
fn unit_square_spectrum() {
    let x = LatticePointSet::from_points(Arc::new(LatticeModel::builtin("Z2").unwrap()), vec![[0, 0], [1, 0], [0, 1], [1, 1]]).unwrap();
    let spec = distance_spectrum(&x).unwrap();
    let got: Vec<(u64, u64)> = spec.entries.iter().map(|e| (e.key, e.m)).collect();
    assert_eq!(got, vec![(1, 8), (2, 4)]);
}
