use num::{One, Zero};
use proptest::prelude::*;

use ucat::circle::{ucat_circle, CirclePL};
use ucat::exact::{q, qi, Q};
use ucat::graph::{is_unimodal_graph, path_value, GeometricGraph, GraphPL, GraphPoint, UnimodalMode};
use ucat::pl_line::{DomainKind, Interval, PLFunction, VariationKind};
use ucat::sweep::{decompose_line, oracle_m, sweep_count, ucat_line, Exponent};
use ucat::theory::{karamata_check, majorizes};

fn line(vals: &[i64]) -> PLFunction {
    let mut vs = vec![Q::zero()];
    vs.extend(vals.iter().map(|&v| qi(v)));
    vs.push(Q::zero());
    let xs = (0..vs.len() as i64).map(qi).collect();
    PLFunction::new(xs, vs, DomainKind::Line).unwrap()
}

fn vals() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..6, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_decomposition_is_exact(v in vals()) {
        let f = line(&v);
        let d = decompose_line(&f).unwrap();
        prop_assert!(d.all_unimodal());
        prop_assert!(d.sums_to(&f).unwrap());
        prop_assert_eq!(d.len(), sweep_count(&f).unwrap());
        prop_assert_eq!(d.len(), oracle_m(&f).unwrap());
    }

    #[test]
    fn variations_add_up(v in vals(), lo in 0i64..6, w in 1i64..8) {
        let f = line(&v);
        let j = Interval::open(Some(q(lo, 2)), Some(q(lo + w, 2)));
        let pos = f.variation_base(VariationKind::Positive, &j).unwrap();
        let neg = f.variation_base(VariationKind::Negative, &j).unwrap();
        let tot = f.variation_base(VariationKind::Total, &j).unwrap();
        prop_assert_eq!(&pos + &neg, tot);
        let whole = Interval::whole();
        prop_assert_eq!(
            f.variation_base(VariationKind::Positive, &whole).unwrap(),
            f.variation_base(VariationKind::Negative, &whole).unwrap()
        );
    }

    #[test]
    fn ucat_ignores_scaling(v in vals(), k in 1i64..7) {
        let f = line(&v);
        let g = line(&v.iter().map(|x| x * k).collect::<Vec<_>>());
        prop_assert_eq!(ucat_line(&f, &Exponent::one()).unwrap(), ucat_line(&g, &Exponent::one()).unwrap());
    }

    #[test]
    fn squaring_never_lowers_ucat(v in vals()) {
        let f = line(&v);
        let a = ucat_line(&f, &Exponent::one()).unwrap();
        let b = ucat_line(&f, &Exponent::Finite(qi(2))).unwrap();
        prop_assert!(a <= b);
    }

    #[test]
    fn circle_rotation_keeps_ucat(v in prop::collection::vec(1i64..6, 3..9), k in 0i64..8) {
        let n = v.len() as i64;
        let f = CirclePL::new((0..n).map(|i| q(i, n)).collect(), v.iter().map(|&x| qi(x)).collect()).unwrap();
        let a = ucat_circle(&f, &Q::one()).unwrap().ucat;
        let b = ucat_circle(&f.rotate(&q(k, 8)), &Q::one()).unwrap().ucat;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sorted_sequence_majorizes_its_average(v in prop::collection::vec(0i64..9, 2..7)) {
        let mut a: Vec<Q> = v.iter().map(|&x| qi(x)).collect();
        a.sort_by(|x, y| y.cmp(x));
        let mean = a.iter().sum::<Q>() / Q::from_integer((a.len() as i64).into());
        let b = vec![mean; a.len()];
        prop_assert!(majorizes(&a, &b).unwrap());
        prop_assert!(karamata_check(&a, &b, &qi(2)).unwrap());
        prop_assert!(karamata_check(&a, &b, &q(1, 2)).unwrap());
    }

    #[test]
    fn path_values_are_symmetric(v in prop::collection::vec(0i64..6, 5), s in 0usize..5, t in 0usize..5) {
        let ids: Vec<String> = (0..5).map(|i| format!("v{i}")).collect();
        let es: Vec<(String, String)> = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]
            .iter()
            .map(|&(a, b)| (ids[a].clone(), ids[b].clone()))
            .collect();
        let g = GeometricGraph::new(ids.iter().map(|i| (i.clone(), None)).collect(), &es).unwrap();
        let gf = GraphPL::new(g, v.iter().map(|&x| qi(x)).collect()).unwrap();
        let st = path_value(&gf, &GraphPoint::Vertex(ids[s].clone()), &GraphPoint::Vertex(ids[t].clone())).unwrap();
        let ts = path_value(&gf, &GraphPoint::Vertex(ids[t].clone()), &GraphPoint::Vertex(ids[s].clone())).unwrap();
        prop_assert_eq!(st.as_rational(), ts.as_rational());
        let scaled = gf.scaled(&qi(3));
        prop_assert_eq!(
            is_unimodal_graph(&gf, UnimodalMode::Contractible),
            is_unimodal_graph(&scaled, UnimodalMode::Contractible)
        );
    }
}
