use std::collections::{BTreeMap, BTreeSet};

use counterfact::dseparation::d_separated;
use counterfact::fixtures::{random_binary_cpt, random_dag};
use counterfact::oracle::{ci_test_exact, enumerate_joint, interventional_oracle};
use counterfact::pom::{caliper_match_impute, Covariate, PomRow, PomTable};
use counterfact::scm::{LinearScm, RealAssignment};
use counterfact::stbn::{difference_series, from_dynamics};
use counterfact::{Dag, NodeId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dag_from(seed: u64, max_n: usize) -> (Dag, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let p = rng.random_range(0.1..0.8);
    (random_dag(n, p, &mut rng), rng)
}

fn adjacency(g: &Dag) -> Vec<Vec<bool>> {
    let n = g.len();
    let mut a = vec![vec![false; n]; n];
    for (x, y) in g.edges() {
        a[g.index_of(x.as_str()).unwrap()][g.index_of(y.as_str()).unwrap()] = true;
    }
    a
}

/// Counts simple directed paths by depth-first search over the edge matrix.
fn count_directed(a: &[Vec<bool>], at: usize, to: usize, seen: &mut Vec<bool>) -> usize {
    if at == to {
        return 1;
    }
    seen[at] = true;
    let mut total = 0;
    for next in 0..a.len() {
        if a[at][next] && !seen[next] {
            total += count_directed(a, next, to, seen);
        }
    }
    seen[at] = false;
    total
}

/// Every simple skeleton path from `at` to `to`, as node index lists.
fn skeleton_paths(
    a: &[Vec<bool>],
    at: usize,
    to: usize,
    trail: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    trail.push(at);
    if at == to {
        out.push(trail.clone());
    } else {
        for next in 0..a.len() {
            if (a[at][next] || a[next][at]) && !trail.contains(&next) {
                skeleton_paths(a, next, to, trail, out);
            }
        }
    }
    trail.pop();
}

fn descendants(a: &[Vec<bool>], v: usize) -> Vec<bool> {
    let mut seen = vec![false; a.len()];
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        if !seen[x] {
            seen[x] = true;
            stack.extend((0..a.len()).filter(|&y| a[x][y]));
        }
    }
    seen
}

/// Textbook blocking rule applied to every path.
fn separated_by_paths(a: &[Vec<bool>], x: usize, y: usize, z: &[bool]) -> bool {
    let mut paths = Vec::new();
    skeleton_paths(a, x, y, &mut Vec::new(), &mut paths);
    paths.iter().all(|p| {
        (1..p.len() - 1).any(|k| {
            let (prev, mid, next) = (p[k - 1], p[k], p[k + 1]);
            if a[prev][mid] && a[next][mid] {
                !descendants(a, mid).iter().zip(z).any(|(d, zz)| *d && *zz)
            } else {
                z[mid]
            }
        })
    })
}

fn close(a: &RealAssignment, b: &RealAssignment, tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .all(|(k, v)| b.get(k).is_some_and(|w| (v - w).abs() <= tol))
}

fn random_linear(seed: u64) -> (LinearScm, ChaCha8Rng) {
    let (g, mut rng) = dag_from(seed, 8);
    let coeff = g
        .edges()
        .map(|(a, b)| ((a.clone(), b.clone()), rng.random_range(-2.0..2.0)))
        .collect();
    (LinearScm::new(g, coeff, BTreeMap::new()).unwrap(), rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn directed_path_count_matches_search(seed in any::<u64>()) {
        let (g, _) = dag_from(seed, 8);
        let a = adjacency(&g);
        for (i, u) in g.nodes().iter().enumerate() {
            for (j, v) in g.nodes().iter().enumerate() {
                if i != j {
                    let got = g.directed_paths(u.as_str(), v.as_str(), &BTreeSet::new()).unwrap().len();
                    prop_assert_eq!(got, count_directed(&a, i, j, &mut vec![false; a.len()]));
                }
            }
        }
    }

    #[test]
    fn dseparation_matches_path_blocking(seed in any::<u64>(), mask in any::<u8>()) {
        let (g, _) = dag_from(seed, 7);
        let a = adjacency(&g);
        let n = g.len();
        let (x, y) = (0, n - 1);
        let z: Vec<bool> = (0..n).map(|i| i != x && i != y && mask >> i & 1 == 1).collect();
        let zs: BTreeSet<NodeId> = (0..n).filter(|&i| z[i]).map(|i| g.label(i).clone()).collect();
        let got = d_separated(
            &g,
            &BTreeSet::from([g.label(x).clone()]),
            &BTreeSet::from([g.label(y).clone()]),
            &zs,
        ).unwrap();
        prop_assert_eq!(got, separated_by_paths(&a, x, y, &z));
    }

    #[test]
    fn separation_implies_independence(seed in any::<u64>(), mask in any::<u8>()) {
        let (g, mut rng) = dag_from(seed, 6);
        let m = random_binary_cpt(&g, &mut rng);
        let joint = enumerate_joint(&m).unwrap();
        let n = g.len();
        let x = BTreeSet::from([g.label(0).clone()]);
        let y = BTreeSet::from([g.label(n - 1).clone()]);
        let z: BTreeSet<NodeId> = (1..n - 1).filter(|i| mask >> i & 1 == 1).map(|i| g.label(i).clone()).collect();
        if d_separated(&g, &x, &y, &z).unwrap() {
            prop_assert!(ci_test_exact(&joint, &x, &y, &z).unwrap());
        }
    }

    #[test]
    fn abduction_inverts_evaluation(seed in any::<u64>()) {
        let (m, mut rng) = random_linear(seed);
        let u: RealAssignment = m.noise().values().map(|n| (n.name.clone(), rng.random_range(-3.0..3.0))).collect();
        let x = m.evaluate(&u).unwrap();
        prop_assert!(close(&m.abduct(&x).unwrap(), &u, 1e-9));
        prop_assert!(close(&m.evaluate(&m.abduct(&x).unwrap()).unwrap(), &x, 1e-9));
    }

    #[test]
    fn intervening_on_observed_values_changes_nothing(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (m, mut rng) = random_linear(seed);
        let x: RealAssignment = m.graph().nodes().iter().map(|v| (v.clone(), rng.random_range(-3.0..3.0))).collect();
        let v = pick.get(m.graph().nodes()).clone();
        let act = BTreeMap::from([(v.clone(), x[&v])]);
        prop_assert_eq!(m.counterfactual(&x, &act).unwrap(), x);
    }

    #[test]
    fn wider_calipers_never_lose_matches(seed in any::<u64>(), r in 0.05f64..2.0, grow in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<PomRow> = (0..rng.random_range(4..30))
            .map(|i| PomRow {
                unit: format!("u{i}"),
                covariates: (0..2).map(|_| Covariate::Real(rng.random_range(-1.0..1.0))).collect(),
                treatment: (i % 2) as u8,
                outcome: rng.random_range(0.0..10.0),
            })
            .collect();
        let t = PomTable::new(rows).unwrap();
        let narrow = caliper_match_impute(&t, r).unwrap();
        let wide = caliper_match_impute(&t, r + grow).unwrap();
        for (a, b) in narrow.units.iter().zip(&wide.units) {
            prop_assert!(a.matches <= b.matches);
        }
        prop_assert!(wide.unmatched().count() <= narrow.unmatched().count());
    }

    #[test]
    fn dynamics_round_trip(bits in prop::collection::vec(any::<bool>(), 1..=25)) {
        let n = (bits.len() as f64).sqrt() as usize;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i != j && bits[i * n + j] { 1.0 } else { 0.0 }).collect())
            .collect();
        prop_assert_eq!(from_dynamics(&a).unwrap().adjacency().unwrap(), a);
    }

    #[test]
    fn differencing_removes_linear_drift(
        start in prop::collection::vec(-10.0f64..10.0, 1..4),
        len in 2usize..20,
    ) {
        let drift: Vec<f64> = (0..start.len()).map(|k| 0.5 * k as f64 - 1.0).collect();
        let series: Vec<Vec<f64>> = (0..len)
            .map(|t| start.iter().zip(&drift).map(|(s, d)| s + d * t as f64).collect())
            .collect();
        for step in difference_series(&series).unwrap() {
            for (got, want) in step.iter().zip(&drift) {
                prop_assert!((got - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn oracle_distributions_are_normalized(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (g, mut rng) = dag_from(seed, 7);
        let m = random_binary_cpt(&g, &mut rng);
        let joint = enumerate_joint(&m).unwrap();
        prop_assert!((joint.total() - 1.0).abs() < 1e-12);
        let v = pick.get(g.nodes());
        let target = g.nodes().iter().find(|w| *w != v).unwrap();
        let d = interventional_oracle(&m, &BTreeMap::from([(v.clone(), "1".to_string())]), target.as_str()).unwrap();
        prop_assert!((d.as_map().values().sum::<f64>() - 1.0).abs() < 1e-12);
        // Marginalizing the joint one variable at a time agrees with the full marginal.
        let pair = joint.marginal(&[0, 1]);
        let single = joint.marginal(&[0]);
        for k in 0..2 {
            prop_assert!((pair[2 * k] + pair[2 * k + 1] - single[k]).abs() < 1e-12);
        }
    }
}
