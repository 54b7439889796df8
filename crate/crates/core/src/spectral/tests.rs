use super::*;
use proptest::prelude::*;

/// Cyclic Jacobi eigensolver: (eigenvalues ascending, column eigenvectors).
fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a][a].partial_cmp(&m[b][b]).unwrap());
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let vecs = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (vals, vecs)
}

/// Oracle for the second generalized eigenpair via Jacobi on the normalized Laplacian.
fn oracle_second(w: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = w.len();
    let d: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let l: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    delta - w[i][j] / (d[i] * d[j]).sqrt()
                })
                .collect()
        })
        .collect();
    let (vals, vecs) = jacobi_eigen(&l);
    let x: Vec<f64> = vecs[1].iter().zip(&d).map(|(y, di)| y / di.sqrt()).collect();
    (vals[1], x)
}

/// Minimum NCut over all 2^(n-1) - 1 bipartitions, by direct summation.
fn brute_force_min_ncut(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let d: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut best = f64::INFINITY;
    for bits in 1u32..(1 << (n - 1)) {
        let in_a = |i: usize| bits >> i & 1 == 1;
        let mut cut = 0.0;
        let (mut aa, mut ab) = (0.0, 0.0);
        for i in 0..n {
            if in_a(i) {
                aa += d[i];
            } else {
                ab += d[i];
            }
            for j in 0..n {
                if in_a(i) && !in_a(j) {
                    cut += w[i][j];
                }
            }
        }
        best = best.min(cut / aa + cut / ab);
    }
    best
}

fn graph_of(w: &[Vec<f64>]) -> AffinityGraph {
    let n = w.len();
    AffinityGraph::from_weights(DMatrix::from_fn(n, n, |i, j| w[i][j])).unwrap()
}

fn two_cliques() -> Vec<Vec<f64>> {
    (0..6)
        .map(|i| {
            (0..6)
                .map(|j| if (i < 3) == (j < 3) { 1.0 } else { EPSILON_WEIGHT })
                .collect()
        })
        .collect()
}

fn random_graph(n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        w[i][i] = rng.gen_range(0.1..1.0);
        for j in 0..i {
            let v = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) };
            w[i][j] = v;
            w[j][i] = v;
        }
    }
    w
}

#[test]
fn identical_features_give_unit_weights() {
    let fm = FeatureMap::from_grid(2, 3, 4, [0.3, -1.0, 2.0, 0.5].repeat(6)).unwrap();
    let cos = cosine_similarity(&fm).unwrap();
    assert!(cos.iter().all(|&c| (c - 1.0).abs() < 1e-12));
    let g = build_affinity(&fm, DEFAULT_TAU).unwrap();
    assert!(g.weights().iter().all(|&w| w == 1.0));
    assert!(g.degrees().iter().all(|&d| d == 6.0));
}

#[test]
fn orthogonal_features_get_epsilon() {
    let fm = FeatureMap::from_grid(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let g = build_affinity(&fm, 0.15).unwrap();
    assert_eq!(g.weights()[(0, 1)], EPSILON_WEIGHT);
    assert_eq!(g.weights()[(1, 0)], EPSILON_WEIGHT);
    assert_eq!(g.weights()[(0, 0)], 1.0);
}

#[test]
fn raw_cosine_of_45_degrees() {
    let fm = FeatureMap::from_grid(1, 2, 2, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
    let cos = cosine_similarity(&fm).unwrap();
    assert!((cos[(0, 1)] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    // tau = 0 keeps raw values
    let g = build_affinity(&fm, 0.0).unwrap();
    assert!((g.weights()[(0, 1)] - 0.707_106_781_186_547_5).abs() < 1e-12);
}

#[test]
fn zero_feature_is_rejected() {
    let fm = FeatureMap::from_grid(1, 2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(matches!(
        build_affinity(&fm, 0.15),
        Err(Error::ZeroNormFeature(1))
    ));
    let ok = FeatureMap::from_grid(1, 1, 1, vec![1.0]).unwrap();
    assert!(build_affinity(&ok, 1.0).is_err());
}

#[test]
fn asymmetric_weights_are_rejected() {
    let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
    assert!(AffinityGraph::from_weights(w).is_err());
    let w = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 1.0]);
    assert!(AffinityGraph::from_weights(w).is_err());
}

#[test]
fn two_cliques_split_by_sign() {
    let w = two_cliques();
    let fr = fiedler(&graph_of(&w), DEFAULT_TOL).unwrap();
    assert!(fr.eigenvalue < 1e-3);
    let x = &fr.eigenvector;
    assert!(x[..3].iter().all(|&v| v.signum() == x[0].signum()));
    assert!(x[3..].iter().all(|&v| v.signum() == -x[0].signum()));

    let (lambda, ox) = oracle_second(&w);
    assert!((fr.eigenvalue - lambda).abs() < 1e-10);
    let sign = if ox[0] * x[0] < 0.0 { -1.0 } else { 1.0 };
    for (a, b) in x.iter().zip(&ox) {
        assert!((a - sign * b).abs() < 1e-8);
    }
}

#[test]
fn two_node_closed_form() {
    let w = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
    let fr = fiedler(&graph_of(&w), DEFAULT_TOL).unwrap();
    // d = 1.5; (D - W)[1,-1] = [1,-1] = λ·1.5·[1,-1]
    assert!((fr.eigenvalue - 2.0 / 3.0).abs() < 1e-12);
    let a = 1.0 / 3f64.sqrt();
    assert!((fr.eigenvector[0] - a).abs() < 1e-12);
    assert!((fr.eigenvector[1] + a).abs() < 1e-12);
}

#[test]
fn uniform_graph_is_d_orthogonal_to_constant() {
    let w = vec![vec![0.7; 5]; 5];
    let g = graph_of(&w);
    let fr = fiedler(&g, DEFAULT_TOL).unwrap();
    let dot: f64 = fr.eigenvector.iter().zip(g.degrees()).map(|(x, d)| x * d).sum();
    assert!(dot.abs() < 1e-9);
    // and there is no meaningful split
    assert!(matches!(
        bipartition(&fr, 1, 5),
        Err(Error::DegeneratePartition)
    ));
}

#[test]
fn unit_d_norm_and_sign_convention() {
    let w = random_graph(9, 3);
    let g = graph_of(&w);
    let fr = fiedler(&g, DEFAULT_TOL).unwrap();
    let dn: f64 = fr.eigenvector.iter().zip(g.degrees()).map(|(x, d)| x * x * d).sum();
    assert!((dn - 1.0).abs() < 1e-12);
    let peak = fr
        .eigenvector
        .iter()
        .cloned()
        .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    assert!(peak > 0.0);
}

#[test]
fn single_node_is_an_error() {
    let g = graph_of(&[vec![1.0]]);
    assert!(matches!(fiedler(&g, DEFAULT_TOL), Err(Error::TooFewNodes(1))));
}

#[test]
fn bipartition_thresholds_at_mean() {
    let fr = FiedlerResult {
        eigenvalue: 0.1,
        eigenvector: vec![1.0, 1.0, -1.0, -1.0],
        residual: 0.0,
    };
    let m = bipartition(&fr, 2, 2).unwrap();
    assert_eq!(m.bits(), &[true, true, false, false]);
}

#[test]
fn bipartition_corner_rule_swaps() {
    // the peak sits in a side that covers three corners of a 3x3 grid
    let x = vec![2.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.5];
    let fr = FiedlerResult {
        eigenvalue: 0.1,
        eigenvector: x,
        residual: 0.0,
    };
    let m = bipartition(&fr, 3, 3).unwrap();
    // upper side {0,1,2,3,6} has corners 0,2,6 → swap to the other side
    assert_eq!(
        m.bits(),
        &[false, false, false, false, true, true, false, true, true]
    );
}

#[test]
fn constant_vector_is_degenerate() {
    let fr = FiedlerResult {
        eigenvalue: 0.1,
        eigenvector: vec![0.5; 6],
        residual: 0.0,
    };
    assert!(matches!(
        bipartition(&fr, 2, 3),
        Err(Error::DegeneratePartition)
    ));
}

#[test]
fn block_cliques_recover_planted_membership() {
    // two cliques laid out as the left and right halves of a 2x3 grid
    let member = [true, true, false, true, true, false];
    let n = member.len();
    let w: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if member[i] == member[j] { 1.0 } else { EPSILON_WEIGHT })
                .collect()
        })
        .collect();
    let fr = fiedler(&graph_of(&w), DEFAULT_TOL).unwrap();
    let m = bipartition(&fr, 2, 3).unwrap();
    let fg_is_member = m.bits()[0];
    for i in 0..n {
        assert_eq!(m.bits()[i], member[i] == fg_is_member);
    }
    // the right column clique is smaller and touches only two corners
    assert_eq!(m.bits(), &[false, false, true, false, false, true]);
}

#[test]
fn ncut_two_node_formula() {
    let w = vec![vec![1.0, 0.25], vec![0.25, 2.0]];
    let g = graph_of(&w);
    let v = ncut_value(&g, &[true, false]).unwrap();
    assert!((v - (0.25 / 1.25 + 0.25 / 2.25)).abs() < 1e-15);
    assert!(matches!(ncut_value(&g, &[true, true]), Err(Error::EmptySide)));
}

#[test]
fn ncut_uniform_half_split() {
    // K4 with unit weights and self loops: cut = 4, assoc = 8 each side
    let w = vec![vec![1.0; 4]; 4];
    let v = ncut_value(&graph_of(&w), &[true, true, false, false]).unwrap();
    assert!((v - 1.0).abs() < 1e-15);
}

#[test]
fn ncut_planted_cliques_near_zero() {
    let g = graph_of(&two_cliques());
    let v = ncut_value(&g, &[true, true, true, false, false, false]).unwrap();
    // cut = 9ε, assoc = 9 + 9ε per side
    let eps = EPSILON_WEIGHT;
    let expect = 2.0 * 9.0 * eps / (9.0 + 9.0 * eps);
    assert!((v - expect).abs() < 1e-15);
}

#[test]
fn suppress_covers_rows_and_columns() {
    let mut g = graph_of(&vec![vec![1.0; 3]; 3]);
    g.suppress(&[false, true, false]);
    assert_eq!(g.weights()[(1, 1)], EPSILON_WEIGHT);
    assert_eq!(g.weights()[(0, 1)], EPSILON_WEIGHT);
    assert_eq!(g.weights()[(0, 2)], 1.0);
    assert!((g.degrees()[1] - 3.0 * EPSILON_WEIGHT).abs() < 1e-18);
}

#[test]
fn lanczos_matches_dense() {
    // noisy 3-block graph, large enough to be interesting, small enough for dense
    use rand::{Rng, SeedableRng};
    let n = 90;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let label: Vec<usize> = (0..n).map(|i| if i < 45 { 0 } else if i < 75 { 1 } else { 2 }).collect();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = if label[i] == label[j] {
                1.0
            } else if rng.gen_bool(0.02) {
                1.0
            } else {
                EPSILON_WEIGHT
            };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    let g = AffinityGraph::from_weights(w).unwrap();
    let dense = fiedler_with(&g, DEFAULT_TOL, Solver::Dense).unwrap();
    let lanczos = fiedler_with(&g, DEFAULT_TOL, Solver::Lanczos).unwrap();
    assert!((dense.eigenvalue - lanczos.eigenvalue).abs() < 1e-10);
    for (a, b) in dense.eigenvector.iter().zip(&lanczos.eigenvector) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn fiedler_is_deterministic() {
    let g = graph_of(&random_graph(10, 99));
    let a = fiedler(&g, DEFAULT_TOL).unwrap();
    let b = fiedler(&g, DEFAULT_TOL).unwrap();
    assert_eq!(a.eigenvalue.to_bits(), b.eigenvalue.to_bits());
    assert!(a
        .eigenvector
        .iter()
        .zip(&b.eigenvector)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relaxation_bounds_min_ncut(n in 2usize..=10, seed in any::<u64>()) {
        let w = random_graph(n, seed);
        let g = graph_of(&w);
        let fr = fiedler(&g, DEFAULT_TOL).unwrap();
        prop_assert!(fr.residual <= 1e-8 * fr.eigenvector.iter().map(|v| v * v).sum::<f64>().sqrt());
        prop_assert!(fr.eigenvalue <= brute_force_min_ncut(&w) + 1e-9);
    }

    #[test]
    fn partition_is_scale_invariant(n in 4usize..=12, seed in any::<u64>(), scale in 0.01f64..100.0) {
        let w = random_graph(n, seed);
        // the split is only well defined when the Fiedler vector is unique
        let d: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
        let l: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - w[i][j] / (d[i] * d[j]).sqrt()).collect())
            .collect();
        let (vals, _) = jacobi_eigen(&l);
        prop_assume!(vals[2] - vals[1] > 1e-6);
        let fr = fiedler(&graph_of(&w), DEFAULT_TOL).unwrap();
        let x = &fr.eigenvector;
        let mean = x.iter().sum::<f64>() / n as f64;
        let spread = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        // skip near-ties at the threshold, where rounding legitimately decides
        prop_assume!(x.iter().all(|v| (v - mean).abs() > 1e-6 * spread));
        let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assume!(mags[0] - mags[1] > 1e-6 * spread);
        let scaled: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let fs = fiedler(&graph_of(&scaled), DEFAULT_TOL).unwrap();
        let a = bipartition(&fr, 1, n);
        let b = bipartition(&fs, 1, n);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }
}
