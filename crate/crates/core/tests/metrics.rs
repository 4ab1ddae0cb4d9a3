mod common;

use common::*;
use groundspace::embedstore::{CaptionCorpus, RelatednessPair};
use groundspace::evalmetrics::{
    cluster_stats, evaluate, knn_report, mnno, pearson, relatedness, rho_vis, spearman, MetricError, MetricOptions,
};
use groundspace::numcore::cosine;
use groundspace::rng::seeded_rng;
use ndarray::Array2;
use rand::Rng;

const EXACT: f64 = 1e-12;

#[test]
fn correlations_match_brute_force() {
    let mut rng = seeded_rng(201);
    for _ in 0..50 {
        let n = rng.random_range(2..40);
        // Integer values force ties.
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if x.iter().all(|&v| v == x[0]) {
            continue;
        }
        assert!((pearson(&x, &y).unwrap() - pearson_two_pass(&x, &y)).abs() < EXACT);
        assert!((spearman(&x, &y).unwrap() - spearman_oracle(&x, &y)).abs() < EXACT);
    }
}

#[test]
fn hand_ranked_spearman() {
    let x = [1.0, 2.0, 2.0, 3.0];
    let y = [1.0, 3.0, 2.0, 4.0];
    let want = pearson_two_pass(&[1.0, 2.5, 2.5, 4.0], &y);
    assert!((spearman(&x, &y).unwrap() - want).abs() < EXACT);
}

#[test]
fn structural_measures_match_brute_force() {
    let mut rng = seeded_rng(202);
    for _ in 0..50 {
        let (corpus, image_of) = random_corpus(&mut rng, 50);
        let d = rng.random_range(2..6);
        let space = normal_matrix(&mut rng, corpus.num_captions(), d);
        let di = rng.random_range(2..6);
        let images = normal_matrix(&mut rng, corpus.num_images(), di);
        let k = rng.random_range(1..corpus.num_images());
        let (srows, irows) = (rows_of(&space), rows_of(&images));

        let got = mnno(space.view(), images.view(), &corpus, k).unwrap();
        assert!((got - mnno_oracle(&srows, &irows, &image_of, k)).abs() < EXACT);

        let stats = cluster_stats(space.view(), &corpus, 0);
        let (intra, inter) = cluster_stats_oracle(&srows, &image_of);
        match stats {
            Ok(s) => {
                assert!((s.c_intra - intra).abs() < EXACT);
                assert!((s.c_inter - inter).abs() < EXACT);
            }
            // Every image had a single caption.
            Err(MetricError::EmptyExpectation(_)) => assert!(intra.is_nan()),
            Err(e) => panic!("{e}"),
        }

        let rho = rho_vis(space.view(), images.view(), &corpus, usize::MAX, 0).unwrap();
        assert!((rho - rho_vis_oracle(&srows, &irows, &image_of)).abs() < EXACT);

        let q = rng.random_range(0..corpus.num_captions());
        let kk = rng.random_range(1..corpus.num_captions());
        let listing = knn_report(q, space.view(), &corpus, kk).unwrap();
        let brute = brute_top_k(&srows, q, kk);
        assert_eq!(listing.len(), brute.len());
        for (n, (j, c)) in listing.iter().zip(&brute) {
            assert_eq!(n.caption_index, *j);
            assert_eq!(n.image_id, corpus.image_id(image_of[*j]));
            assert!((n.cosine - c).abs() < EXACT);
        }
    }
}

#[test]
fn mnno_is_at_chance_for_random_vectors() {
    let n = 100;
    let k = 10;
    let corpus = CaptionCorpus::new(
        (0..n).map(|c| format!("c{c}")).collect(),
        (0..n).map(|c| format!("i{c}")).collect(),
        (0..n).collect(),
        vec![None; n],
    )
    .unwrap();
    let values: Vec<f64> = (0..20)
        .map(|seed| {
            let mut rng = seeded_rng(300 + seed);
            let space = normal_matrix(&mut rng, n, 16);
            let images = normal_matrix(&mut rng, n, 16);
            mnno(space.view(), images.view(), &corpus, k).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / 20.0;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0).sqrt();
    let chance = k as f64 / (n - 1) as f64;
    assert!(
        (mean - chance).abs() < 3.0 * sd / 20f64.sqrt(),
        "mean {mean}, chance {chance}, sd {sd}"
    );
}

#[test]
fn identical_geometry_gives_full_overlap_for_every_k() {
    let mut rng = seeded_rng(203);
    let n = 12;
    let corpus = CaptionCorpus::new(
        (0..n).map(|c| format!("c{c}")).collect(),
        (0..n).map(|c| format!("i{c}")).collect(),
        (0..n).collect(),
        vec![None; n],
    )
    .unwrap();
    let x = normal_matrix(&mut rng, n, 5);
    for k in 1..n {
        assert_eq!(mnno(x.view(), x.view(), &corpus, k).unwrap(), 1.0);
    }
    assert!(matches!(
        mnno(x.view(), x.view(), &corpus, n),
        Err(MetricError::InvalidK { .. })
    ));
}

/// Product of random plane rotations.
fn random_rotation<R: Rng>(rng: &mut R, d: usize) -> Array2<f64> {
    let mut r = Array2::<f64>::eye(d);
    for _ in 0..3 * d {
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        if i == j {
            continue;
        }
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mut g = Array2::<f64>::eye(d);
        g[[i, i]] = t.cos();
        g[[j, j]] = t.cos();
        g[[i, j]] = -t.sin();
        g[[j, i]] = t.sin();
        r = r.dot(&g);
    }
    r
}

#[test]
fn metrics_ignore_rotation_and_scale() {
    let mut rng = seeded_rng(204);
    for _ in 0..10 {
        let (corpus, _) = random_corpus(&mut rng, 40);
        let space = normal_matrix(&mut rng, corpus.num_captions(), 6);
        let images = normal_matrix(&mut rng, corpus.num_images(), 4);
        let moved_space = space.dot(&random_rotation(&mut rng, 6)) * 3.5;
        let moved_images = images.dot(&random_rotation(&mut rng, 4)) * 0.2;
        let opts = MetricOptions {
            k: 2,
            rho_pairs: Some(50),
            seed: 9,
        };
        let (Ok(a), Ok(b)) = (
            evaluate(space.view(), images.view(), &corpus, &opts),
            evaluate(moved_space.view(), moved_images.view(), &corpus, &opts),
        ) else {
            continue;
        };
        assert_eq!(a.mnno, b.mnno);
        for (x, y) in [(a.rho_vis, b.rho_vis), (a.c_intra, b.c_intra), (a.c_inter, b.c_inter)] {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn relatedness_composes_cosine_and_spearman() {
    let mut rng = seeded_rng(205);
    let space = normal_matrix(&mut rng, 20, 7);
    let pairs: Vec<RelatednessPair> = (0..10)
        .map(|_| RelatednessPair {
            index_a: rng.random_range(0..20),
            index_b: rng.random_range(0..20),
            gold_score: rng.random_range(0.0..5.0),
        })
        .filter(|p| p.index_a != p.index_b)
        .collect();
    let cos: Vec<f64> = pairs
        .iter()
        .map(|p| {
            cosine(
                space.row(p.index_a).as_slice().unwrap(),
                space.row(p.index_b).as_slice().unwrap(),
            )
            .unwrap()
        })
        .collect();
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold_score).collect();
    assert_eq!(
        relatedness(space.view(), &pairs).unwrap(),
        spearman(&cos, &gold).unwrap()
    );

    let exact: Vec<RelatednessPair> = pairs
        .iter()
        .zip(&cos)
        .map(|(p, &c)| RelatednessPair { gold_score: c, ..*p })
        .collect();
    assert_eq!(relatedness(space.view(), &exact).unwrap(), 1.0);
    let reversed: Vec<RelatednessPair> = pairs
        .iter()
        .zip(&cos)
        .map(|(p, &c)| RelatednessPair { gold_score: -c, ..*p })
        .collect();
    assert_eq!(relatedness(space.view(), &reversed).unwrap(), -1.0);
}
