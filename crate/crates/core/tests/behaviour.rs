mod common;

use edge2vec::evalkit::cosine;
use edge2vec::hetgraph::{build_graph, Directedness, RawEdge};
use edge2vec::rng;
use edge2vec::skipgram::{train_embeddings, NegativeSampler, TrainParams};
use edge2vec::transition::{sigmoid, train_transition_matrix, EmParams, TransitionMatrix};
use edge2vec::walker::{generate_corpus, WalkParams};

#[test]
fn barbell_communities_separate() {
    let mut recs = Vec::new();
    for side in 0..2 {
        for a in 0..10 {
            for b in a + 1..10 {
                recs.push(RawEdge::new(format!("v{}", side * 10 + a), "e", format!("v{}", side * 10 + b), 1.0));
            }
        }
    }
    recs.push(RawEdge::new("v9", "e", "v10", 1.0));
    let (g, _) = build_graph(&recs, Directedness::Undirected).unwrap();
    let walk = WalkParams {
        p: 1.0,
        q: 1.0,
        walk_length: 30,
        walks_per_node: 20,
    };
    let starts: Vec<usize> = (0..20).collect();
    let corpus = generate_corpus(&g, &TransitionMatrix::ones(vec!["e".into()]), &starts, &walk, 1).unwrap();
    let params = TrainParams {
        dim: 16,
        window: 5,
        ..Default::default()
    };
    let emb = train_embeddings::<f64>(&corpus, g.num_nodes(), &params, 2).unwrap();
    let side = |v: usize| g.nodes().label(v)[1..].parse::<usize>().unwrap() / 10;
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for a in 0..20 {
        for b in a + 1..20 {
            let c = cosine(emb.row(a), emb.row(b));
            if side(a) == side(b) { intra.push(c) } else { inter.push(c) }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&intra) > mean(&inter), "intra {} inter {}", mean(&intra), mean(&inter));
}

#[test]
fn negative_sampler_is_uniform_over_eligible_nodes() {
    let sampler = NegativeSampler::new(10);
    let mut rng = rng::stream(0, &[]);
    let draws = 100_000;
    let mut counts = [0usize; 10];
    for _ in 0..draws {
        counts[sampler.sample(3, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[3], 0);
    let p = 1.0 / 9.0;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate().filter(|&(i, _)| i != 3) {
        assert!((c as f64 - draws as f64 * p).abs() <= 5.0 * sd, "node {i}: {c}");
    }
}

#[test]
fn different_seeds_give_different_corpora() {
    let g = common::karate();
    let m = TransitionMatrix::ones(vec!["tie".into()]);
    let starts: Vec<usize> = (0..g.num_nodes()).collect();
    let params = WalkParams::default();
    let a = generate_corpus(&g, &m, &starts, &params, 1).unwrap();
    let b = generate_corpus(&g, &m, &starts, &params, 2).unwrap();
    assert_ne!(a, b);
}

#[test]
fn one_iteration_one_type_is_sigmoid_one() {
    let g = common::karate();
    let em = EmParams {
        iterations: 1,
        sample_ratio: 0.5,
    };
    let run = train_transition_matrix(&g, &em, &WalkParams::default(), 7).unwrap();
    assert!((run.matrix.get(0, 0) - sigmoid(1.0)).abs() < 1e-12);
    assert_eq!(run.history.len(), 1);
}

#[test]
fn embeddings_finite_on_planted_graph() {
    let (g, _) = build_graph(&common::planted(0).records, Directedness::Undirected).unwrap();
    let starts: Vec<usize> = (0..g.num_nodes()).collect();
    let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
    let corpus = generate_corpus(&g, &m, &starts, &WalkParams::default(), 0).unwrap();
    let emb = train_embeddings::<f64>(&corpus, g.num_nodes(), &TrainParams::default(), 0).unwrap();
    assert_eq!((emb.rows(), emb.dim()), (600, 128));
    assert!(emb.is_finite());
}

#[test]
fn planted_generator_shape() {
    let p = common::planted(0);
    assert_eq!(p.labels.len(), 600);
    let (g, _) = build_graph(&p.records, Directedness::Undirected).unwrap();
    assert_eq!(g.num_edge_types(), 4);
    let cross = p.records.iter().filter(|r| r.etype == "cross").count();
    let intra = p.records.len() - cross;
    // expected 2985 within-type and 600 cross-type edges
    assert!((2700..3300).contains(&intra), "{intra}");
    assert!((480..720).contains(&cross), "{cross}");
}
