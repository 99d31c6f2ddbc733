mod common;

use common::*;
use geoguide::augment::{sample_augmentations, AugmentationOp};
use geoguide::encoder::{make_image_encoder, EncoderKind, ToyEncoder};
use geoguide::image::{ImageShape, ImageTensor};
use geoguide::inversion::{
    diagnose, inversion_step_with, run_inversion, run_problem, synthetic_source, write_trajectory, Encoders,
    InversionConfig, LossMode, MorphState, Optimizer, Problem, Schedule, StepContext, TRAJECTORY_HEADER,
};
use geoguide::io::read_emb1;
use geoguide::linalg::{cosine, normalize, Matrix};
use geoguide::losses::check_gradient;
use geoguide::{Error, SphericalMode};
use rand::Rng;

fn small_problem(seed: u64, shape: ImageShape, dim: usize) -> Problem {
    let mut r = rng(seed);
    let enc = make_image_encoder(shape, dim, seed, 2.0);
    let t = normalize(&uniform_vec(&mut r, dim), 0.0).unwrap().0;
    Problem::new(synthetic_source(seed, shape), enc, t).unwrap()
}

fn fd_check(cfg: &InversionConfig, problem: &Problem, seed: u64, points: usize) {
    let shape = problem.source().shape();
    let mut r = rng(seed);
    for _ in 0..points {
        let pixels: Vec<f64> = (0..shape.len()).map(|_| r.random_range(0.1..0.9)).collect();
        let ops = sample_augmentations(r.random(), cfg.ensembles, shape);
        let ctx = StepContext::prepare(problem, cfg, ops, None, &pixels).unwrap();
        let rec = check_gradient(
            |p| {
                let e = ctx.loss_and_grad(p).unwrap();
                (e.report.total, e.grad)
            },
            &pixels,
            1e-6,
        );
        assert!(rec.relative_error <= 1e-5, "{:?}: {:e}", cfg.loss_mode, rec.relative_error);
    }
}

#[test]
fn full_step_gradient_matches_finite_differences() {
    let shape = ImageShape::new(8, 8, 1);
    let problem = small_problem(60, shape, 8);
    let base = InversionConfig { ensembles: 4, subspace_dim: 3, embed_dim: 8, ..Default::default() };
    fd_check(&base, &problem, 1, 50);
    fd_check(&InversionConfig { literal: true, ..base.clone() }, &problem, 2, 10);
    fd_check(&InversionConfig { perceptual: false, ..base.clone() }, &problem, 3, 10);
    fd_check(&InversionConfig { loss_mode: LossMode::Directional, ..base.clone() }, &problem, 4, 10);
    for spherical_mode in [SphericalMode::Canonical, SphericalMode::Literal] {
        fd_check(&InversionConfig { loss_mode: LossMode::Spherical, spherical_mode, ..base.clone() }, &problem, 5, 10);
    }
}

#[test]
fn flip_step_on_a_two_by_two_image() {
    // identity encoder on a 2×2 grey image, one flipped member
    let shape = ImageShape::new(2, 2, 1);
    let src = ImageTensor::new(shape, vec![0.2, 0.6, 0.4, 0.8]).unwrap();
    let enc = ToyEncoder::from_weight(EncoderKind::Image, Matrix::identity(4));
    let t = vec![0.5, -0.5, 0.5, -0.5];
    let problem = Problem::new(src.clone(), enc, t.clone()).unwrap();
    let lr = 0.01;
    let cfg = InversionConfig {
        loss_mode: LossMode::Directional,
        optimizer: Optimizer::Gd,
        schedule: Schedule::Constant,
        learning_rate: lr,
        ensembles: 1,
        embed_dim: 4,
        ..Default::default()
    };
    let loss = |x: &[f64]| {
        let flipped = [x[1], x[0], x[3], x[2]];
        let z = normalize(&flipped, 0.0).unwrap().0;
        let zs = normalize(src.pixels(), 0.0).unwrap().0;
        let raw: Vec<f64> = z.iter().zip(&zs).map(|(a, b)| a - b).collect();
        1.0 - cosine(&raw, &t)
    };
    let h = 1e-7;
    let grad: Vec<f64> = (0..4)
        .map(|i| {
            let mut p = src.pixels().to_vec();
            p[i] += h;
            let up = loss(&p);
            p[i] -= 2.0 * h;
            (up - loss(&p)) / (2.0 * h)
        })
        .collect();
    let next = inversion_step_with(MorphState::new(src.clone()), &cfg, &problem, vec![AugmentationOp::HorizontalFlip])
        .unwrap();
    for i in 0..4 {
        let expected = (src.pixels()[i] - lr * grad[i]).clamp(0.0, 1.0);
        assert!((next.image.pixels()[i] - expected).abs() < 1e-8);
    }
    assert!((next.loss_history[0].total - loss(src.pixels())).abs() < 1e-12);
    assert_eq!(next.iterate, 1);
}

#[test]
fn identity_members_are_degenerate_at_the_source() {
    let shape = ImageShape::new(8, 8, 1);
    let problem = small_problem(61, shape, 6);
    let cfg = InversionConfig { ensembles: 2, embed_dim: 6, ..Default::default() };
    let ops = vec![AugmentationOp::Roll { dy: 0, dx: 0 }; 2];
    let err = inversion_step_with(MorphState::new(problem.source().clone()), &cfg, &problem, ops).unwrap_err();
    assert!(matches!(err, Error::AtIterate { iterate: 0, .. }));
    assert!(matches!(err.root(), Error::DegenerateEnsemble));
}

fn quick_cfg(seed: u64) -> InversionConfig {
    InversionConfig { epochs: 12, ensembles: 4, sample_every: 4, embed_dim: 8, text_dim: 16, seed, ..Default::default() }
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let shape = ImageShape::new(8, 8, 3);
    let src = synthetic_source(3, shape);
    let cfg = quick_cfg(3);
    let a = run_inversion(&cfg, &src, "photo", "painting").unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_inversion(&cfg, &src, "photo", "painting").unwrap());
    assert_eq!(a.states, b.states);
    assert_eq!(a.provenance, b.provenance);
    let c = run_inversion(&quick_cfg(4), &src, "photo", "painting").unwrap();
    assert_ne!(a.final_state().image, c.final_state().image);
}

#[test]
fn trajectory_invariants() {
    let shape = ImageShape::new(8, 8, 3);
    let cfg = quick_cfg(5);
    let enc = Encoders::new(&cfg, shape);
    let dir = geoguide::text_direction(&enc.text, "day", "night").unwrap();
    let problem = Problem::new(synthetic_source(5, shape), enc.image, dir).unwrap();
    let traj = run_problem(&cfg, &problem).unwrap();
    assert_eq!(traj.states.iter().map(|s| s.iterate).collect::<Vec<_>>(), vec![0, 4, 8, 12]);
    let last = traj.final_state();
    assert_eq!(last.loss_history.len(), 12);
    assert!(last.loss_history.iter().all(|r| r.linearity_defect() < 1e-12 && r.total.is_finite()));
    assert!(last.effective_dim >= 1 && last.effective_dim <= cfg.subspace_dim.min(cfg.embed_dim));
    for s in &traj.states {
        assert!(s.image.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }
    let diag = diagnose(&traj, &problem, &enc.eval).unwrap();
    assert_eq!(diag.intra_dm.len(), 3);
    assert!(diag.intra_dm.iter().all(|d| (0.0..=1.0).contains(d)));
    assert!((0.0..=200.0).contains(&diag.morphing_score));
}

#[test]
fn trajectory_persists() {
    let shape = ImageShape::new(8, 8, 3);
    let cfg = quick_cfg(6);
    let traj = run_inversion(&cfg, &synthetic_source(6, shape), "photo", "sketch").unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(&traj, dir.path()).unwrap();
    let kv = std::fs::read_to_string(dir.path().join("config.kv")).unwrap();
    assert!(kv.contains(&format!("# config_hash={}", cfg.config_hash())));
    let back = InversionConfig::from_kv(&kv).unwrap();
    assert_eq!(back, cfg);
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
    assert_eq!(lines.count(), cfg.epochs);
    for s in &traj.states {
        let frame = ImageTensor::read_pnm(dir.path().join(format!("frame_{:06}.ppm", s.iterate))).unwrap();
        assert!(frame.pixels().iter().zip(s.image.pixels()).all(|(a, b)| (a - b).abs() <= 0.5 / 255.0 + 1e-12));
    }
    let feats = read_emb1(dir.path().join("features.emb")).unwrap();
    assert_eq!(feats.shape(), (traj.states.len(), cfg.embed_dim));
}

#[test]
fn invalid_configs_are_rejected() {
    let src = synthetic_source(0, ImageShape::new(8, 8, 1));
    for cfg in [
        InversionConfig { epochs: 0, ..Default::default() },
        InversionConfig { ensembles: 0, ..Default::default() },
        InversionConfig { learning_rate: -1.0, ..Default::default() },
        InversionConfig { subspace_dim: 0, ..Default::default() },
    ] {
        assert!(matches!(run_inversion(&cfg, &src, "a", "b"), Err(Error::InvalidConfig(_))));
    }
    let mut cfg = InversionConfig::default();
    assert!(cfg.merge_kv("epochs=3\nbogus=1\n").unwrap() == vec![("bogus".to_string(), "1".to_string())]);
    assert_eq!(cfg.epochs, 3);
    assert!(InversionConfig::from_kv("bogus=1").is_err());
}
