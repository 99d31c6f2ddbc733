mod common;

use common::*;
use geoguide::augment::{apply_augmentation, sample_augmentations, AugmentationOp};
use geoguide::encoder::{make_encoder, make_image_encoder, make_tanh_encoder, EncoderKind, ToyEncoder};
use geoguide::image::{ImageShape, ImageTensor};
use geoguide::linalg::{dot, Matrix};
use geoguide::losses::check_gradient;
use geoguide::Error;
use proptest::prelude::*;
use rand::Rng;

fn random_op(r: &mut impl Rng, shape: ImageShape) -> AugmentationOp {
    let (h, w) = (shape.height, shape.width);
    let single = |r: &mut dyn rand::RngCore| match r.random_range(0..3) {
        0 => AugmentationOp::HorizontalFlip,
        1 => AugmentationOp::Roll {
            dy: r.random_range(-(h as i64)..=h as i64) as isize,
            dx: r.random_range(-(w as i64)..=w as i64) as isize,
        },
        _ => {
            let height = r.random_range(1..=h);
            let width = r.random_range(1..=w);
            AugmentationOp::CropPad { top: r.random_range(0..=h - height), left: r.random_range(0..=w - width), height, width }
        }
    };
    if r.random_bool(0.3) {
        AugmentationOp::Compose((0..3).map(|_| single(r)).collect())
    } else {
        single(r)
    }
}

#[test]
fn adjoint_satisfies_inner_product_identity() {
    let mut r = rng(30);
    for _ in 0..200 {
        let shape = ImageShape::new(r.random_range(1..7), r.random_range(1..7), r.random_range(1..4));
        let op = random_op(&mut r, shape);
        let x = uniform_vec(&mut r, shape.len());
        let y = uniform_vec(&mut r, shape.len());
        let lhs = dot(&op.apply_raw(shape, &x).unwrap(), &y);
        let rhs = dot(&x, &op.adjoint_raw(shape, &y).unwrap());
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{op:?}");
    }
}

#[test]
fn augmentations_are_linear() {
    let mut r = rng(31);
    let shape = ImageShape::new(5, 4, 2);
    for _ in 0..50 {
        let op = random_op(&mut r, shape);
        let (x, y) = (uniform_vec(&mut r, shape.len()), uniform_vec(&mut r, shape.len()));
        let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = op.apply_raw(shape, &mix).unwrap();
        let (ax, ay) = (op.apply_raw(shape, &x).unwrap(), op.apply_raw(shape, &y).unwrap());
        for i in 0..lhs.len() {
            assert!((lhs[i] - (a * ax[i] + b * ay[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn augmentation_examples() {
    let shape = ImageShape::new(2, 2, 1);
    let x = ImageTensor::new(shape, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let flip = apply_augmentation(&AugmentationOp::HorizontalFlip, &x).unwrap();
    assert_eq!(flip.pixels(), &[0.2, 0.1, 0.4, 0.3]);
    let roll = apply_augmentation(&AugmentationOp::Roll { dy: 1, dx: 0 }, &x).unwrap();
    assert_eq!(roll.pixels(), &[0.3, 0.4, 0.1, 0.2]);
    let keep = apply_augmentation(&AugmentationOp::CropPad { top: 0, left: 0, height: 2, width: 2 }, &x).unwrap();
    assert_eq!(keep.pixels(), x.pixels());
    assert!(matches!(
        apply_augmentation(&AugmentationOp::CropPad { top: 1, left: 0, height: 2, width: 2 }, &x),
        Err(Error::BoxOutOfBounds { .. })
    ));
    let twice = AugmentationOp::Compose(vec![AugmentationOp::HorizontalFlip, AugmentationOp::HorizontalFlip]);
    assert_eq!(apply_augmentation(&twice, &x).unwrap().pixels(), x.pixels());
}

#[test]
fn sampled_augmentations_are_seeded_and_bounded() {
    let shape = ImageShape::new(16, 16, 3);
    let a = sample_augmentations(7, 64, shape);
    assert_eq!(a, sample_augmentations(7, 64, shape));
    assert_ne!(a, sample_augmentations(8, 64, shape));
    for op in &a {
        match op {
            AugmentationOp::Roll { dy, dx } => assert!(dy.abs() <= 4 && dx.abs() <= 4),
            AugmentationOp::CropPad { height, width, .. } => assert!(height * width * 4 >= 3 * 16 * 16),
            AugmentationOp::HorizontalFlip => {}
            AugmentationOp::Compose(_) => panic!("members use a single op"),
        }
    }
}

fn check_encoder(enc: &ToyEncoder, r: &mut impl Rng) {
    for _ in 0..50 {
        let x = uniform_vec(r, enc.input_dim());
        let c = uniform_vec(r, enc.output_dim());
        let rec = check_gradient(
            |p| {
                let e = enc.forward(p).unwrap();
                (dot(&e.z, &c), enc.backward(&e, &c))
            },
            &x,
            1e-6,
        );
        assert!(rec.relative_error <= 1e-5, "{:e}", rec.relative_error);
    }
}

#[test]
fn encoder_backward_matches_finite_differences() {
    let mut r = rng(32);
    check_encoder(&make_encoder(EncoderKind::Image, 12, 5, 1), &mut r);
    check_encoder(&make_tanh_encoder(EncoderKind::Image, 12, 7, 5, 2), &mut r);
    check_encoder(&make_image_encoder(ImageShape::new(4, 4, 2), 6, 3, 2.0), &mut r);
}

#[test]
fn encoder_outputs_are_unit_and_deterministic() {
    let enc = make_image_encoder(ImageShape::new(6, 6, 3), 8, 9, 2.0);
    let x = uniform_vec(&mut rng(33), 108);
    let z = enc.encode(&x).unwrap();
    assert!((dot(&z, &z) - 1.0).abs() < 1e-12);
    assert_eq!(z, make_image_encoder(ImageShape::new(6, 6, 3), 8, 9, 2.0).encode(&x).unwrap());
    assert!(matches!(enc.encode(&x[..10]), Err(Error::DimensionMismatch(_))));
    assert!(matches!(enc.encode(&vec![0.0; 108]), Err(Error::ZeroActivation(_))));
}

#[test]
fn identity_encoder_normalizes() {
    let enc = ToyEncoder::from_weight(EncoderKind::Image, Matrix::identity(3));
    let z = enc.encode(&[3.0, 0.0, 4.0]).unwrap();
    assert!(z.iter().zip([0.6, 0.0, 0.8]).all(|(a, b)| (a - b).abs() < 1e-15));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn adjoint_identity_holds(seed in any::<u64>(), h in 1usize..9, w in 1usize..9, c in 1usize..4) {
        let mut r = rng(seed);
        let shape = ImageShape::new(h, w, c);
        let op = random_op(&mut r, shape);
        let x = uniform_vec(&mut r, shape.len());
        let y = uniform_vec(&mut r, shape.len());
        let lhs = dot(&op.apply_raw(shape, &x).unwrap(), &y);
        let rhs = dot(&x, &op.adjoint_raw(shape, &y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
