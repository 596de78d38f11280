use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use randr::texture::{build_texture_library, gen_texture, perlin2, PatternKind, PermutationTable, TextureParams, TexturePattern};

#[test]
fn perlin_range_over_dense_samples() {
    let table = PermutationTable::from_seed(11);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut max_abs: f64 = 0.0;
    // 1000 x 1000 strata over a 64 x 64 cell window, one jittered sample each
    for i in 0..1000 {
        for j in 0..1000 {
            let x = (i as f64 + rng.gen::<f64>()) * 0.064;
            let y = (j as f64 + rng.gen::<f64>()) * 0.064;
            let v = perlin2(x, y, &table);
            assert!(v.is_finite() && (-1.0..=1.0).contains(&v), "perlin2({x}, {y}) = {v}");
            max_abs = max_abs.max(v.abs());
        }
    }
    assert!(max_abs >= 0.5, "normalized noise peaks at only {max_abs}");
}

#[test]
fn perlin_vanishes_on_random_lattice_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..10_000 {
        let table = PermutationTable::from_seed(k % 7);
        let (x, y) = (rng.gen_range(-1000i32..1000), rng.gen_range(-1000i32..1000));
        assert!(perlin2(x as f64, y as f64, &table).abs() < 1e-12);
    }
}

#[test]
fn extreme_parameters_stay_finite() {
    let a = [0.0, 1.0, 0.5];
    let b = [1.0, 0.0, 1.0];
    let patterns = [
        TexturePattern::Perlin { base_frequency: 1e-6, octaves: 1, persistence: 1.0, color_a: a, color_b: b },
        TexturePattern::Perlin { base_frequency: 512.0, octaves: 8, persistence: 0.01, color_a: a, color_b: b },
        TexturePattern::Gradient { direction: [-1.0, 0.0], color_a: a, color_b: b },
        TexturePattern::Chess { color_a: a, color_b: b, cells_per_side: 64 },
    ];
    for (seed, p) in [0, u64::MAX, 1, 2].into_iter().zip(&patterns) {
        let img = gen_texture(p, 64, seed).unwrap();
        assert_eq!(img.pixels.len(), 64 * 64);
    }
}

#[test]
fn library_textures_match_direct_generation() {
    let lib = build_texture_library(40, 16, &PatternKind::ALL, &TextureParams::default(), 8).unwrap();
    // only noise depends on the lattice seed
    for (pattern, img) in lib.patterns.iter().zip(&lib.images) {
        if pattern.kind() != PatternKind::Perlin {
            assert_eq!(&gen_texture(pattern, 16, 0).unwrap(), img);
        }
    }
    // prefixes agree, so a short dump shows the start of the real library
    let short = build_texture_library(10, 16, &PatternKind::ALL, &TextureParams::default(), 8).unwrap();
    assert_eq!(short.images[..], lib.images[..10]);
}
