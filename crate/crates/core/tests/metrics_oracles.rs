use domainshift_core::corpus::{scan_tree, DomainSpec, FsSource, MemorySource, PixelGrid};
use domainshift_core::histogram::{
    image_histogram, pool_histogram, pool_histogram_with, PoolMode, RangePolicy, CHANNEL_BINS,
};
use domainshift_core::metrics::{
    idd_matrix, inter_domain_dissimilarity, intra_class_variation, representation_idd,
    IcvOptions, IddOptions, IdentityFeatures, MetricsError, RepIddOptions, SampleDomain,
};
use image::{Rgb, RgbImage};
use std::collections::BTreeMap;
use std::time::Instant;

fn textbook_js(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let m = 0.5 * (p[i] + q[i]);
        if p[i] > 0.0 {
            s += 0.5 * p[i] * (p[i] / m).log2();
        }
        if q[i] > 0.0 {
            s += 0.5 * q[i] * (q[i] / m).log2();
        }
    }
    s
}

fn domain(name: &str, classes: &[(&str, &[&str])]) -> DomainSpec {
    DomainSpec {
        name: name.into(),
        classes: classes
            .iter()
            .map(|(c, ps)| (c.to_string(), ps.iter().map(|p| p.to_string()).collect()))
            .collect::<BTreeMap<_, _>>(),
    }
}

#[test]
fn histogram_counts_by_hand() {
    let g = PixelGrid::from_pixels(2, 2, &[[0, 10, 255], [0, 10, 0], [7, 10, 0], [255, 255, 255]]).unwrap();
    let h = image_histogram(&g);
    assert_eq!(h.probs().len(), CHANNEL_BINS);
    // Per channel a pixel contributes 1 / (3 * 4).
    let unit = 1.0 / 12.0;
    let expect = |c: usize, bin: usize| h.probs()[c * 256 + bin];
    assert!((expect(0, 0) - 2.0 * unit).abs() < 1e-15);
    assert!((expect(0, 7) - unit).abs() < 1e-15);
    assert!((expect(0, 255) - unit).abs() < 1e-15);
    assert!((expect(1, 10) - 3.0 * unit).abs() < 1e-15);
    assert!((expect(2, 0) - 2.0 * unit).abs() < 1e-15);
    assert!((expect(2, 255) - 2.0 * unit).abs() < 1e-15);
    assert!((h.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn pooling_modes_differ_on_unequal_sizes() {
    let small = PixelGrid::solid(1, 1, [0, 0, 0]).unwrap();
    let big = PixelGrid::solid(3, 1, [255, 255, 255]).unwrap();
    let grids = [small, big];
    let px = pool_histogram(&grids).unwrap();
    assert!((px.channel(0)[0] - 0.25 / 3.0).abs() < 1e-15);
    let im = pool_histogram_with(&grids, PoolMode::ImageAveraged).unwrap();
    assert!((im.channel(0)[0] - 0.5 / 3.0).abs() < 1e-15);
}

#[test]
fn red_versus_blue_from_png_files() {
    let dir = tempfile::tempdir().unwrap();
    for (d, rgb) in [("blue", [0u8, 0, 255]), ("red", [255, 0, 0])] {
        for i in 0..2 {
            let p = dir.path().join(d).join("obj").join(format!("{i}.png"));
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            RgbImage::from_pixel(4, 4, Rgb(rgb)).save(&p).unwrap();
        }
    }
    let m = scan_tree(dir.path(), 0).unwrap().manifest;
    let src = FsSource::new(dir.path());
    let v = inter_domain_dissimilarity(
        m.domain("red").unwrap(),
        &src,
        m.domain("blue").unwrap(),
        &src,
        &IddOptions::default(),
    )
    .unwrap();
    // Red and blue channels are disjoint, green coincides at bin 0.
    assert!((v - 2.0 / 3.0).abs() < 1e-9, "{v}");
}

#[test]
fn idd_matrix_is_symmetric_and_matches_textbook() {
    let mut src = MemorySource::new();
    let colors = [[200u8, 30, 30], [30, 200, 30], [90, 90, 200], [100, 100, 100]];
    let mut domains = Vec::new();
    for (d, base) in colors.iter().enumerate() {
        let paths: Vec<String> = (0..3).map(|i| format!("d{d}/{i}")).collect();
        for (i, p) in paths.iter().enumerate() {
            let px: Vec<[u8; 3]> = (0..6)
                .map(|k| base.map(|c| c.wrapping_add((i * 7 + k * 3) as u8)))
                .collect();
            src.insert(p.clone(), PixelGrid::from_pixels(3, 2, &px).unwrap());
        }
        let refs: Vec<&str> = paths.iter().map(String::as_str).collect();
        domains.push(domain(&format!("d{d}"), &[("x", &refs)]));
    }
    let m = idd_matrix(&domains, &src, None, &IddOptions::default()).unwrap();
    for i in 0..4 {
        assert_eq!(m.values[i][i], 0.0);
        for j in 0..4 {
            assert_eq!(m.values[i][j], m.values[j][i]);
        }
    }
    let pooled = |d: usize| {
        let grids: Vec<PixelGrid> = (0..3).map(|i| {
            use domainshift_core::corpus::ImageSource;
            src.load(&format!("d{d}/{i}")).unwrap()
        }).collect();
        pool_histogram(&grids).unwrap()
    };
    let want = textbook_js(pooled(0).probs(), pooled(2).probs());
    assert!((m.get("d0", "d2").unwrap() - want).abs() < 1e-12);
    assert_eq!(m.log_base, 2);
}

#[test]
fn icv_degenerate_cases() {
    let mut src = MemorySource::new();
    let img = PixelGrid::from_pixels(2, 1, &[[12, 34, 56], [78, 90, 12]]).unwrap();
    for i in 0..6 {
        src.insert(format!("dup/{i}"), img.clone());
    }
    src.insert("bw/black", PixelGrid::solid(2, 2, [0, 0, 0]).unwrap());
    src.insert("bw/white", PixelGrid::solid(2, 2, [255, 255, 255]).unwrap());

    let dup = domain("dup", &[("a", &["dup/0", "dup/1", "dup/2"]), ("b", &["dup/3", "dup/4", "dup/5"])]);
    let r = intra_class_variation(&dup, &src, &IcvOptions::default()).unwrap();
    assert!(r.icv.abs() < 1e-9);
    assert_eq!(r.per_trial.len(), 3);

    let bw = domain("bw", &[("c", &["bw/black", "bw/white"])]);
    let r = intra_class_variation(&bw, &src, &IcvOptions::default()).unwrap();
    assert!((r.icv - 1.0).abs() < 1e-9);
}

fn noisy_corpus(n_per_class: usize, spread: u8) -> (DomainSpec, MemorySource) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spread as u64);
    let mut src = MemorySource::new();
    let mut classes: Vec<(String, Vec<String>)> = Vec::new();
    for c in 0..4 {
        let mut paths = Vec::new();
        for i in 0..n_per_class {
            let base = [40 + 50 * c as u8, 120, 200 - 40 * c as u8];
            let px: Vec<[u8; 3]> = (0..64)
                .map(|_| base.map(|b| b.saturating_add(rng.gen_range(0..=spread))))
                .collect();
            let p = format!("c{c}/{i}");
            src.insert(p.clone(), PixelGrid::from_pixels(8, 8, &px).unwrap());
            paths.push(p);
        }
        classes.push((format!("c{c}"), paths));
    }
    let spec = DomainSpec {
        name: format!("spread{spread}"),
        classes: classes.into_iter().collect(),
    };
    (spec, src)
}

#[test]
fn icv_is_deterministic_and_fast_on_1k_images() {
    let (d, src) = noisy_corpus(250, 40);
    let start = Instant::now();
    let opts = IcvOptions { seed: 5, ..Default::default() };
    let a = intra_class_variation(&d, &src, &opts).unwrap();
    let b = intra_class_variation(&d, &src, &opts).unwrap();
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = intra_class_variation(&d, &src, &IcvOptions { seed: 6, ..Default::default() }).unwrap();
    assert_ne!(a.per_trial, c.per_trial);
}

#[test]
fn icv_grows_with_within_class_spread() {
    let (tight, s1) = noisy_corpus(20, 2);
    let (loose, s2) = noisy_corpus(20, 120);
    let a = intra_class_variation(&tight, &s1, &IcvOptions::default()).unwrap();
    let b = intra_class_variation(&loose, &s2, &IcvOptions::default()).unwrap();
    assert!(a.icv < b.icv, "{} vs {}", a.icv, b.icv);
}

#[test]
fn representation_idd_composes_histogram_and_divergence() {
    let a = SampleDomain { name: "a".into(), samples: vec![vec![0.1], vec![0.2], vec![0.9]] };
    let b = SampleDomain { name: "b".into(), samples: vec![vec![0.6], vec![0.8], vec![0.95]] };
    let opts = RepIddOptions { bins: 4, range: RangePolicy::Fixed { lo: 0.0, hi: 1.0 }, ..Default::default() };
    let m = representation_idd(&IdentityFeatures, &[a, b], &opts).unwrap();
    // Bins of width 0.25: a -> [2, 0, 0, 1], b -> [0, 0, 1, 2].
    let p = [2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0];
    let q = [0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0];
    assert!((m.values[0][1] - textbook_js(&p, &q)).abs() < 1e-12);
}

#[test]
fn representation_idd_rejects_ragged_features() {
    let a = SampleDomain { name: "a".into(), samples: vec![vec![0.1, 0.2]] };
    let b = SampleDomain { name: "b".into(), samples: vec![vec![0.3]] };
    let err = representation_idd(&IdentityFeatures, &[a, b], &RepIddOptions::default()).unwrap_err();
    assert_eq!(err.kind(), "DimensionMismatch");
    assert!(matches!(
        representation_idd(&IdentityFeatures, &[], &RepIddOptions::default()),
        Err(MetricsError::NoDomains)
    ));
}
