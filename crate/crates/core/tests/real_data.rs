use std::path::PathBuf;

use approx::assert_relative_eq;
use dfcl::chainladder::{predict, ClassicalFit};
use dfcl::inference::cred_msep;
use dfcl::{datasets, ClaimsTriangle, Layout};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn file_and_bundled_triangles_agree() {
    let from_file = ClaimsTriangle::load(data("incremental_real.csv"), Layout::Incremental, 10_000.0, false).unwrap();
    assert_eq!(from_file, datasets::real(10_000.0).unwrap());
    let syn = ClaimsTriangle::load(data("synthetic_cumulative.csv"), Layout::Cumulative, 1.0, false).unwrap();
    assert_eq!(syn.get(0, 9), 1084.24);
}

#[test]
fn completed_triangle_matches_published_ultimates() {
    let t = datasets::real(10_000.0).unwrap();
    let fit = ClassicalFit::estimate(&t).unwrap();
    let pred = predict(&t, &fit.factors).unwrap();
    // printed to units from inputs carrying more digits than the data file; +-5 as for the total
    for (i, j, want) in [(1, 9, 10_663_318.0), (2, 8, 10_646_884.0), (5, 5, 10_005_044.0), (9, 1, 8_470_989.0), (9, 9, 9_626_383.0)] {
        assert!((pred.completed[i][j] - want).abs() <= 5.0, "C[{i}][{j}] = {}", pred.completed[i][j]);
    }
    for (i, want) in [(1, 15_126.0), (4, 85_302.0), (8, 1_043_242.0)] {
        assert!((pred.reserves[i] - want).abs() <= 5.0, "R_{i} = {}", pred.reserves[i]);
    }
}

#[test]
fn written_triangle_reloads_identically() {
    let t = datasets::real(10_000.0).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let back = ClaimsTriangle::read(buf.as_slice(), Layout::Cumulative, 1.0, false).unwrap();
    for i in 0..10 {
        for (a, b) in t.row(i).iter().zip(back.row(i)) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }
}

#[test]
fn credibility_msep_scales_with_the_data() {
    // every MSEP term is quadratic in the claim unit
    let small = datasets::real(1.0).unwrap();
    let big = datasets::real(10_000.0).unwrap();
    let fs = ClassicalFit::estimate(&small).unwrap();
    let fb = ClassicalFit::estimate(&big).unwrap();
    let a = cred_msep(&small, &fs.factors, &fs.variances).unwrap();
    let b = cred_msep(&big, &fb.factors, &fb.variances).unwrap();
    assert_relative_eq!(b.total.msep, a.total.msep * 1e8, max_relative = 1e-9);
    assert_relative_eq!(b.total.reserve, a.total.reserve * 1e4, max_relative = 1e-9);
}
