use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use helifb_core::exact::RadialSolution;
use helifb_core::fb_analysis::{dyadic_radii, flatness_profile, lipschitz_report, FlatnessOptions};
use helifb_core::reconstruct::{field_residuals, ProbeOptions};
use helifb_core::{
    extract_free_boundary, velocity_cross_section, BernoulliConstant, CrossSectionGrid, DomainSpec,
    FixedBoundarySpec, Pitch, PlanarField, Point2, StreamField, VorticityProfile,
};

fn radial_field(h: f64) -> (StreamField, RadialSolution, Pitch) {
    let pitch = Pitch::new(1.0).unwrap();
    let sol = RadialSolution::new(BernoulliConstant::new(1.0).unwrap(), 1.0, pitch);
    let domain = DomainSpec::Annulus {
        center: Point2::new(0.0, 0.0),
        r_inner: 0.25,
        r_outer: 1.25,
    };
    let grid = Arc::new(CrossSectionGrid::build(&domain, h, &FixedBoundarySpec::new()).unwrap());
    let psi = StreamField::from_fn(grid, |p| sol.value(p).unwrap_or(0.0).max(0.0));
    (psi, sol, pitch)
}

fn analysis(c: &mut Criterion) {
    let h = 1.0 / 128.0;
    let (psi, sol, pitch) = radial_field(h);
    c.bench_function("extract_free_boundary/128", |b| b.iter(|| black_box(extract_free_boundary(&psi, 0.5 * h))));
    c.bench_function("lipschitz_report/128", |b| b.iter(|| black_box(lipschitz_report(&psi, None))));
    let radii = dyadic_radii(0.25, 4.0 * h);
    let opts = FlatnessOptions::default();
    c.bench_function("flatness_profile/radial", |b| {
        b.iter(|| black_box(flatness_profile(&sol, Point2::new(1.0, 0.0), pitch, 1.0, &radii, &opts).unwrap()))
    });
}

fn reconstruction(c: &mut Criterion) {
    let (psi, _, pitch) = radial_field(1.0 / 64.0);
    c.bench_function("velocity_cross_section/64", |b| b.iter(|| black_box(velocity_cross_section(&psi, pitch))));
    let mut group = c.benchmark_group("field_residuals");
    group.sample_size(10);
    group.bench_function("64", |b| {
        b.iter(|| black_box(field_residuals(&psi, pitch, &VorticityProfile::zero(), &ProbeOptions::default()).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, analysis, reconstruction);
criterion_main!(benches);
