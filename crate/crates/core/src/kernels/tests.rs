use super::*;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_detector() -> Detector {
    Detector { extent: [1.6, 1.2, 0.8], pixels: [16, 12] }
}

fn variants() -> Vec<KernelSpec> {
    let det = small_detector();
    let optics = Optics::table1();
    let lap_domain = Domain::new(&[0.05], &[4.0]).unwrap();
    vec![
        KernelSpec::Gaussian1D(Gaussian1D::new(0.05, 100).unwrap()),
        KernelSpec::Laplace(DiscreteLaplace::uniform(30, 10.0, false, lap_domain).unwrap()),
        KernelSpec::Laplace(DiscreteLaplace::uniform(30, 10.0, true, lap_domain).unwrap()),
        KernelSpec::Astigmatism(Astigmatism::from_optics(det, &optics, 2).unwrap()),
        KernelSpec::DoubleHelix(DoubleHelix::from_optics(det, &optics, 2).unwrap()),
        KernelSpec::MaTirf(MaTirf::from_optics(det, &optics, 3, PenetrationModel::Verbatim).unwrap()),
    ]
}

fn random_interior(k: &dyn Kernel, rng: &mut ChaCha8Rng) -> Point {
    let d = k.domain();
    let c: Vec<f64> = (0..d.dim())
        .map(|j| {
            let w = d.hi()[j] - d.lo()[j];
            d.lo()[j] + w * (0.05 + 0.9 * rng.random::<f64>())
        })
        .collect();
    Point::new(&c)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    diff / crate::linalg::norm2(b).max(1e-300)
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in variants() {
        for _ in 0..25 {
            let x = random_interior(&spec, &mut rng);
            let g = eval_grad_phi(&spec, &x).unwrap();
            for j in 0..spec.dim() {
                let h = 1e-5;
                let (mut xp, mut xm) = (x, x);
                xp.as_mut_slice()[j] += h;
                xm.as_mut_slice()[j] -= h;
                let fd: Vec<f64> = eval_phi(&spec, &xp)
                    .unwrap()
                    .iter()
                    .zip(&eval_phi(&spec, &xm).unwrap())
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                if crate::linalg::norm2(&fd) < 1e-9 {
                    // single-angle TIRF has no depth dependence
                    assert!(crate::linalg::norm2(g.col(j)) < 1e-8);
                    continue;
                }
                let e = rel_err(g.col(j), &fd);
                assert!(e < 1e-5, "{} axis {j} at {x:?}: {e}", spec.variant_name());
            }
        }
    }
}

#[test]
fn adjoint_gradient_is_contracted_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in variants() {
        let p: Vec<f64> = (0..spec.obs_dim()).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..5 {
            let x = random_interior(&spec, &mut rng);
            let mut grad = vec![0.0; spec.dim()];
            let v = spec.adjoint_grad_at(&p, x.as_slice(), &mut grad);
            let phi = eval_phi(&spec, &x).unwrap();
            assert!((v - crate::linalg::dot(&phi, &p)).abs() < 1e-12 * (1.0 + v.abs()));
            let jac = eval_grad_phi(&spec, &x).unwrap();
            let expect = jac.tr_mul_vec(&p);
            for (a, b) in grad.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn correlation_is_squared_norm_and_adjoint_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in variants() {
        let x = random_interior(&spec, &mut rng);
        let xp = random_interior(&spec, &mut rng);
        let phi = eval_phi(&spec, &x).unwrap();
        let c = correlation(&spec, &x, &x).unwrap();
        let n2 = crate::linalg::dot(&phi, &phi);
        assert!((c - n2).abs() <= 1e-12 * n2);
        let cross = correlation(&spec, &x, &xp).unwrap();
        let adj = apply_adjoint(&spec, &eval_phi(&spec, &xp).unwrap(), &x).unwrap();
        assert!((cross - adj).abs() <= 1e-12 * cross.abs().max(1e-300));
        assert_eq!(apply_adjoint(&spec, &vec![0.0; spec.obs_dim()], &x).unwrap(), 0.0);
    }
}

#[test]
fn add_phi_accumulates_scaled_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for spec in variants() {
        let x = random_interior(&spec, &mut rng);
        let phi = eval_phi(&spec, &x).unwrap();
        let base: Vec<f64> = (0..spec.obs_dim()).map(|i| (i % 7) as f64 * 0.1).collect();
        let mut out = base.clone();
        spec.add_phi_into(x.as_slice(), -1.7, &mut out);
        let want: Vec<f64> = base.iter().zip(&phi).map(|(b, p)| b - 1.7 * p).collect();
        assert!(rel_err(&out, &want) < 1e-14, "{}", spec.variant_name());
    }
}

#[test]
fn forward_operator_linearity() {
    let spec = &variants()[3];
    let x = Point::d3(0.7, 0.5, 0.3);
    assert!(apply_forward(spec, &DiscreteMeasure::new()).unwrap().iter().all(|v| *v == 0.0));
    let one = apply_forward(spec, &DiscreteMeasure::from_parts(&[1.0], &[x])).unwrap();
    assert_eq!(one, eval_phi(spec, &x).unwrap());
    let two = apply_forward(spec, &DiscreteMeasure::from_parts(&[2.0], &[x])).unwrap();
    for (a, b) in two.iter().zip(&one) {
        assert_eq!(*a, 2.0 * b);
    }
    let outside = DiscreteMeasure::from_parts(&[1.0], &[Point::d3(0.7, 0.5, 0.9)]);
    assert!(matches!(apply_forward(spec, &outside), Err(Error::Domain { .. })));
}

#[test]
fn laplace_examples() {
    let d = Domain::new(&[0.0], &[10.0]).unwrap();
    let k = DiscreteLaplace::new(vec![0.0], None, false, d).unwrap();
    assert_eq!(eval_phi(&k, &Point::d1(5.0)).unwrap(), vec![1.0]);
    let s = vec![0.0, 0.5, 1.0, 3.0];
    let k = DiscreteLaplace::new(s.clone(), None, false, d).unwrap();
    let g = eval_grad_phi(&k, &Point::d1(0.7)).unwrap();
    for (i, sk) in s.iter().enumerate() {
        assert!((g[(i, 0)] + sk * (-sk * 0.7).exp()).abs() < 1e-15);
    }
    let kn = DiscreteLaplace::new(s.clone(), None, true, d).unwrap();
    for x in [0.0, 0.3, 2.0, 9.5] {
        let phi = eval_phi(&kn, &Point::d1(x)).unwrap();
        assert!((crate::linalg::norm2(&phi) - 1.0).abs() < 1e-14);
    }
    // closed sum of the discretized correlation
    let (x, xp) = (0.4, 1.3);
    let xi = |x: f64| 1.0 / s.iter().map(|sk| (-2.0 * sk * x).exp()).sum::<f64>().sqrt();
    let expect: f64 = s.iter().map(|sk| xi(x) * xi(xp) * (-sk * (x + xp)).exp()).sum();
    let got = correlation(&kn, &Point::d1(x), &Point::d1(xp)).unwrap();
    assert!((got - expect).abs() < 1e-14);
    assert!(DiscreteLaplace::new(vec![1.0, 0.5], None, false, d).is_err());
    assert!(DiscreteLaplace::new(vec![-1.0], None, false, d).is_err());
}

#[test]
fn higher_derivatives_match_differences() {
    let lap_domain = Domain::new(&[0.05], &[4.0]).unwrap();
    let kernels: Vec<KernelSpec> = vec![
        KernelSpec::Gaussian1D(Gaussian1D::new(0.05, 100).unwrap()),
        KernelSpec::Laplace(DiscreteLaplace::uniform(20, 8.0, false, lap_domain).unwrap()),
        KernelSpec::Laplace(DiscreteLaplace::uniform(20, 8.0, true, lap_domain).unwrap()),
    ];
    for k in &kernels {
        let x = if matches!(k, KernelSpec::Gaussian1D(_)) { 0.43 } else { 1.1 };
        let d = k.derivatives_1d(x, 5).unwrap();
        let mut phi = vec![0.0; k.obs_dim()];
        k.phi_into(&[x], &mut phi);
        assert!(rel_err(&d[0], &phi) < 1e-14);
        let mut g = vec![0.0; k.obs_dim()];
        k.grad_phi_into(&[x], &mut g);
        assert!(rel_err(&d[1], &g) < 1e-13);
        for n in 1..5 {
            let h = 1e-5;
            let up = k.derivatives_1d(x + h, n - 1).unwrap();
            let dn = k.derivatives_1d(x - h, n - 1).unwrap();
            let fd: Vec<f64> = up[n - 1].iter().zip(&dn[n - 1]).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            assert!(rel_err(&d[n], &fd) < 1e-6, "{} order {n}", k.variant_name());
        }
    }
    assert!(variants()[3].derivatives_1d(0.1, 2).is_err());
}

#[test]
fn gaussian_mode_has_zero_slope() {
    let k = Gaussian1D::new(0.05, 100).unwrap();
    let t = k.samples()[40];
    let g = eval_grad_phi(&k, &Point::d1(t)).unwrap();
    assert_eq!(g[(40, 0)], 0.0);
    let phi = eval_phi(&k, &Point::d1(t)).unwrap();
    assert!((phi[40] - 1.0 / (2.0 * PI * 0.0025f64).sqrt()).abs() < 1e-12);
}

#[test]
fn continuous_laplace_correlations() {
    let u = ContinuousLaplace::new(false);
    let n = ContinuousLaplace::new(true);
    assert_eq!(u.correlation(1.0, 1.0).unwrap(), 0.5);
    assert!((n.correlation(2.5, 2.5).unwrap() - 1.0).abs() < 1e-15);
    assert!((n.correlation(1.0, 4.0).unwrap() - 0.8).abs() < 1e-15);
    assert_eq!(u.correlation(0.0, 0.0), Err(Error::Singularity));
    // cross derivatives against differences of the closed form
    for k in [u, n] {
        let (x, xp, h) = (0.8, 1.7, 1e-4);
        let c = |a: f64, b: f64| k.correlation(a, b).unwrap();
        assert!((k.cross_derivative(0, 0, x, xp) - c(x, xp)).abs() < 1e-14);
        let d10 = (c(x + h, xp) - c(x - h, xp)) / (2.0 * h);
        assert!((k.cross_derivative(1, 0, x, xp) - d10).abs() < 1e-7);
        let d11 = (c(x + h, xp + h) - c(x + h, xp - h) - c(x - h, xp + h) + c(x - h, xp - h)) / (4.0 * h * h);
        assert!((k.cross_derivative(1, 1, x, xp) - d11).abs() < 1e-6);
        let d02 = (c(x, xp + h) - 2.0 * c(x, xp) + c(x, xp - h)) / (h * h);
        assert!((k.cross_derivative(0, 2, x, xp) - d02).abs() < 1e-5);
    }
}

#[test]
fn atom_matrices_layout_and_gram() {
    let k = Gaussian1D::new(0.05, 100).unwrap();
    let pos = [Point::d1(0.3), Point::d1(0.37)];
    let am = atom_matrices(&k, &pos[..1], false).unwrap();
    assert_eq!(am.phi.col(0), &eval_phi(&k, &pos[0]).unwrap()[..]);
    assert!(am.gamma().is_none());
    let am = atom_matrices(&k, &pos, true).unwrap();
    let gamma = am.gamma().unwrap();
    assert_eq!(gamma.cols(), 4);
    assert!(!am.rank_warning);
    // Gram entries: correlations and their partial derivatives
    let gram = gamma.gram();
    let h = 1e-6;
    let c = |a: f64, b: f64| correlation(&k, &Point::d1(a), &Point::d1(b)).unwrap();
    let (x0, x1) = (0.3, 0.37);
    assert!((gram[(0, 1)] - c(x0, x1)).abs() < 1e-12 * c(x0, x1).abs());
    let d = (c(x0, x1 + h) - c(x0, x1 - h)) / (2.0 * h);
    assert!((gram[(0, 3)] - d).abs() < 1e-6 * d.abs());
    let d2 = (c(x0 + h, x1 + h) - c(x0 + h, x1 - h) - c(x0 - h, x1 + h) + c(x0 - h, x1 - h)) / (4.0 * h * h);
    assert!((gram[(2, 3)] - d2).abs() < 1e-4 * d2.abs());
    let dup = atom_matrices(&k, &[pos[0], pos[0]], true).unwrap();
    assert!(dup.rank_warning);
}

#[test]
fn tirf_angles_match_reference_values() {
    let (angles, depths) = Optics::table1().tirf_angles_and_depths(4, PenetrationModel::Verbatim).unwrap();
    for (a, want) in angles.iter().zip([61.63, 67.61, 73.6, 79.58]) {
        assert!((a.to_degrees() - want).abs() < 0.01, "{}", a.to_degrees());
    }
    assert!(depths[0].abs() < 1e-12);
    assert!(depths.windows(2).all(|w| w[1] > w[0]));
    let (a1, s1) = Optics::table1().tirf_angles_and_depths(1, PenetrationModel::Verbatim).unwrap();
    assert_eq!(a1[0], (1.333f64 / 1.515).asin());
    assert_eq!(s1[0], 0.0);
    let (_, sq) = Optics::table1().tirf_angles_and_depths(4, PenetrationModel::SquareRoot).unwrap();
    for (v, s) in depths.iter().zip(&sq) {
        let pre = 4.0 * PI * 1.515 / 0.66;
        assert!((s * s / pre - v).abs() < 1e-12);
    }
    let bad = Optics { n_transmitted: 1.6, ..Optics::table1() };
    assert!(matches!(bad.tirf_angles_and_depths(4, PenetrationModel::Verbatim), Err(Error::Config(_))));
}

#[test]
fn astigmatism_widths() {
    let k = Astigmatism::table1(1).unwrap();
    let s0 = 0.42 * 0.66 / 1.49;
    let (s1, _) = k.astig_sigmas(0.2 / -0.79);
    assert!((s1 - s0).abs() < 1e-15);
    assert!((s0 - 0.18604).abs() < 1e-5);
    for i in 0..50 {
        let z = -1.0 + 0.04 * i as f64;
        let (a, b) = k.astig_sigmas(z);
        assert_eq!(b, k.astig_sigmas(-z).0);
        assert!(a >= s0 && b >= s0);
    }
}

#[test]
fn helix_offsets_examples() {
    let k = DoubleHelix::table1(1).unwrap();
    assert_eq!(k.helix_offsets(0.0), (0.5, -0.0));
    for i in 0..20 {
        let (r1, r2) = k.helix_offsets(0.05 * i as f64);
        assert!((r1 * r1 + r2 * r2 - 0.25).abs() < 1e-15);
    }
    let (r1, r2) = k.helix_offsets(0.5);
    let th = 0.1923 * PI;
    assert!((th - 0.6041).abs() < 1e-4);
    assert!((r1 - 0.5 * th.cos()).abs() < 1e-12 && (r2 + 0.5 * th.sin()).abs() < 1e-12);
}

/// Composite Simpson rule on `[a, b]`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn astigmatism_in_focus_matches_quadrature_and_is_symmetric() {
    let det = Detector { extent: [1.6, 1.6, 0.8], pixels: [16, 16] };
    let k = Astigmatism::from_optics(det, &Optics::table1(), 1).unwrap();
    let z = k.focal_planes()[0];
    // molecule at the center of pixel (7, 7), in its focal plane
    let c = 0.75;
    let phi = eval_phi(&k, &Point::d3(c, c, z)).unwrap();
    let (s1, s2) = k.astig_sigmas(0.0);
    assert_eq!(s1, s2);
    for i2 in 0..16 {
        for i1 in 0..16 {
            assert!((phi[i2 * 16 + i1] - phi[i1 * 16 + i2]).abs() <= 1e-15 * phi[i1 * 16 + i2]);
        }
    }
    let h = 0.1;
    let dens = |u: f64| (-(u - c) * (u - c) / (2.0 * s1 * s1)).exp() / (s1 * (2.0 * PI).sqrt());
    for (i1, i2) in [(7, 7), (6, 8), (3, 9), (12, 1)] {
        let q1 = simpson(dens, i1 as f64 * h, (i1 + 1) as f64 * h, 4000);
        let q2 = simpson(dens, i2 as f64 * h, (i2 + 1) as f64 * h, 4000);
        let want = q1 * q2;
        assert!((phi[i2 * 16 + i1] - want).abs() < 1e-10 * want, "{i1},{i2}");
    }
}

/// 16 x 16 midpoint rule per pixel compared with the erf form. The plain
/// midpoint rule carries an `h^2 / 24 * f''` bias, so it is checked against
/// that bound, and its Richardson extrapolation against `1e-6`.
#[test]
fn pixel_integrals_match_subpixel_quadrature() {
    let det = Detector { extent: [0.8, 0.8, 0.8], pixels: [8, 8] };
    let optics = Optics::table1();
    let kernels: Vec<KernelSpec> = vec![
        KernelSpec::Astigmatism(Astigmatism::from_optics(det, &optics, 2).unwrap()),
        KernelSpec::DoubleHelix(DoubleHelix::from_optics(det, &optics, 1).unwrap()),
        KernelSpec::MaTirf(MaTirf::from_optics(det, &optics, 2, PenetrationModel::Verbatim).unwrap()),
    ];
    let x = Point::d3(0.41, 0.37, 0.3);
    for k in &kernels {
        let phi = eval_phi(k, &x).unwrap();
        let planes = phi.len() / 64;
        let mid = |n: usize| -> Vec<f64> { midpoint_image(k, &x, planes, n) };
        let (q16, q32) = (mid(16), mid(32));
        let peak = phi.iter().fold(0.0f64, |m, v| m.max(*v));
        for (i, v) in phi.iter().enumerate() {
            let rich = (4.0 * q32[i] - q16[i]) / 3.0;
            assert!((rich - v).abs() <= 1e-6 * peak, "{} entry {i}", k.variant_name());
            // |f''| <= f_max / sigma^2 for a normalized Gaussian profile product
            let sub = 0.1 / 16.0;
            let bound = 2.0 * sub * sub / 24.0 / (0.186 * 0.186) * 1.2 * peak;
            assert!((q16[i] - v).abs() <= bound);
        }
    }
}

fn midpoint_image(k: &KernelSpec, x: &Point, planes: usize, n: usize) -> Vec<f64> {
    let h = 0.1 / n as f64;
    let fine_n = 8 * n;
    let dens = density_samples(k, x, fine_n, h);
    let mut out = vec![0.0; 64 * planes];
    for p in 0..planes {
        for j2 in 0..fine_n {
            for j1 in 0..fine_n {
                out[p * 64 + (j2 / n) * 8 + j1 / n] += dens[p * fine_n * fine_n + j2 * fine_n + j1] * h * h;
            }
        }
    }
    out
}

/// PSF density at the centers of an `n x n` grid of cells of width `h`.
fn density_samples(k: &KernelSpec, x: &Point, n: usize, h: f64) -> Vec<f64> {
    let gauss = |u: f64, s: f64| (-u * u / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
    let mut out = Vec::new();
    let centers: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    match k {
        KernelSpec::Astigmatism(a) => {
            for z in a.focal_planes() {
                let (s1, s2) = a.astig_sigmas(x[2] - z);
                for c2 in &centers {
                    for c1 in &centers {
                        out.push(gauss(c1 - x[0], s1) * gauss(c2 - x[1], s2));
                    }
                }
            }
        }
        KernelSpec::DoubleHelix(d) => {
            for z in d.focal_planes() {
                let (r1, r2) = d.helix_offsets(x[2] - z);
                for c2 in &centers {
                    for c1 in &centers {
                        let mut v = 0.0;
                        for u in [-1.0, 1.0] {
                            v += gauss(c1 - x[0] - u * r1, d.sigma) * gauss(c2 - x[1] - u * r2, d.sigma);
                        }
                        out.push(v);
                    }
                }
            }
        }
        KernelSpec::MaTirf(t) => {
            let xi = 1.0 / t.depths().iter().map(|s| (-2.0 * s * x[2]).exp()).sum::<f64>().sqrt();
            for s in t.depths() {
                let w = xi * (-s * x[2]).exp();
                for c2 in &centers {
                    for c1 in &centers {
                        out.push(w * gauss(c1 - x[0], t.sigma) * gauss(c2 - x[1], t.sigma));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

#[test]
fn grid_adjoint_matches_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in variants() {
        let p: Vec<f64> = (0..spec.obs_dim()).map(|_| rng.random::<f64>() - 0.5).collect();
        let grid = if spec.dim() == 3 {
            Grid::cell_centered(spec.domain(), &[5, 4, 3])
        } else {
            Grid::inclusive(spec.domain(), &[17])
        };
        let fast = spec.adjoint_on_grid(&p, &grid);
        for (i, x) in grid.points().enumerate() {
            let slow = apply_adjoint(&spec, &p, &x).unwrap();
            assert!((fast[i] - slow).abs() < 1e-12 * (1.0 + slow.abs()), "{}", spec.variant_name());
        }
    }
}

#[test]
fn pixel_profile_tails_and_mass() {
    let p = pixel_profile(0.0, 0.1, 64, 3.2, 0.2);
    let total: f64 = p.value.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(p.d_center.iter().sum::<f64>().abs() < 1e-10);
    // far tail keeps relative accuracy
    let far = pixel_profile(0.0, 0.1, 1, 2.0, 0.2);
    let want = 0.5 * (libm::erfc(1.9 / (0.2 * core::f64::consts::SQRT_2)) - libm::erfc(2.0 / (0.2 * core::f64::consts::SQRT_2)));
    assert!((far.value[0] - want).abs() < 1e-14 * want);
    assert!(far.value[0] > 0.0);
}
