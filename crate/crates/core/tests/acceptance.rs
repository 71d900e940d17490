//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use lattice_core::flows::{conservation_report, dopri_solve, integrate, rhs_raw, Method, System, RK45_ATOL, RK45_RTOL};
use lattice_core::lax::JacobiMatrix;
use lattice_core::maps::{self, Involution, ToTodaMode};
use lattice_core::moser::{self, SpectralData};
use lattice_core::poisson::calculus::{jacobiator, jacobiator_max};
use lattice_core::poisson::{hamiltonian_vector_field, oevel_relation_check, BivectorField, FunctionId, SmoothFunction, TensorId};
use lattice_core::sample::{self, random_coords, uniform};
use lattice_core::verify::{recursion_trace_det_residual, toda_image_equivariance, v1_triple_residuals};
use lattice_core::Kind;
use rand::Rng;

struct Outcome {
    residual: f64,
    detail: String,
    ok: bool,
}

fn within(residual: f64, tol: f64, detail: String) -> Outcome {
    Outcome { residual, ok: residual.is_finite() && residual < tol, detail }
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn tensor(id: TensorId, dim: usize) -> BivectorField {
    BivectorField::new(id, dim).unwrap()
}

fn func(id: FunctionId, dim: usize) -> SmoothFunction {
    SmoothFunction::new(id, dim).unwrap()
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{} in {:.3?}", out.detail, took);
    if let Some(b) = budget {
        if took >= b {
            out.ok = false;
            out.detail.push_str(&format!(" (budget {b:?})"));
        }
    }
    out
}

fn stieltjes_golden() -> Outcome {
    let sd = SpectralData::from_weights(vec![1.0, 2.0], &[0.4, 0.6]).unwrap();
    let j = moser::stieltjes_invert(&sd).unwrap().matrix;
    let r = (j.offdiag()[0].powi(2) - 0.24).abs().max(diff(j.diag(), &[1.4, 1.6]));
    within(r, 1e-12, format!("a1^2 = {:.15}, b = {:?}", j.offdiag()[0].powi(2), j.diag()))
}

fn random_jacobi<R: Rng>(rng: &mut R, n: usize) -> JacobiMatrix {
    JacobiMatrix::new(uniform(rng, sample::SIGNED_RANGE, n), uniform(rng, sample::A_RANGE, n - 1)).unwrap()
}

fn explicit_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let times = [0.0, 0.5, 1.0, 2.0];
    for n in [2, 3] {
        for seed in 1..=5 {
            let s0 = random_jacobi(&mut sample::rng(seed), n).to_state();
            let f = |y: &[f64]| rhs_raw(System::TodaTri, y);
            let ys = dopri_solve(&f, s0.coords(), &times, RK45_ATOL, RK45_RTOL, |_, _| Ok(())).unwrap();
            for (t, y) in times.iter().zip(&ys).skip(1) {
                let explicit = moser::solve_toda_explicit(&s0, *t).unwrap().state();
                worst = worst.max(diff(explicit.coords(), y));
            }
        }
    }
    within(worst, 1e-6, format!("max |explicit - rk45| = {worst:.2e}"))
}

fn isospectrality() -> Outcome {
    let mut rng = sample::rng(3);
    let toda = sample::random_state(&mut rng, Kind::TodaAb, 5).unwrap();
    let volterra = sample::random_state(&mut rng, Kind::VolterraA, 5).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (system, s0) in [(System::TodaTri, &toda), (System::TodaKostant, &toda), (System::VolterraA, &volterra)] {
        let tr = integrate(system, s0, 10.0, 1e-3, Method::Rk4).unwrap();
        let d = conservation_report(&tr, 0).unwrap().max_eigenvalue_drift();
        parts.push(format!("{system} {d:.1e}"));
        worst = worst.max(d);
    }
    within(worst, 1e-8, format!("eigenvalue drift: {}", parts.join(", ")))
}

fn jacobi_identity() -> Outcome {
    let cases = [
        (TensorId::Pi1, Kind::TodaAb, 6),
        (TensorId::Pi2, Kind::TodaAb, 6),
        (TensorId::Pi3, Kind::TodaAb, 6),
        (TensorId::V1, Kind::VolterraA, 5),
        (TensorId::V2, Kind::VolterraA, 5),
        (TensorId::V3, Kind::VolterraA, 5),
        (TensorId::J1, Kind::TodaQp, 6),
        (TensorId::J2, Kind::TodaQp, 6),
        (TensorId::W2, Kind::VolterraQ, 6),
        (TensorId::W3, Kind::VolterraQ, 6),
    ];
    let mut worst: f64 = 0.0;
    for (id, kind, sites) in cases {
        let mut rng = sample::rng(sample::stream_seed(4, id.name().as_str()));
        for _ in 0..100 {
            let x = random_coords(&mut rng, kind, sites);
            let p = tensor(id.clone(), x.len());
            worst = worst.max(jacobiator_max(&p, &x).unwrap());
        }
    }
    let control = jacobiator(&BivectorField::non_poisson_control(), &[1.0, 1.0, 1.0], (0, 1, 2)).unwrap();
    let mut out = within(worst, 1e-6, format!("max Jacobiator {worst:.2e}, control {control:.9}"));
    out.ok &= (control - 3.0).abs() <= 1e-6;
    out
}

fn bihamiltonian_pairs() -> Outcome {
    let pairs = [
        (TensorId::J1, FunctionId::TodaHqp(2), TensorId::J2, FunctionId::TodaHqp(1), Kind::TodaQp, 4),
        (TensorId::W2, FunctionId::VolterraIq(1), TensorId::W3, FunctionId::VolterraIq(0), Kind::VolterraQ, 6),
        (TensorId::Pi2, FunctionId::TodaH(1), TensorId::Pi1, FunctionId::TodaH(2), Kind::TodaAb, 4),
        (TensorId::Pi2, FunctionId::TodaH(2), TensorId::Pi1, FunctionId::TodaH(3), Kind::TodaAb, 4),
        (TensorId::V2, FunctionId::VolterraI(1), TensorId::V1, FunctionId::VolterraI(2), Kind::VolterraA, 5),
    ];
    let mut worst: f64 = 0.0;
    let mut rng = sample::rng(5);
    for (p, f, q, g, kind, sites) in pairs {
        for _ in 0..50 {
            let x = random_coords(&mut rng, kind, sites);
            let d = x.len();
            let lhs = hamiltonian_vector_field(&tensor(p.clone(), d), &func(f.clone(), d), &x).unwrap();
            let rhs = hamiltonian_vector_field(&tensor(q.clone(), d), &func(g.clone(), d), &x).unwrap();
            worst = worst.max(diff(&lhs, &rhs));
        }
    }
    within(worst, 1e-8, format!("max vector residual {worst:.2e}"))
}

fn deformation_relations() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = sample::rng(6);
    for (kind, sites) in [(Kind::TodaQp, 3), (Kind::VolterraQ, 4)] {
        for _ in 0..20 {
            let x = random_coords(&mut rng, kind, sites);
            for i in 0..=2 {
                for j in 1..=2 {
                    worst = worst.max(oevel_relation_check(kind, i, j, &x).unwrap().max());
                }
            }
        }
    }
    within(worst, 1e-5, format!("max residual {worst:.2e}"))
}

fn reductions() -> Outcome {
    let nq = 4;
    let mut rng = sample::rng(7);
    let cases = [
        (TensorId::Pi2, Involution::Phi, 2 * nq - 1, TensorId::V2, Kind::VolterraA, nq - 1),
        (TensorId::PiK(4), Involution::Phi, 2 * nq - 1, TensorId::V3, Kind::VolterraA, nq - 1),
        (TensorId::J2, Involution::Psi, 2 * nq, TensorId::W2, Kind::VolterraQ, nq),
        (TensorId::Jk(4), Involution::Psi, 2 * nq, TensorId::W3, Kind::VolterraQ, nq),
    ];
    let mut reduce_worst: f64 = 0.0;
    for (parent, inv, dim, target, kind, sites) in cases {
        let (p, t) = (tensor(parent, dim), tensor(target, sites));
        for _ in 0..50 {
            let y = random_coords(&mut rng, kind, sites);
            reduce_worst = reduce_worst.max((maps::fixed_set_reduce(&p, inv, &y).unwrap() - t.eval(&y).unwrap()).amax());
        }
    }
    let mut diagram_worst: f64 = 0.0;
    for (j, pi) in [(TensorId::J2, TensorId::Pi2), (TensorId::Jk(4), TensorId::PiK(4))] {
        let (j, pi) = (tensor(j, 2 * nq), tensor(pi, 2 * nq - 1));
        for _ in 0..50 {
            let q = random_coords(&mut rng, Kind::VolterraQ, nq);
            let d = maps::gmap_jacobian(&q);
            let left = &d * maps::fixed_set_reduce(&j, Involution::Psi, &q).unwrap() * d.transpose();
            let right = maps::fixed_set_reduce(&pi, Involution::Phi, &maps::gmap_raw(&q)).unwrap();
            diagram_worst = diagram_worst.max((left - right).amax());
        }
    }
    let mut out = within(reduce_worst, 1e-8, format!("reduction {reduce_worst:.2e}, diagram {diagram_worst:.2e}"));
    out.ok &= diagram_worst < 1e-7;
    out.residual = reduce_worst.max(diagram_worst);
    out
}

fn v1_triple() -> Outcome {
    let mut rng = sample::rng(8);
    let mut worst = [0.0f64; 3];
    for _ in 0..20 {
        let a = random_coords(&mut rng, Kind::VolterraA, 5);
        for (w, r) in worst.iter_mut().zip(v1_triple_residuals(&a).unwrap()) {
            *w = w.max(r);
        }
    }
    let m = worst.iter().copied().fold(0.0, f64::max);
    within(m, 1e-8, format!("table-lie {:.2e}, table-pushforward {:.2e}, lie-pushforward {:.2e}", worst[0], worst[1], worst[2]))
}

fn trace_det() -> Outcome {
    let mut rng = sample::rng(9);
    let mut worst: f64 = 0.0;
    for n in [4, 6] {
        let (i0, i1) = (func(FunctionId::VolterraIq(0), n), func(FunctionId::VolterraIq(1), n));
        for _ in 0..50 {
            let q = random_coords(&mut rng, Kind::VolterraQ, n);
            worst = worst.max(recursion_trace_det_residual(&q, &i0, &i1).unwrap());
        }
    }
    within(worst, 1e-8, format!("max relative residual {worst:.2e}"))
}

fn moser_round_trip() -> Outcome {
    let mut rng = sample::rng(10);
    let mut worst: f64 = 0.0;
    let mut fallbacks = 0;
    for k in 0..100 {
        let n = rng.random_range(2..=6);
        let mut j = random_jacobi(&mut rng, n);
        if k % 4 == 0 {
            j = JacobiMatrix::new(vec![0.0; n], j.offdiag().to_vec()).unwrap();
        }
        let inv = moser::stieltjes_invert(&moser::spectral_decompose(&j).unwrap()).unwrap();
        fallbacks += usize::from(inv.fallback);
        worst = worst.max(diff(j.diag(), inv.matrix.diag()).max(diff(j.offdiag(), inv.matrix.offdiag())));
    }
    let mut out = within(worst, 1e-9, format!("max error {worst:.2e}, {fallbacks} fallback inversions"));
    out.ok &= fallbacks > 0;
    out
}

fn chopping() -> Outcome {
    let j = maps::chop_square(&[1.0; 4]).unwrap();
    let exact = j.offdiag() == [1.0, 1.0] && j.diag() == [1.0, 2.0, 1.0];
    let mut rng = sample::rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let a0 = random_coords(&mut rng, Kind::VolterraA, 5);
        worst = worst.max(toda_image_equivariance(&a0, ToTodaMode::Henon, 2.0).unwrap());
    }
    let mut out = within(worst, 1e-6, format!("golden A = {:?}, B = {:?}; Hénon equivariance {worst:.2e}", j.offdiag(), j.diag()));
    out.ok &= exact;
    out
}

fn main() {
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("two-site spectral inversion golden", Some(Duration::from_millis(1)), stieltjes_golden),
        ("explicit solution vs RK45", Some(Duration::from_secs(1)), explicit_oracle),
        ("isospectrality", Some(Duration::from_secs(10)), isospectrality),
        ("Jacobi identity", None, jacobi_identity),
        ("bi-Hamiltonian pairs", None, bihamiltonian_pairs),
        ("deformation relations", None, deformation_relations),
        ("reductions and diagram", None, reductions),
        ("v1 triple consistency", None, v1_triple),
        ("recursion trace/det", None, trace_det),
        ("spectral round trip", None, moser_round_trip),
        ("chopping golden and Hénon equivariance", None, chopping),
    ];
    let mut failed = 0;
    for (k, (name, budget, f)) in criteria.into_iter().enumerate() {
        let out = timed(budget, f);
        let tag = if out.ok { "PASS" } else { "FAIL" };
        failed += usize::from(!out.ok);
        println!("{tag} [{:>2}] {name}: residual {:.3e}; {}", k + 1, out.residual, out.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
