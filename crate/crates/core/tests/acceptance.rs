//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use common::*;
use wginv::douglas::{douglas_norm_certificate, oblique_pinv, oblique_pinv_with_inverse, reduced_solution};
use wginv::least_squares::{a1a2_lss, blue, optimal_lss};
use wginv::linalg::quadratic_form;
use wginv::weighted_inverse::{verify_gi, wgi_family};
use wginv::{ObliqueProjection, Tolerances};

type Outcome = Result<String, String>;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn dims(rng: &mut ChaCha8Rng, max: usize) -> (usize, usize) {
    (rng.random_range(1..=max), rng.random_range(1..=max))
}

fn random_z(rng: &mut ChaCha8Rng, (r, c): (usize, usize)) -> DMatrix<f64> {
    gaussian(rng, r, c)
}

fn penrose_residuals() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let mut worst: f64 = 0.0;
    let mut members = 0;
    for inst in 0..500 {
        let (m, n) = dims(&mut rng, 8);
        let rb = rng.random_range(0..=m.min(n));
        let b = rank_r(&mut rng, m, n, rb);
        let rank = rng.random_range(0..=n);
        let a1 = psd(&mut rng, n, rank);
        let rank = rng.random_range(0..=m);
        let a2 = psd(&mut rng, m, rank);
        let fam = wgi_family(&b, &a1, &a2, &tol()).map_err(|e| format!("instance {inst}: {e}"))?;
        let (s1, s2) = fam.parameter_shapes();
        let mut candidates = vec![fam.canonical().clone()];
        for _ in 0..3 {
            let (z1, z2) = (random_z(&mut rng, s1), random_z(&mut rng, s2));
            candidates.push(fam.member(&z1, &z2).map_err(|e| format!("instance {inst}: {e}"))?);
        }
        for c in &candidates {
            let r = verify_gi(&b, &a1, &a2, c, &tol()).map_err(|e| e.to_string())?;
            worst = worst.max(r.max());
            members += 1;
            if r.max() > 1e-8 {
                return Err(format!("instance {inst} ({m}x{n}, rank {rb}): {r:?}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        return Err(format!("runtime {elapsed:.1}s"));
    }
    Ok(format!("{members} members, max residual {worst:.2e}, {elapsed:.2}s"))
}

fn moore_penrose_degeneration() -> Outcome {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (m, n) = dims(&mut rng, 8);
        let rank = rng.random_range(0..=m.min(n));
        let b = rank_r(&mut rng, m, n, rank);
        let fam = wgi_family(&b, &DMatrix::identity(n, n), &DMatrix::identity(m, m), &tol())
            .map_err(|e| e.to_string())?;
        if !fam.is_singleton() {
            return Err(format!("instance {inst}: family has dimension {}", fam.parameter_dim()));
        }
        let err = rel_err(fam.canonical(), &reference_pinv(&b));
        worst = worst.max(err);
        if err > 1e-10 {
            return Err(format!("instance {inst}: deviation {err:.2e}"));
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn invertible_weights() -> Outcome {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (m, n) = dims(&mut rng, 8);
        let rank = rng.random_range(0..=m.min(n));
        let b = rank_r(&mut rng, m, n, rank);
        let a1 = spd(&mut rng, n);
        let a2 = spd(&mut rng, m);
        let fam = wgi_family(&b, &a1, &a2, &tol()).map_err(|e| e.to_string())?;
        if !fam.is_singleton() {
            return Err(format!("instance {inst}: not a singleton"));
        }
        let r1 = reference_inv_sqrt(&a1);
        let s2 = reference_sqrt(&a2);
        let oracle = &r1 * reference_pinv(&(&s2 * &b * &r1)) * &s2;
        let err = (fam.canonical() - &oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE);
        let err = if oracle.norm() == 0.0 { fam.canonical().norm() } else { err };
        worst = worst.max(err);
        if err > 1e-8 {
            return Err(format!("instance {inst}: relative deviation {err:.2e}"));
        }
    }
    Ok(format!("max relative deviation {worst:.2e}"))
}

/// `(B, P, Q)` with `R(P) = R(B)` and `N(Q) = N(B)`.
fn oblique_instance(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = dims(rng, 8);
    let rank = rng.random_range(0..=m.min(n));
    let b = rank_r(rng, m, n, rank);
    let (range, range_perp, row, kernel) = four_spaces(&b);
    let p_null = skewed_complement(rng, &range, &range_perp, 0.5);
    let q_range = skewed_complement(rng, &kernel, &row, 0.5);
    let p = projection_from_bases(&range, &p_null);
    let q = projection_from_bases(&q_range, &kernel);
    (b, p, q)
}

fn projection(m: &DMatrix<f64>) -> Result<ObliqueProjection<f64>, String> {
    ObliqueProjection::from_matrix(m.clone(), &tol()).map_err(|e| e.to_string())
}

fn oblique_round_trip() -> Outcome {
    let mut rng = rng(4);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (b, p, q) = oblique_instance(&mut rng);
        let c = oblique_pinv(&b, &projection(&p)?, &projection(&q)?, &tol()).map_err(|e| format!("instance {inst}: {e}"))?;
        let bc = &b * &c;
        let cb = &c * &b;
        let e1 = rel_err(&bc, &p).max(rel_err(&cb, &q));
        let again = oblique_pinv(&b, &projection(&bc)?, &projection(&cb)?, &tol()).map_err(|e| e.to_string())?;
        let e2 = rel_err(&again, &c);
        worst = worst.max(e1).max(e2);
        if e1 > 1e-9 || e2 > 1e-9 {
            return Err(format!("instance {inst}: BC/CB {e1:.2e}, round trip {e2:.2e}"));
        }
    }
    Ok(format!("100 pairs, max deviation {worst:.2e}"))
}

fn inner_inverse_invariance() -> Outcome {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (b, p, q) = oblique_instance(&mut rng);
        let (pp, qq) = (projection(&p)?, projection(&q)?);
        let base = oblique_pinv_with_inverse(&b, &reference_pinv(&b), &pp, &qq, &tol()).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let g = perturbed_inner_inverse(&mut rng, &b);
            let c = oblique_pinv_with_inverse(&b, &g, &pp, &qq, &tol()).map_err(|e| format!("instance {inst}: {e}"))?;
            let err = rel_err(&c, &base);
            worst = worst.max(err);
            if err > 1e-9 {
                return Err(format!("instance {inst}: deviation {err:.2e}"));
            }
        }
    }
    Ok(format!("100 instances x 10 inverses, max deviation {worst:.2e}"))
}

/// `inf { λ : λ A A^T - B B^T ⪰ 0 }` by bisection on the smallest eigenvalue.
fn bisection_infimum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let aa = a * a.transpose();
    let bb = b * b.transpose();
    let floor = 1e-12 * bb.norm().max(1e-300);
    let psd_at = |lambda: f64| {
        let s = &aa * lambda - &bb;
        sym_eigen(&s).eigenvalues.min() >= -floor * lambda.max(1.0)
    };
    let mut hi = 1.0;
    while !psd_at(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psd_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn norm_identity() -> Outcome {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (m, n) = dims(&mut rng, 6);
        let r = rng.random_range(1..=m.min(n));
        let a = rank_r(&mut rng, m, n, r);
        let k = rng.random_range(1..=4);
        let b = &a * gaussian(&mut rng, n, k);
        let d = reduced_solution(&a, &b, &tol()).map_err(|e| e.to_string())?.solution;
        let cert = douglas_norm_certificate(&a, &b, &d, &tol()).map_err(|e| e.to_string())?;
        let norm_sq = sym_eigen(&(d.transpose() * &d)).eigenvalues.max();
        let oracle = bisection_infimum(&a, &b);
        let gaps = [
            (cert.infimum - norm_sq).abs() / norm_sq,
            (cert.reduced_norm_sq - norm_sq).abs() / norm_sq,
            (oracle - norm_sq).abs() / norm_sq,
        ];
        let gap = gaps.iter().copied().fold(0.0, f64::max);
        worst = worst.max(gap);
        if gap > 1e-7 {
            return Err(format!("instance {inst}: relative gaps {gaps:?}"));
        }
    }
    Ok(format!("max relative gap {worst:.2e}"))
}

/// Weights for least squares instances: full, singular, zero, and weights
/// whose kernel meets `R(B)`.
fn lss_instance(rng: &mut ChaCha8Rng, inst: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let (m, n) = dims(rng, 7);
    let rank = rng.random_range(0..=m.min(n));
    let b = rank_r(rng, m, n, rank);
    let rank = rng.random_range(0..=n);
    let a1 = psd(rng, n, rank);
    let a2 = if inst % 4 == 3 && m > 1 {
        // Kernel of A2 contains a column of B.
        let (range, _) = eig_split(&(&b * b.transpose()), 1e-12);
        if range.ncols() > 0 {
            let v = range.column(0).into_owned();
            let g = gaussian(rng, m, m);
            let proj = DMatrix::identity(m, m) - &v * v.transpose();
            &proj * &g * g.transpose() * &proj
        } else {
            psd(rng, m, m - 1)
        }
    } else {
        psd(rng, m, rank)
    };
    let y = gaussian_vec(rng, m);
    (b, a1, a2, y)
}

fn two_stage_optimality() -> Outcome {
    let mut rng = rng(7);
    let mut overlap = 0;
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (b, a1, a2, y) = lss_instance(&mut rng, inst);
        let n = b.ncols();
        let f = a1a2_lss(&b, &a1, &a2, &y, &tol()).map_err(|e| format!("instance {inst}: {e}"))?;
        if !f.fibers_coincide() {
            overlap += 1;
        }

        // Reference solution set x_p + span(K) of the A2 problem.
        let s2 = reference_sqrt(&a2);
        let w = &s2 * &b;
        let x_p = reference_pinv(&w) * &s2 * &y;
        let (_, kernel) = eig_split(&(w.transpose() * &w), 1e-12);
        let k_dim = kernel.ncols();
        let r_of = |x: &DVector<f64>| quadratic_form(&a2, &(&b * x - &y));
        let s_of = |x: &DVector<f64>| quadratic_form(&a1, x);
        // Exact minimum of the seminorm over the reference set.
        let s_min = if k_dim == 0 {
            s_of(&x_p)
        } else {
            let g = kernel.transpose() * &a1 * &kernel;
            let shift = -(&kernel * sym_pinv(&g) * kernel.transpose() * &a1 * &x_p);
            s_of(&(&x_p + shift))
        };

        let r_scale = a2.norm() * (b.norm() * x_p.norm() + y.norm()).powi(2) + f64::MIN_POSITIVE;
        let mut members = vec![f.canonical().clone()];
        for _ in 0..3 {
            let z = random_z(&mut rng, f.family().parameter_shape());
            members.push(f.member(&z).map_err(|e| e.to_string())?);
        }
        for x in &members {
            let (rx, sx) = (r_of(x), s_of(x));
            let s_scale = a1.norm() * x.norm_squared().max(x_p.norm_squared()) + f64::MIN_POSITIVE;
            let dev = ((rx - r_of(&x_p)).abs() / r_scale).max((sx - s_min).max(0.0) / s_scale);
            worst = worst.max(dev);
            if dev > 1e-8 {
                return Err(format!("instance {inst}: member off the optimum by {dev:.2e}"));
            }
            for p in 0..200 {
                let probe = if p % 2 == 0 {
                    gaussian_vec(&mut rng, n) * 3.0
                } else if k_dim > 0 {
                    &x_p + &kernel * gaussian_vec(&mut rng, k_dim) * 3.0
                } else {
                    x_p.clone()
                };
                let (rp, sp) = (r_of(&probe), s_of(&probe));
                let s_scale = a1.norm() * x.norm_squared().max(probe.norm_squared()) + f64::MIN_POSITIVE;
                // Ties in the residual only absorb rounding; the seminorm
                // comparison carries the stated tolerance.
                let better_r = rp < rx - 1e-12 * r_scale;
                let tie_r = (rp - rx).abs() <= 1e-12 * r_scale;
                if better_r || (tie_r && sp < sx - 1e-8 * s_scale) {
                    return Err(format!(
                        "instance {inst}: probe ({rp:.6e}, {sp:.6e}) beats member ({rx:.6e}, {sx:.6e})"
                    ));
                }
            }
        }
    }
    Ok(format!("max deviation {worst:.2e}, {overlap} instances with N(A2) meeting R(B)"))
}

fn minimal_euclidean_norm() -> Outcome {
    let mut rng = rng(8);
    let mut margin = f64::INFINITY;
    for inst in 0..100 {
        let (b, a1, a2, y) = lss_instance(&mut rng, inst);
        let opt = optimal_lss(&b, &a1, &a2, &y, &tol()).map_err(|e| e.to_string())?;
        let wgi = wgi_family(&b, &a1, &a2, &tol()).map_err(|e| e.to_string())?;
        let (s1, s2) = wgi.parameter_shapes();
        let z2 = DMatrix::zeros(s2.0, s2.1);
        let u0 = opt.solution.norm();
        for k in 0..200 {
            let scale = [0.01, 0.1, 1.0, 10.0][k % 4];
            let z1 = random_z(&mut rng, s1) * scale;
            let x = wgi.member(&z1, &z2).map_err(|e| e.to_string())? * &y;
            margin = margin.min(x.norm() - u0);
            if x.norm() - u0 < -1e-9 {
                return Err(format!("instance {inst}: margin {:.2e}", x.norm() - u0));
            }
        }
    }
    Ok(format!("min margin {margin:.2e}"))
}

fn blue_vs_kkt() -> Outcome {
    let mut rng = rng(9);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (m, n) = dims(&mut rng, 7);
        let rank = rng.random_range(0..=m.min(n));
        let b = rank_r(&mut rng, m, n, rank);
        let rank = rng.random_range(0..=m);
        let v2 = psd(&mut rng, m, rank);
        let c = b.transpose() * gaussian_vec(&mut rng, m);
        let g = blue(&b, &v2, &c, &tol()).map_err(|e| format!("instance {inst}: {e}"))?;

        let mut kkt = DMatrix::zeros(m + n, m + n);
        kkt.view_mut((0, 0), (m, m)).copy_from(&(&v2 * 2.0));
        kkt.view_mut((0, m), (m, n)).copy_from(&b);
        kkt.view_mut((m, 0), (n, m)).copy_from(&b.transpose());
        let mut rhs = DVector::zeros(m + n);
        rhs.rows_mut(m, n).copy_from(&c);
        let sol = sym_pinv(&kkt) * rhs;
        let g_kkt = sol.rows(0, m).into_owned();
        let obj_kkt = quadratic_form(&v2, &g_kkt);
        let cn = c.norm().max(f64::MIN_POSITIVE);
        let feas_kkt = (b.transpose() * &g_kkt - &c).norm() / cn;
        let obj_scale = obj_kkt.abs().max(v2.norm() * g_kkt.norm_squared()).max(1.0);
        let d_obj = (g.objective() - obj_kkt).abs() / obj_scale;
        let d_feas = (g.feasibility_residual() - feas_kkt).abs().max(g.feasibility_residual());
        worst = worst.max(d_obj).max(d_feas);
        if d_obj > 1e-8 || d_feas > 1e-8 {
            return Err(format!("instance {inst}: objective gap {d_obj:.2e}, feasibility {d_feas:.2e}"));
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

const GOLDEN: &[(&str, &[&str])] = &[
    ("pinv", &["pinv", "--B", "tests/fixtures/b.csv"]),
    ("wpinv", &["wpinv", "--B", "tests/fixtures/b.csv", "--A1", "tests/fixtures/i2.csv", "--A2", "tests/fixtures/i3.csv"]),
    ("wpinv_sampled", &["wpinv", "--B", "tests/fixtures/b_sing.csv", "--A1", "tests/fixtures/z2.csv", "--A2", "tests/fixtures/z2.csv", "--samples", "5", "--seed", "7"]),
    ("compat", &["compat", "--A", "tests/fixtures/a_rank1.csv", "--S", "tests/fixtures/s_e2.csv"]),
    ("oblique", &["oblique", "--B", "tests/fixtures/b_sing.csv", "--P", "tests/fixtures/p_obl.csv", "--Q", "tests/fixtures/q_obl.csv"]),
    ("lss", &["lss", "--B", "tests/fixtures/b.csv", "--A2", "tests/fixtures/i3.csv", "--y", "tests/fixtures/y_range.csv"]),
    ("alss", &["alss", "--B", "tests/fixtures/b.csv", "--A1", "tests/fixtures/i2.csv", "--A2", "tests/fixtures/a2_diag.mtx", "--y", "tests/fixtures/y.csv"]),
    ("blue", &["blue", "--B", "tests/fixtures/b_blue.csv", "--V2", "tests/fixtures/v2_blue.csv", "--c", "tests/fixtures/c_blue.csv"]),
    ("verify", &["verify", "--B", "tests/fixtures/b.csv", "--A1", "tests/fixtures/i2.csv", "--A2", "tests/fixtures/i3.csv", "--C", "tests/fixtures/c_zero.csv"]),
];

const REPORT_KEYS: &[&str] = &["command", "diagnostics", "inputs", "result", "samples", "seed", "tolerances", "verdict"];

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wginv"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {:?}", out.status.code()));
    }
    Ok(out.stdout)
}

fn cli_golden() -> Outcome {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (name, args) in GOLDEN {
        let first = run_cli(args)?;
        let second = run_cli(args)?;
        if first != second {
            return Err(format!("{name}: reports differ between runs"));
        }
        let expected = std::fs::read(golden_dir.join(format!("{name}.json"))).map_err(|e| format!("{name}: {e}"))?;
        if first != expected {
            return Err(format!("{name}: report differs from golden file"));
        }
        let doc: Value = serde_json::from_slice(&first).map_err(|e| e.to_string())?;
        let keys: Vec<&str> = doc.as_object().ok_or("report is not an object")?.keys().map(String::as_str).collect();
        if keys != REPORT_KEYS {
            return Err(format!("{name}: keys {keys:?}"));
        }
        for input in doc["inputs"].as_object().ok_or("inputs")?.values() {
            let digest = input["sha256"].as_str().unwrap_or("");
            if digest.len() != 64 || input["rows"].as_u64().is_none() || input["cols"].as_u64().is_none() {
                return Err(format!("{name}: malformed input record {input}"));
            }
        }
        if !matches!(doc["verdict"].as_str(), Some("ok" | "not-member")) {
            return Err(format!("{name}: verdict {}", doc["verdict"]));
        }
    }
    Ok(format!("{} commands, byte-identical and matching golden files", GOLDEN.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("penrose residuals of constructed members", penrose_residuals),
        ("identity weights give the Moore-Penrose inverse", moore_penrose_degeneration),
        ("definite weights match the whitened oracle", invertible_weights),
        ("oblique pseudoinverse round trip", oblique_round_trip),
        ("independence of the {1}-inverse", inner_inverse_invariance),
        ("reduced solution norm identity", norm_identity),
        ("two-stage least squares optimality", two_stage_optimality),
        ("minimal Euclidean norm of the optimal solution", minimal_euclidean_norm),
        ("BLUE against the KKT system", blue_vs_kkt),
        ("CLI determinism and schema", cli_golden),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
