//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 3 and 11 are known to fail as stated; their lines carry the
//! measured values. The process exits nonzero only on an unexpected failure.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use malle_lab::cli::run;
use malle_lab::arith::{is_prime, smallest_prime_factor};
use malle_lab::group::{parse_group, AbelianGroup, SubgroupLattice};
use malle_lab::invariants::{a_disc, q_orbits, WeightFn};
use malle_lab::oracle::count::{count_surjections_with, CountOptions};
use malle_lab::oracle::{count_surjections, Ordering};
use malle_lab::rat::{self, q, qu, Q};
use malle_lab::series::sieve::sieve_identity_sides;
use malle_lab::series::{local_factor, nonvanishing_limit, residue_main_term, series_coefficients};
use malle_lab::tauberian::{sandwich_check, saving_exponent, StepSequence, TauberianParams};
use malle_lab::theta::{
    dual_selmer_size, orbit_weights, theta_at_d, theta_for_group, theta_ram, ModelKind, SubconvexityModel,
};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const KNOWN_FAILURES: &[u32] = &[3, 11];

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn random_group(rng: &mut ChaCha8Rng, cap: u64) -> AbelianGroup {
    loop {
        let k = rng.gen_range(1..=3);
        let f: Vec<u64> = (0..k).map(|_| rng.gen_range(2..=cap)).collect();
        if f.iter().product::<u64>() <= cap {
            return AbelianGroup::new(&f).unwrap();
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for p in [3u64, 5, 7, 11, 13] {
        let lit = format!("C{p}");
        let out = run(["malle-lab", "theta", lit.as_str(), "--model", "soehne"]);
        let v: Value = serde_json::from_str(&out.stdout).map_err(|e| format!("{lit}: {e} {}", out.stderr))?;
        let got = rat::parse(v["result"]["bound"].as_str().unwrap_or("")).ok_or("no bound")?;
        let want = qu(p + 2) / qu((p - 1) * (p + 5));
        if got != want {
            return Err(format!("{lit}: {got} ≠ {want}"));
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(1), format!("all five exact in {t:.2?}"), format!("too slow: {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let soehne = SubconvexityModel::soehne();
    let mut notes = Vec::new();
    for m in [5u64, 7, 11, 25, 35] {
        let mq = qu(m);
        let l = smallest_prime_factor(m).unwrap();
        let cases = [
            (4 * m, q(4, 1) * &mq * qu(l - 1) / qu(l), qu(5) / (qu(16) * &mq) + qu(3) / qu(32 * m * l - 48 * m)),
            if m % 5 == 0 {
                (6 * m, qu(24) * &mq / qu(5), qu(62) / (qu(267) * &mq))
            } else {
                (6 * m, qu(5) * &mq, qu(13) / (qu(57) * &mq))
            },
        ];
        for (n, d, want) in cases {
            let g = AbelianGroup::cyclic(n);
            let w = orbit_weights(&q_orbits(&g).map_err(|e| e.to_string())?);
            let got = theta_at_d(&w, &soehne, &d).map_err(|e| e.to_string())?;
            if got != want {
                return Err(format!("C{n} at D = {d}: {got} ≠ {want}"));
            }
            let best = theta_for_group(&g, &WeightFn::Disc, &soehne).map_err(|e| e.to_string())?.bound;
            if best > want {
                return Err(format!("C{n}: θ_best {best} exceeds {want}"));
            }
            notes.push(format!("C{n}={want}"));
        }
    }
    Ok(notes.join(" "))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let r = malle_lab::theta::scan_cyclic(20_000, &SubconvexityModel::soehne()).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let (fi, fii) = (100.0 * r.fraction_i, 100.0 * r.fraction_ii);
    let msg = format!("fraction(i) = {fi:.2}% (want 48.5 ± 0.5), fraction(ii) = {fii:.2}% (want 39.4 ± 0.5), {t:.1?}");
    check(
        (fi - 48.5).abs() <= 0.5 && (fii - 39.4).abs() <= 0.5 && t < Duration::from_secs(120),
        msg.clone(),
        msg,
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = SubconvexityModel::preset(ModelKind::Lindelof, 1);
    for _ in 0..50 {
        let g = random_group(&mut rng, 100);
        let r = theta_for_group(&g, &WeightFn::Disc, &model).map_err(|e| e.to_string())?;
        let want = Q::one() / (qu(2) * qu(a_disc(g.order())));
        if r.bound != want {
            return Err(format!("{g}: {} ≠ {want}", r.bound));
        }
    }
    Ok("50 random groups exact".into())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let g = random_group(&mut rng, 60);
        let deg = rng.gen_range(1..=6);
        let closed = Q::one() - qu(3) / qu(6 + deg * (g.order() - 1));
        let got = theta_ram(&g, deg).map_err(|e| e.to_string())?;
        let general = theta_for_group(&g, &WeightFn::Ram, &SubconvexityModel::preset(ModelKind::Soehne, deg))
            .map_err(|e| e.to_string())?
            .bound;
        if got != closed || general != closed {
            return Err(format!("{g}, [K:Q] = {deg}: {got}, {general} vs {closed}"));
        }
    }
    Ok("20 random (G, [K:Q]) exact".into())
}

fn criterion_6() -> Outcome {
    let g = parse_group("C3").unwrap();
    let mut checked = 0;
    for p in (2..=10_000u64).filter(|&p| is_prime(p)) {
        let want: Vec<(u64, u64)> = match p {
            3 => vec![(2, 4)],
            _ if p % 3 == 1 => vec![(2, 2)],
            _ => vec![],
        };
        let got = local_factor(&g, p).map_err(|e| e.to_string())?.terms;
        if got != want {
            return Err(format!("p = {p}: {got:?} ≠ {want:?}"));
        }
        checked += 1;
    }
    Ok(format!("{checked} primes exact"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    for lit in ["C2", "C3", "C4", "C2xC2", "C5", "C6"] {
        let g = parse_group(lit).unwrap();
        let series: BTreeMap<u64, i64> =
            series_coefficients(&g, 10_000, true).map_err(|e| e.to_string())?.into_iter().collect();
        let opts = CountOptions { histogram: true, ..Default::default() };
        let oracle = count_surjections_with(&g, 10_000, Ordering::Disc, opts).map_err(|e| e.to_string())?;
        let oracle: BTreeMap<u64, i64> = oracle.histogram.into_iter().map(|(k, v)| (k, v as i64)).collect();
        if series != oracle {
            let diff = series.iter().find(|(k, v)| oracle.get(k) != Some(v));
            return Err(format!("{lit}: first mismatch {diff:?}"));
        }
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(300), format!("six groups exact to 10^4 in {t:.1?}"), format!("too slow: {t:.1?}"))
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    for (lit, x, tol) in [("C2", 1_000_000u64, 0.01), ("C3", 10_000_000, 0.05)] {
        let g = parse_group(lit).unwrap();
        let res = residue_main_term(&g, 1_000_000, 30).map_err(|e| e.to_string())?;
        let count = count_surjections(&g, x, Ordering::Disc).map_err(|e| e.to_string())?;
        let predicted = res.predict(x as f64);
        let ratio = count.surjections as f64 / predicted;
        notes.push(format!("{lit}: {} fields, ratio {ratio:.5}", count.fields));
        if (ratio - 1.0).abs() > tol {
            return Err(notes.join("; "));
        }
    }
    Ok(notes.join("; "))
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    for (lit, d, want) in [("C4", 3, Some(true)), ("C6", 4, Some(false)), ("C4", 3, None), ("C6", 5, None), ("C9", 8, None)] {
        let r = nonvanishing_limit(&parse_group(lit).unwrap(), d, 100_000, 40).map_err(|e| e.to_string())?;
        let v = r.value_f64;
        notes.push(format!("{lit},d={d}: {v:.6} ± {:.1e}", r.error));
        let excluded = v.abs() > r.error;
        let sign_ok = want.is_none_or(|pos| (v > 0.0) == pos);
        if !excluded || !sign_ok {
            return Err(notes.join("; "));
        }
    }
    Ok(notes.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let primes = (2..=50u64).filter(|&p| is_prime(p)).count();
    let mut worst: f64 = 0.0;
    for lit in ["C12", "C2xC4"] {
        let lat = SubgroupLattice::new(&parse_group(lit).unwrap()).unwrap();
        for _ in 0..100 {
            let f: Vec<Vec<f64>> =
                (0..primes).map(|_| (0..lat.len()).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let (l, r) = sieve_identity_sides(&lat, &f);
            let rel = (l - r).abs() / r.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-9, format!("worst relative gap {worst:.1e}"), format!("gap {worst:.1e}"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let len = rng.gen_range(0..300u64);
        let mut pairs = Vec::new();
        for n in 1..=len {
            if rng.gen_bool(0.5) {
                pairs.push((n, rng.gen_range(0.0..10.0)));
            }
        }
        let seq = StepSequence::new(pairs).map_err(|e| e.to_string())?;
        let k = rng.gen_range(1..=5u32);
        let y = rng.gen_range(0.01..10.0);
        let x = f64::from(k) * y + rng.gen_range(0.1..400.0);
        let s = sandwich_check(&seq, k, y, x).map_err(|e| format!("sequence {i}: {e}"))?;
        if !s.holds {
            return Err(format!("sequence {i} violates the sandwich"));
        }
    }
    let p = |xi: i64, k: u64| TauberianParams { sigma_a: qu(1), delta: q(1, 2), xi: qu(xi as u64), k };
    for (xi, k, want) in [(0, 1, q(1, 2)), (1, 3, q(11, 14)), (2, 5, q(7, 8))] {
        let got = saving_exponent(&p(xi, k)).map_err(|e| e.to_string())?.exponent;
        if got != want {
            return Err(format!("(ξ, k) = ({xi}, {k}): {got} ≠ {want}"));
        }
    }
    let mut gaps = Vec::new();
    for xi in [0, 1, 2] {
        let e = saving_exponent(&p(xi, 1_000_000)).map_err(|e| e.to_string())?;
        gaps.push((xi, rat::to_f64(&(&e.exponent - &e.limit))));
    }
    let msg = format!(
        "sandwich 1000/1000, exact values ok; gap to δ/(ξ+1) at k = 10^6 (δ = 1/2): {}",
        gaps.iter().map(|(x, g)| format!("ξ={x}: {g:.2e}")).collect::<Vec<_>>().join(", ")
    );
    check(gaps.iter().all(|g| g.1.abs() <= 1e-9), msg.clone(), msg)
}

fn criterion_12() -> Outcome {
    let trivial = AbelianGroup::trivial();
    for lit in ["C2", "C3", "C4", "C2xC2", "C6"] {
        let n = dual_selmer_size(1, 0, 2, &trivial, &parse_group(lit).unwrap()).map_err(|e| e.to_string())?;
        if n != 1 {
            return Err(format!("Q, {lit}: {n}"));
        }
    }
    for lit in ["C2", "C2xC2", "C2xC2xC2"] {
        let n = dual_selmer_size(2, 0, 2, &trivial, &parse_group(lit).unwrap()).map_err(|e| e.to_string())?;
        if n != 1 {
            return Err(format!("real quadratic, h = 1, {lit}: {n}"));
        }
    }
    Ok("all trivial".into())
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "theta formula for C_p", criterion_1),
        (2, "closed-form corollaries C_4M, C_6M", criterion_2),
        (3, "cyclic scan fractions", criterion_3),
        (4, "Lindelof bound 1/(2a)", criterion_4),
        (5, "ram bound", criterion_5),
        (6, "C_3 local factors", criterion_6),
        (7, "oracle equals series", criterion_7),
        (8, "main-term regression", criterion_8),
        (9, "non-vanishing signs", criterion_9),
        (10, "Mobius sieve identity", criterion_10),
        (11, "Tauberian layer", criterion_11),
        (12, "dual Selmer triviality", criterion_12),
    ];
    let mut unexpected = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let res = f();
        let t = start.elapsed();
        let known = KNOWN_FAILURES.contains(&id);
        match res {
            Ok(msg) => println!("PASS {id:>2} {name}: {msg} [{t:.1?}]"),
            Err(msg) => {
                let tag = if known { " (known)" } else { "" };
                println!("FAIL {id:>2} {name}{tag}: {msg} [{t:.1?}]");
                if !known {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}
