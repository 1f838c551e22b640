//! Acceptance checklist, one test per numbered criterion. The harness
//! output is the checklist: each `criterion_*` line reports that check's
//! pass or fail. Details print on failure (or under `--nocapture`).

use std::collections::HashSet;
use std::f64::consts::PI;
use std::os::unix::net::UnixStream;
use std::time::Instant;

use poq::cheater::{Cheater, CheaterKind};
use poq::circuits::{
    build_factoring_commit, build_lwe_commit, compile_phase_terms, factoring_phase_terms,
    run_plan, zzz_cascade, zzz_term_group, BuildMode,
};
use poq::numtheory::{BitString, ResidueVector};
use poq::protocol::{
    decode_image, honest_prover_for, run_protocol, study_verifier, HonestProver, Mode, Prover,
    ProtocolKind, RunConfig, RunTally,
};
use poq::sim::{Gate, StateVector};
use poq::stats::{
    evaluate, interference_weight, quantumness, quantumness_se, reference_rows, Counts,
};
use poq::tcf::{
    lwe_eval, lwe_invert, lwe_study_instance, rabin_eval, rabin_invert, rabin_study_keygen,
    LweClaw, LweInversion, RabinClaw, RabinInversion,
};
use poq::testkit::{
    assert_matrices_close, assert_states_close_up_to_phase, gate_list_matrix, pauli_exponential,
};
use poq::wire::{run_prover, serve_verifier};

const FACTORING_MODULI: [u64; 4] = [8, 15, 16, 21];

fn cfg(a: u64, b: u64, mode: Mode, seed: u64) -> RunConfig {
    RunConfig { shots_standard: a, shots_interference: b, mode, seed }
}

fn honest_run(kind: ProtocolKind, id: u64, cfg: &RunConfig) -> RunTally {
    let verifier = study_verifier(kind, id);
    let mut prover = honest_prover_for(&verifier, BuildMode::Compiled, cfg.seed);
    run_protocol(&verifier, &mut prover, cfg, |_| {})
}

/// Two-proportion z statistic with pooled variance; 0 when both rates are
/// degenerate and equal.
fn pooled_z(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pool = (k1 + k2) as f64 / (n1 + n2) as f64;
    let var = pool * (1.0 - pool) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    if var == 0.0 {
        if p1 == p2 {
            return 0.0;
        }
        return f64::INFINITY;
    }
    (p1 - p2) / var.sqrt()
}

#[test]
fn criterion_1_reference_table_rows_reproduce_published_scores() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for row in reference_rows() {
        let sig = evaluate(row.protocol, &row.counts());
        let shown = match row.sigma {
            Some(s) => format!("{s:.1}"),
            None => "-".into(),
        };
        println!(
            "{:?} {:>2} {:?}: q {:+.4} (published {:+.3}), sigma {:.2} (published {})",
            row.protocol, row.label, row.mode, sig.q, row.q, sig.sigma, shown
        );
        if (sig.q - row.q).abs() > 0.005 {
            failures.push(format!(
                "{:?} {} {:?}: q {:.4} vs published {:.3}",
                row.protocol, row.label, row.mode, sig.q, row.q
            ));
        }
        if let Some(published) = row.sigma {
            if (sig.sigma - published).abs() > 0.2 {
                failures.push(format!(
                    "{:?} {} {:?}: sigma {:.2} vs published {:.1}",
                    row.protocol, row.label, row.mode, sig.sigma, published
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    println!("evaluated all rows in {elapsed:.2?}");
    if elapsed.as_secs_f64() >= 10.0 {
        failures.push(format!("evaluation took {elapsed:.2?}, budget is 10 s"));
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}

/// Exact standard-branch acceptance of the commit state on kept
/// commitments, by enumerating the joint (x, w) distribution.
fn factoring_exact_standard_rate(modulus: u64) -> f64 {
    let (inst, td) = rabin_study_keygen(modulus);
    let commit = build_factoring_commit(&inst, BuildMode::Compiled);
    let mut sv = StateVector::new(commit.n_qubits);
    run_plan(&mut sv, &commit.steps);
    let (mut kept, mut hit) = (0.0, 0.0);
    for (k, amp) in sv.amps().iter().enumerate() {
        let p = amp.norm_sqr();
        if p < 1e-30 {
            continue;
        }
        let x = sv.register_value(k, &commit.layout.x);
        let w = sv.register_value(k, &commit.layout.y);
        let image = decode_image(&inst, w);
        if let RabinInversion::Claw(_) = rabin_invert(&inst, &td, image) {
            kept += p;
            if x * x % inst.modulus == image {
                hit += p;
            }
        }
    }
    hit / kept
}

#[test]
fn criterion_2_honest_prover_reaches_the_ideal_rates() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let ideal_b = (PI / 8.0).cos().powi(2);

    for id in 0..4u64 {
        let t = honest_run(ProtocolKind::Lwe, id, &cfg(10_000, 10_800, Mode::Interactive, 40 + id));
        println!(
            "lwe {id}: p_A {}/{}, p_B {}/{}",
            t.standard.accepted, t.standard.counted, t.interference.accepted, t.interference.counted
        );
        assert!(t.standard.counted >= 10_000 && t.interference.counted >= 10_000);
        if t.standard.accepted != t.standard.counted {
            failures.push(format!("lwe {id}: p_A = {:.6} != 1", t.standard.rate()));
        }
        if t.interference.accepted != t.interference.counted {
            failures.push(format!("lwe {id}: p_B = {:.6} != 1", t.interference.rate()));
        }
    }

    for (modulus, raw) in FACTORING_MODULI.iter().zip([21_500u64, 23_500, 10_400, 43_500]) {
        let t = honest_run(
            ProtocolKind::Factoring,
            *modulus,
            &cfg(raw, raw, Mode::Interactive, 50 + modulus),
        );
        println!(
            "factoring {modulus}: p_A {}/{} = {:.6}, p_B {}/{} = {:.6}",
            t.standard.accepted,
            t.standard.counted,
            t.standard.rate(),
            t.interference.accepted,
            t.interference.counted,
            t.interference.rate()
        );
        assert!(
            t.standard.counted >= 10_000 && t.interference.counted >= 10_000,
            "need at least 10^4 kept shots per branch for N={modulus}"
        );
        if t.standard.accepted != t.standard.counted {
            failures.push(format!(
                "factoring {modulus}: p_A on kept shots = {:.6} != 1 \
                 (exact commit-state value is {:.6})",
                t.standard.rate(),
                factoring_exact_standard_rate(*modulus)
            ));
        }
        let p_b = t.interference.rate();
        let band = 3.0 * (ideal_b * (1.0 - ideal_b) / t.interference.counted as f64).sqrt();
        if (p_b - ideal_b).abs() > band {
            failures.push(format!(
                "factoring {modulus}: p_B = {p_b:.6} outside {ideal_b:.6} +- {band:.6}"
            ));
        }
    }

    let elapsed = start.elapsed();
    println!("ran all honest limits in {elapsed:.2?}");
    if elapsed.as_secs_f64() >= 300.0 {
        failures.push(format!("runs took {elapsed:.2?}, budget is 5 min"));
    }
    assert!(failures.is_empty(), "\n{}", failures.join("\n"));
}

#[test]
fn criterion_3_compiled_phase_oracle_matches_the_direct_diagonal() {
    for modulus in FACTORING_MODULI {
        let (inst, _) = rabin_study_keygen(modulus);
        let (n_x, n_y) = (inst.n_x as usize, inst.n_y as usize);
        let n = n_x + n_y;
        let gates = compile_phase_terms(&factoring_phase_terms(&inst));

        let mut compiled = StateVector::new(n);
        let mut direct = StateVector::new(n);
        for q in 0..n {
            compiled.apply(Gate::H(q));
            direct.apply(Gate::H(q));
        }
        compiled.apply_all(&gates);
        let all: Vec<usize> = (0..n).collect();
        direct.apply_diagonal_phase(&all, |v| {
            let (x, y) = (v >> n_y, v & ((1 << n_y) - 1));
            2.0 * PI * (x * x * y) as f64 / modulus as f64
        });
        assert_states_close_up_to_phase(compiled.amps(), direct.amps(), 1e-9);
        println!("N={modulus}: compiled oracle matches the diagonal on {n} qubits");
    }

    for theta in [0.3f64, -1.2] {
        let got = gate_list_matrix(3, &zzz_cascade(0, 1, &[(2, theta)]));
        assert_matrices_close(&got, &pauli_exponential("YZX", -theta), 1e-10);
    }
    let got = gate_list_matrix(3, &zzz_term_group(0, 1, &[(2, 0.7)]));
    assert_matrices_close(&got, &pauli_exponential("ZZZ", 0.7), 1e-10);
    println!("cascade conjugation identity holds as an 8x8 matrix");
}

#[test]
fn criterion_4_power_of_two_extraction_is_exact() {
    for modulus in [8u64, 16] {
        let verifier = study_verifier(ProtocolKind::Factoring, modulus);
        let mut prover = honest_prover_for(&verifier, BuildMode::Compiled, 4000 + modulus);
        let (inst, _) = rabin_study_keygen(modulus);
        for shot in 0..10_000u64 {
            prover.begin_shot(shot);
            let w = prover.commit().value();
            let x = prover.respond_standard().value();
            assert_eq!(
                decode_image(&inst, w),
                x * x % modulus,
                "N={modulus} shot {shot}: x={x} w={w}"
            );
        }
        println!("N={modulus}: 10^4 sampled (x, w) pairs all satisfy w = x^2 mod N");
    }
}

#[test]
fn criterion_5_lwe_commit_support_and_ancilla_are_exact() {
    for id in 0..4usize {
        let study = lwe_study_instance(id);
        let inst = &study.instance;
        let commit = build_lwe_commit(inst, BuildMode::Compiled);
        assert_eq!(commit.n_qubits, 11, "instance {id}");

        let mut sv = StateVector::new(commit.n_qubits);
        run_plan(&mut sv, &commit.steps);

        let cb = inst.component_bits() as usize;
        let mut clean = 0.0;
        let mut support = HashSet::new();
        for (k, amp) in sv.amps().iter().enumerate() {
            let p = amp.norm_sqr();
            if p < 1e-12 {
                continue;
            }
            let acc = sv.register_value(k, &commit.layout.accumulator);
            if acc == 0 {
                clean += p;
            }
            let b = sv.register_value(k, &[commit.layout.b]) as u8;
            let entries: Vec<u64> = (0..inst.dim())
                .map(|i| sv.register_value(k, &commit.layout.x[i * cb..(i + 1) * cb]))
                .collect();
            let x = ResidueVector::new(entries.clone(), inst.q);
            let out = sv.register_value(k, &commit.layout.output);
            assert_eq!(acc, 0, "instance {id}: accumulator {acc} holds weight {p}");
            assert_eq!(
                out,
                lwe_eval(inst, b, &x).value(),
                "instance {id}: wrong image for b={b} x={entries:?}"
            );
            support.insert((b, entries));
        }
        assert!(clean >= 1.0 - 1e-10, "instance {id}: ancilla fidelity {clean}");
        assert_eq!(support.len(), 32, "instance {id}: support holds every (b, x) once");
        println!("lwe {id}: 11 qubits, clean accumulator, full 32-point support");
    }
}

#[test]
fn criterion_6_trapdoor_inversion_matches_enumeration() {
    for modulus in FACTORING_MODULI {
        let (inst, td) = rabin_study_keygen(modulus);
        for image in 0..modulus {
            let preimages: Vec<u64> =
                (0..inst.domain_size()).filter(|&x| rabin_eval(&inst, x) == image).collect();
            let expected = match preimages.as_slice() {
                &[x0, x1] => RabinInversion::Claw(RabinClaw { x0, x1, image }),
                _ => RabinInversion::InvalidImage,
            };
            assert_eq!(rabin_invert(&inst, &td, image), expected, "N={modulus} image {image}");
        }
        println!("N={modulus}: inversion agrees with enumeration on all {modulus} images");
    }

    for id in 0..4usize {
        let study = lwe_study_instance(id);
        let (inst, td) = (&study.instance, &study.trapdoor);
        let shift = ResidueVector::new(td.s.iter().map(|&b| b as u64).collect(), inst.q);
        let inputs: Vec<ResidueVector> = (0..inst.q.pow(inst.dim() as u32))
            .map(|mut v| {
                let mut entries = vec![0u64; inst.dim()];
                for e in entries.iter_mut().rev() {
                    *e = v % inst.q;
                    v /= inst.q;
                }
                ResidueVector::new(entries, inst.q)
            })
            .collect();

        for image in 0..1u64 << inst.rows_len() {
            let bits = BitString::from_value(image, inst.rows_len());
            let s0: Vec<_> =
                inputs.iter().filter(|x| lwe_eval(inst, 0, x) == bits).cloned().collect();
            let s1: Vec<_> =
                inputs.iter().filter(|x| lwe_eval(inst, 1, x) == bits).cloned().collect();
            let shifted: Vec<_> =
                s1.iter().filter(|x1| s0.contains(&x1.add(&shift))).cloned().collect();
            let expected = if s0.len() + s1.len() == 2 && shifted.len() == 1 {
                LweInversion::Claw(LweClaw {
                    x0: shifted[0].add(&shift),
                    x1: shifted[0].clone(),
                    image: bits.clone(),
                })
            } else {
                LweInversion::Anomaly { preimages: s0.len() + s1.len(), claws: shifted.len() }
            };
            assert_eq!(lwe_invert(inst, td, &bits), expected, "instance {id} image {image}");
        }
        println!("lwe {id}: inversion agrees with enumeration on all 16 images");
    }
}

#[test]
fn criterion_7_classical_cheaters_stay_below_the_bound() {
    let start = Instant::now();
    for kind in [CheaterKind::KnownPreimage, CheaterKind::Random] {
        for (protocol, ids) in [
            (ProtocolKind::Factoring, FACTORING_MODULI.to_vec()),
            (ProtocolKind::Lwe, vec![0, 1, 2, 3]),
        ] {
            for id in ids {
                let verifier = study_verifier(protocol, id);
                let mut cheater = Cheater::new(&verifier.public_instance(), kind, 600 + id);
                let tally = run_protocol(
                    &verifier,
                    &mut cheater,
                    &cfg(60_000, 60_000, Mode::Interactive, 600 + id),
                    |_| {},
                );
                let counts = Counts::from_tally(&tally);
                let weight = interference_weight(protocol);
                let q = quantumness(weight, counts.p_a(), counts.p_b());
                let se = quantumness_se(weight, &counts);
                println!(
                    "{kind:?} on {protocol:?} {id}: q {q:+.4} (se {se:.4}, \
                     p_A {:.4}, p_B {:.4})",
                    counts.p_a(),
                    counts.p_b()
                );
                assert!(
                    q <= 4.0 * se,
                    "{kind:?} on {protocol:?} {id} scored q = {q:.4} > 4 se = {:.4}",
                    4.0 * se
                );
            }
        }
    }
    println!("all cheater runs finished in {:.2?}", start.elapsed());
}

#[test]
fn criterion_8_challenge_order_does_not_shift_the_tallies() {
    for (protocol, id) in [(ProtocolKind::Factoring, 15u64), (ProtocolKind::Lwe, 0)] {
        let interactive =
            honest_run(protocol, id, &cfg(10_000, 10_000, Mode::Interactive, 31));
        let delayed = honest_run(protocol, id, &cfg(10_000, 10_000, Mode::Delayed, 32));
        let checks = [
            ("standard acceptance", interactive.standard.accepted, interactive.standard.counted,
             delayed.standard.accepted, delayed.standard.counted),
            ("interference acceptance", interactive.interference.accepted,
             interactive.interference.counted, delayed.interference.accepted,
             delayed.interference.counted),
            ("standard kept fraction", interactive.standard.counted, interactive.standard.raw,
             delayed.standard.counted, delayed.standard.raw),
            ("interference kept fraction", interactive.interference.counted,
             interactive.interference.raw, delayed.interference.counted,
             delayed.interference.raw),
        ];
        for (name, k1, n1, k2, n2) in checks {
            let z = pooled_z(k1, n1, k2, n2);
            println!("{protocol:?} {id} {name}: z = {z:+.2}");
            assert!(
                z.abs() < 4.0,
                "{protocol:?} {id} {name}: {k1}/{n1} vs {k2}/{n2} gives z = {z:.2}"
            );
        }
    }
}

#[test]
fn criterion_9_wire_sessions_reproduce_local_records_byte_for_byte() {
    for (kind, id, mode) in [
        (ProtocolKind::Factoring, 15, Mode::Interactive),
        (ProtocolKind::Factoring, 8, Mode::Delayed),
        (ProtocolKind::Lwe, 0, Mode::Interactive),
        (ProtocolKind::Lwe, 3, Mode::Delayed),
    ] {
        let run_cfg = cfg(25, 25, mode, 77);
        let (verifier_sock, prover_sock) = UnixStream::pair().unwrap();
        let handle = std::thread::spawn(move || {
            run_prover(prover_sock, |public, config| {
                Box::new(HonestProver::for_instance(public, BuildMode::Compiled, config.seed))
            })
            .unwrap()
        });
        let verifier = study_verifier(kind, id);
        let mut wire_lines = Vec::new();
        let wire_tally = serve_verifier(verifier_sock, &verifier, &run_cfg, |rec| {
            wire_lines.push(serde_json::to_string(rec).unwrap());
        })
        .unwrap();
        let prover_tally = handle.join().unwrap();

        let mut prover = honest_prover_for(&verifier, BuildMode::Compiled, run_cfg.seed);
        let mut local_lines = Vec::new();
        let local_tally = run_protocol(&verifier, &mut prover, &run_cfg, |rec| {
            local_lines.push(serde_json::to_string(rec).unwrap());
        });

        assert_eq!(wire_lines, local_lines, "{kind:?} {id} {mode:?}");
        assert_eq!(wire_tally, local_tally, "{kind:?} {id} {mode:?}");
        assert_eq!(wire_tally, prover_tally, "{kind:?} {id} {mode:?}");
        println!(
            "{kind:?} {id} {mode:?}: {} records identical over the wire",
            wire_lines.len()
        );
    }
}
