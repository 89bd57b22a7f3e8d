use gatescope::corpus::{annotate, build_vocab, gen_pcfg, linearize, pcfg, Scenario};
use gatescope::lstm::DropoutConfig;
use gatescope::probe::{stats, ProbeDataset, VectorKind};
use gatescope::train::{self, TrainConfig};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let grammar = pcfg::default_grammar();
    let limits = pcfg::GenLimits { max_len: 120, max_depth: Some(10) };
    let trees = gen_pcfg(&grammar, 5000, 42, limits).unwrap();
    let seqs: Vec<_> = trees.iter().map(|t| linearize(t, Scenario::Paren)).collect();
    let vocab = build_vocab(&seqs, 10_000, &Default::default()).unwrap();
    let ids: Vec<Vec<u32>> = seqs.iter().map(|s| vocab.encode_seq(s).unwrap()).collect();
    let (tr, te) = train::split_evenly(ids.len(), 10);
    let train_ids: Vec<Vec<u32>> = tr.iter().map(|&i| ids[i].clone()).collect();
    let test_ids: Vec<Vec<u32>> = te.iter().map(|&i| ids[i].clone()).collect();
    println!("corpus ready: {} train, {} test, mean len {:.1} ({:?})",
        train_ids.len(), test_ids.len(),
        ids.iter().map(|s| s.len()).sum::<usize>() as f64 / ids.len() as f64, t0.elapsed());

    let mut cfg = TrainConfig::for_scenario(Scenario::Paren);
    cfg.embed_dim = 64; cfg.state_dim = 64; cfg.epochs = 20; cfg.seed = 42;
    let out = train::train(&cfg, &train_ids, &test_ids, &vocab).unwrap();
    println!("trained in {:?}; best epoch {:?}", t0.elapsed(), out.best_epoch);
    for m in &out.metrics {
        println!("  epoch {:2} loss {:.4} acc {:.4} eos P {:.4} R {:.4}",
            m.epoch, m.train_loss.unwrap(), m.accuracy,
            m.groups["eos"].precision, m.groups["eos"].recall);
    }

    // Trace held-out sentences and probe.
    let test_seqs: Vec<_> = te.iter().map(|&i| annotate(seqs[i].clone(), &[]).unwrap()).collect();
    let traces: Vec<_> = test_ids.iter().enumerate().map(|(k, s)| {
        let mut t = out.params.forward(s, &DropoutConfig::disabled()).unwrap().1;
        t.sentence_id = k; t
    }).collect();
    let ds = ProbeDataset::build(&traces, &test_seqs, &[]).unwrap();

    let dc = stats::depth_correlation(&ds, VectorKind::Context, &stats::DepthTarget::Overall).unwrap();
    println!("A2: best dim {} rho {:.5} alpha {:.3}", dc.best_dim, dc.rho, dc.alpha);

    let mesh = stats::mesh_export(&ds, dc.best_dim).unwrap();
    println!("A4: bop step {:.3} (+-{:.3}) eop step {:.3} (+-{:.3}) terminal {:.3} (+-{:.3})",
        mesh.bop_step_mean, mesh.bop_step_std, mesh.eop_step_mean, mesh.eop_step_std,
        mesh.terminal_mean, mesh.terminal_std);

    let f_near = stats::fraction_near(ds.forget.iter().copied(), &[0.0, 1.0], 0.1);
    let u_near = stats::fraction_near(ds.update.iter().copied(), &[-1.0, 0.0, 1.0], 0.1);
    println!("A5: f near binary {:.3}, u near ternary {:.3}", f_near, u_near);
    for c in [-2.0f64, -1.0, 0.0, 1.0] {
        let m = stats::window_mass(ds.context.iter().copied(), c, 0.1);
        let l = stats::window_mass(ds.context.iter().copied(), c - 0.2, 0.1);
        let r = stats::window_mass(ds.context.iter().copied(), c + 0.2, 0.1);
        println!("  c window {:+.0}: mass {:.4} flanks {:.4}/{:.4} -> {}", c, m, l, r,
            if m > l && m > r {"OK"} else {"FAIL"});
    }
    println!("total {:?}", t0.elapsed());
}
