// dry run of the mini-language CQ reproduction: census oracle vs bucketed campaign
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::Instant;

use cq_core::enumerator::Enumeration;
use cq_core::harness::{run_campaign, LanguageConfig};
use cq_core::metrics::compute_cq;
use cq_core::sampler::{bucketed_sample, SampleParams};
use cq_core::treegrammar::RenderRules;

fn main() {
    let t0 = Instant::now();
    let grammar = cq_core::grammar::load_grammar(
        &std::fs::read_to_string("assets/minilang.cqg").unwrap(),
    )
    .unwrap();
    let rtg = Arc::new(cq_core::treegrammar::compile_to_rtg(&grammar).unwrap());
    let rules = RenderRules::default();

    // census oracle via the batch validator
    let mut child = Command::new("target/debug/minilang-check")
        .arg("--batch")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let rtg2 = rtg.clone();
    let rules2 = rules.clone();
    let writer = std::thread::spawn(move || {
        let mut sizes = Vec::new();
        let mut w = std::io::BufWriter::new(&mut stdin);
        cq_core::oracle::for_each_program_below(&rtg2, &rules2, 48, &mut |p| {
            sizes.push(p.len() as u64);
            w.write_all(p.as_bytes()).unwrap();
            w.write_all(&[0]).unwrap();
        });
        w.flush().unwrap();
        drop(w);
        drop(stdin);
        sizes
    });
    let out = child.wait_with_output().unwrap();
    let sizes = writer.join().unwrap();
    let verdicts: Vec<bool> = out
        .stdout
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| l == b"A")
        .collect();
    assert_eq!(sizes.len(), verdicts.len());
    let mut acc = [0u64; 6];
    let mut pop = [0u64; 6];
    for (size, ok) in sizes.iter().zip(&verdicts) {
        let b = (size / 8) as usize;
        pop[b] += 1;
        if *ok {
            acc[b] += 1;
        }
    }
    println!("census done {:?}", t0.elapsed());

    for seed in [42u64, 43, 44, 7, 20250809] {
        let e = Enumeration::new(rtg.clone());
        let params = SampleParams::new(500, 0, 48, seed);
        let set = bucketed_sample(&e, &rules, 6, 500, &params).unwrap();
        let cfg = LanguageConfig {
            name: "minilang".into(),
            file_extension: "mml".into(),
            compile_command: vec!["target/debug/minilang-check".into(), "{file}".into()],
            entry_wrapper: None,
            timeout: std::time::Duration::from_secs(10),
            expected_success_exit: 0,
        };
        let campaign = run_campaign(&set, &cfg, 4).unwrap();
        let cq = compute_cq(&campaign).unwrap();
        // realized-weighted oracle
        let mut counts = [0u64; 6];
        for s in &set.samples {
            counts[s.bucket] += 1;
        }
        let mut est = 0.0;
        let mut n = 0u64;
        for b in 0..6 {
            if pop[b] > 0 && counts[b] > 0 {
                est += counts[b] as f64 * (100.0 * acc[b] as f64 / pop[b] as f64);
                n += counts[b];
            }
        }
        let oracle = est / n as f64;
        println!(
            "seed {seed}: campaign CQ {:.4} vs realized-weighted oracle {:.4} -> diff {:.4}pp (counts {:?})",
            cq,
            oracle,
            (cq - oracle).abs(),
            counts
        );
    }
    println!("total {:?}", t0.elapsed());
}
