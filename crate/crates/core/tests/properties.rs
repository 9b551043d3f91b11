use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::seq::SliceRandom;

use evmclone::analytics::{classify, pareto_report, provenance_table, VulnProfile, VulnType};
use evmclone::cluster::{build_graph, connected_components, TemplateList};
use evmclone::dappmatch::{detect_clones, km_match, ContractInfo, DAppManifest, FingerprintStore};
use evmclone::evm::swarm::strip_swarm;
use evmclone::evm::{decode, dedup, encode, tokenize, ContractRecord, CreationKind, InputKind};
use evmclone::fingerprint::{generate_fp, ALPHABET};
use evmclone::similarity::{
    levenshtein, pairwise_compare, similarity_score, CompareEntry, MetaAttributes, SimilarityPair,
};
use evmclone::synth::{self, swarm_tail, Template};
use evmclone::{Address, Digest, Fingerprint};

fn fingerprint() -> impl Strategy<Value = Fingerprint> {
    proptest::collection::vec(proptest::sample::select(ALPHABET.to_vec()), 1..40)
        .prop_map(|v| Fingerprint::parse(std::str::from_utf8(&v).unwrap()).unwrap())
}

fn profile() -> impl Strategy<Value = VulnProfile> {
    proptest::collection::vec((0..VulnType::ALL.len(), 0u32..3), 0..4).prop_map(|v| {
        let mut p = VulnProfile::new();
        for (t, n) in v {
            p.add(VulnType::ALL[t], n);
        }
        p
    })
}

fn template(seed: u64, pieces: usize) -> (Template, synth::Rng8) {
    let mut rng = synth::rng(seed);
    (Template::random(&mut rng, pieces), rng)
}

fn fp_of(code: &[u8]) -> Fingerprint {
    generate_fp(&tokenize(code).unwrap()).unwrap()
}

fn addr(n: u64) -> Address {
    Address::from_low_u64(n)
}

proptest! {
    #[test]
    fn decode_encode_round_trip(code in proptest::collection::vec(any::<u8>(), 1..400)) {
        let ins = decode(&code).unwrap();
        let mut offset = 0;
        for i in &ins {
            prop_assert_eq!(i.offset, offset);
            offset = i.next_offset();
        }
        let out = encode(&ins);
        prop_assert!(out.starts_with(&code));
        let truncated = ins.last().unwrap().truncated;
        prop_assert_eq!(out.len() == code.len(), !truncated);
    }

    #[test]
    fn strip_swarm_is_idempotent(code in proptest::collection::vec(any::<u8>(), 0..200), seed: u64) {
        let once = strip_swarm(&code);
        prop_assert_eq!(strip_swarm(once), once);
        let mut rng = synth::rng(seed);
        let tailed = [code.clone(), swarm_tail(&mut rng)].concat();
        prop_assert_eq!(strip_swarm(&tailed), once);
    }

    #[test]
    fn immediates_do_not_change_tokens(code in proptest::collection::vec(any::<u8>(), 1..300), fill: u8) {
        let mut ins = decode(&code).unwrap();
        for i in &mut ins {
            i.immediate.iter_mut().for_each(|b| *b = fill);
        }
        let a = tokenize(&code).unwrap();
        let b = tokenize(&encode(&ins)).unwrap();
        prop_assert_eq!(a.opcode_count, b.opcode_count);
        prop_assert_eq!(a.token_hash, b.token_hash);
        prop_assert_eq!(a.block_count, b.block_count);
    }

    #[test]
    fn dedup_partitions_the_corpus(
        picks in proptest::collection::vec((0usize..6, any::<u8>()), 1..60),
    ) {
        let shapes: [&[u8]; 6] = [&[0x60, 0, 0x56], &[0x61, 0, 0, 0x00], &[0x01, 0x02], &[0x5b], &[0x60, 0, 0x60, 0, 0xf3], &[0x01]];
        let records: Vec<ContractRecord> = picks
            .iter()
            .enumerate()
            .map(|(i, &(s, imm))| {
                let mut bytecode = shapes[s].to_vec();
                if bytecode[0] == 0x60 || bytecode[0] == 0x61 {
                    bytecode[1] = imm;
                }
                ContractRecord {
                    id: addr(i as u64 + 1),
                    deployer: addr(0xd0),
                    creation_kind: CreationKind::UserCreated,
                    bytecode,
                    deployed_at: Some(1000 - i as u64 % 7),
                }
            })
            .collect();
        let d = dedup(&records, InputKind::Runtime).unwrap();
        prop_assert_eq!(d.record_count(), records.len());
        let mut seen = BTreeSet::new();
        for (hash, g) in &d.groups {
            prop_assert!(g.members.contains(&g.representative));
            for m in &g.members {
                prop_assert!(seen.insert(*m));
            }
            prop_assert_eq!(&g.token_hash, hash);
        }
        prop_assert_eq!(seen.len(), records.len());
        prop_assert_eq!(d.distinct.len(), d.groups.len());
        let distinct: BTreeSet<usize> = picks.iter().map(|p| p.0).collect();
        prop_assert_eq!(d.groups.len(), distinct.len());
    }

    #[test]
    fn one_piece_edit_moves_fingerprint_by_at_most_one(seed: u64, pieces in 1usize..60) {
        let (t, mut rng) = template(seed, pieces);
        let edited = t.mutate(&mut rng, 1);
        let a = fp_of(&t.render(&mut rng));
        let b = fp_of(&edited.render(&mut rng));
        prop_assert!(levenshtein(a.as_bytes(), b.as_bytes()) <= 1);
    }

    #[test]
    fn fingerprint_of_concatenation(seed: u64, n1 in 1usize..30, n2 in 1usize..30) {
        let (a, mut rng) = template(seed, n1);
        let b = Template::random(&mut rng, n2);
        let (ca, cb) = (a.render(&mut rng), b.render(&mut rng));
        let whole = fp_of(&[ca.clone(), cb.clone()].concat());
        let fa = fp_of(&ca);
        prop_assert!(whole.as_str().starts_with(fa.as_str()));
        prop_assert_eq!(whole.as_str(), format!("{}{}", fa, fp_of(&cb)));
    }

    #[test]
    fn piece_reordering_permutes_characters(seed: u64, pieces in 1usize..40) {
        let (t, mut rng) = template(seed, pieces);
        let mut shuffled = t.clone();
        shuffled.pieces.shuffle(&mut rng);
        let mut x = fp_of(&t.render(&mut rng)).as_bytes().to_vec();
        let mut y = fp_of(&shuffled.render(&mut rng)).as_bytes().to_vec();
        x.sort_unstable();
        y.sort_unstable();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn score_is_symmetric_and_bounded(x in fingerprint(), y in fingerprint()) {
        let s = similarity_score(&x, &y).unwrap();
        prop_assert!((0.0..=100.0).contains(&s));
        prop_assert_eq!(s, similarity_score(&y, &x).unwrap());
        prop_assert_eq!(similarity_score(&x, &x).unwrap(), 100.0);
        prop_assert_eq!(s == 100.0, x == y);
    }

    #[test]
    fn edit_distance_triangle(x in fingerprint(), y in fingerprint(), z in fingerprint()) {
        let d = |a: &Fingerprint, b: &Fingerprint| levenshtein(a.as_bytes(), b.as_bytes());
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&x, &y), d(&y, &x));
    }

    #[test]
    fn pairwise_compare_ignores_input_order(
        fps in proptest::collection::vec(fingerprint(), 2..25),
        seed: u64,
        workers in 1usize..5,
    ) {
        let mut entries: Vec<CompareEntry> = fps
            .into_iter()
            .enumerate()
            .map(|(i, fingerprint)| CompareEntry {
                id: addr(i as u64 + 1),
                meta: MetaAttributes {
                    opcode_count: fingerprint.piece_count() * 3,
                    block_count: fingerprint.piece_count(),
                    runtime_byte_len: fingerprint.piece_count() * 5,
                },
                fingerprint,
            })
            .collect();
        let baseline = pairwise_compare(&entries, 0.0, 1);
        entries.shuffle(&mut synth::rng(seed));
        prop_assert_eq!(pairwise_compare(&entries, 0.0, workers), baseline.clone());
        for p in &baseline {
            prop_assert!(p.a < p.b);
        }
    }

    #[test]
    fn higher_threshold_refines_clusters(
        edges in proptest::collection::vec((0u64..40, 0u64..40, 0u8..=100), 0..120),
    ) {
        let pairs: Vec<SimilarityPair> = edges
            .iter()
            .filter(|e| e.0 != e.1)
            .map(|&(x, y, s)| SimilarityPair::with_score(addr(x), addr(y), s as f64))
            .collect();
        let part = |t: f64| -> Vec<BTreeSet<Address>> {
            let mut g = build_graph(&pairs, t);
            g.add_nodes((0..40).map(addr));
            let c = connected_components(&g);
            c.clusters
                .iter()
                .map(|cl| cl.members.iter().copied().collect())
                .chain(c.singletons.iter().map(|&s| BTreeSet::from([s])))
                .collect()
        };
        let (p40, p70, p90) = (part(40.0), part(70.0), part(90.0));
        for (fine, coarse) in [(&p70, &p40), (&p90, &p70)] {
            prop_assert!(fine.len() >= coarse.len());
            for f in fine {
                prop_assert!(coarse.iter().any(|c| f.is_subset(c)));
            }
        }
    }

    #[test]
    fn classify_is_symmetric(x in profile(), y in profile()) {
        prop_assert_eq!(classify(&x, &y), classify(&y, &x));
    }

    #[test]
    fn provenance_cells_sum_to_pair_count(
        profs in proptest::collection::vec(profile(), 2..30),
        links in proptest::collection::vec((0usize..30, 0usize..30, 0u64..3), 0..50),
    ) {
        let n = profs.len();
        let profiles: HashMap<Address, VulnProfile> =
            profs.into_iter().enumerate().map(|(i, p)| (addr(i as u64), p)).collect();
        let mut authors = HashMap::new();
        let pairs: Vec<SimilarityPair> = links
            .iter()
            .filter(|l| l.0 % n != l.1 % n)
            .map(|&(x, y, _)| SimilarityPair::with_score(addr((x % n) as u64), addr((y % n) as u64), 80.0))
            .collect();
        for &(x, _, author) in &links {
            authors.insert(addr((x % n) as u64), addr(100 + author));
        }
        for i in 0..n {
            authors.entry(addr(i as u64)).or_insert(addr(100));
        }
        let t = provenance_table(&pairs, &profiles, &authors).unwrap();
        prop_assert_eq!(t.total(), pairs.len() as u64);
        let rows: u64 = t.same_author.iter().chain(&t.different_author).sum();
        prop_assert_eq!(rows, pairs.len() as u64);
    }

    #[test]
    fn pareto_cdf_is_monotone_to_100(sizes in proptest::collection::vec(1usize..10_000, 1..200)) {
        let r = pareto_report(&sizes).unwrap();
        prop_assert!(r.cdf.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(*r.cdf.last().unwrap(), 100.0);
        prop_assert!(r.top_1.share <= r.top_20.share);
        prop_assert!(r.top_20.clusters >= 1);
    }

    #[test]
    fn km_matching_is_legal(
        rows in 1usize..8,
        cols in 1usize..8,
        seed in proptest::collection::vec(0.0f64..100.0, 64),
    ) {
        let w: Vec<Vec<f64>> = (0..rows).map(|i| (0..cols).map(|j| seed[i * 8 + j]).collect()).collect();
        let r = km_match(&w).unwrap();
        let a: BTreeSet<usize> = r.matched_edges.iter().map(|e| e.a).collect();
        let b: BTreeSet<usize> = r.matched_edges.iter().map(|e| e.b).collect();
        prop_assert_eq!(a.len(), r.matched_edges.len());
        prop_assert_eq!(b.len(), r.matched_edges.len());
        let sum: f64 = r.matched_edges.iter().map(|e| w[e.a][e.b]).sum();
        prop_assert!((sum - r.total_weight).abs() < 1e-9);
        // never worse than the diagonal assignment
        let diag: f64 = (0..rows.min(cols)).map(|i| w[i][i]).sum();
        prop_assert!(r.total_weight + 1e-9 >= diag);
    }

    #[test]
    fn detect_clones_ignores_manifest_order(
        layout in proptest::collection::vec((subsequence((0u64..8).collect::<Vec<_>>(), 1..4), 0u64..4, 0u64..100), 2..8),
        seed: u64,
    ) {
        let bases = ["ABCDEFGHIJ", "ABCDEFGHIZ", "QRSTUVWXYZ", "QRSTUVWXYA", "0123456789", "01234567AB", "abcdefghij", "abcdefgxyz"];
        let mut store = FingerprintStore::new();
        for (i, fp) in bases.iter().enumerate() {
            store.insert(addr(i as u64), ContractInfo {
                token_hash: Digest([i as u8; 32]),
                meta: MetaAttributes { opcode_count: 30, block_count: 10, runtime_byte_len: 60 },
                fingerprint: Fingerprint::parse(fp).unwrap(),
            });
        }
        let mut dapps: Vec<DAppManifest> = layout
            .iter()
            .enumerate()
            .map(|(i, (contracts, deployer, at))| DAppManifest {
                name: format!("dapp{i}"),
                contracts: contracts.iter().map(|&c| addr(c)).collect(),
                deployers: BTreeSet::from([addr(0xd0 + deployer)]),
                volume: i as f64,
                deployed_at: *at,
                category: None,
            })
            .collect();
        let templates = TemplateList::new();
        let base = detect_clones(&dapps, &store, &templates, 70.0).unwrap();
        dapps.shuffle(&mut synth::rng(seed));
        prop_assert_eq!(detect_clones(&dapps, &store, &templates, 70.0).unwrap(), base.clone());
        for p in &base.pairs {
            prop_assert!(p.score >= 70.0);
        }
    }
}
