use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use evmclone::analytics::{duplicate_stats, pareto_report, provenance_table, VulnProfile};
use evmclone::cluster::{build_graph, connected_components, expand_with_duplicates, label_clusters, TemplateList};
use evmclone::corpus::files::{
    load_dapps, load_groups, load_pairs, load_templates, load_vulns, representative_index, write_groups,
    write_pairs, GroupRow,
};
use evmclone::corpus::rpc::RPC_URL_ENV;
use evmclone::corpus::{
    fetch_code, import_records, load_db, save_db, write_records, CorpusManifest, FetchedCode, FingerprintRecord,
    RpcConfig,
};
use evmclone::dappmatch::{detect_clones, volume_impact, ContractInfo, FingerprintStore};
use evmclone::evm::{self, decode, preprocess, ContractRecord, CreationKind, Dedup, InputKind};
use evmclone::report;
use evmclone::similarity::{format_score, pairwise_compare_with_stats};
use evmclone::{Address, Digest};

use crate::workdir::{self, WorkDir};

// --- disasm ---

fn read_bytecode(input: &str) -> Result<Vec<u8>> {
    let path = Path::new(input);
    if path.is_file() {
        let raw = fs::read(path).with_context(|| format!("reading {input}"))?;
        if let Ok(text) = std::str::from_utf8(&raw) {
            let compact: String = text.split_whitespace().collect();
            if let Ok(bytes) = evmclone::address::decode_hex(&compact) {
                return Ok(bytes);
            }
        }
        return Ok(raw);
    }
    evmclone::address::decode_hex(input.trim()).with_context(|| format!("`{input}` is neither a file nor hex"))
}

pub fn disasm(input: &str, runtime: Option<InputKind>) -> Result<()> {
    let bytes = read_bytecode(input)?;
    let code = match runtime {
        Some(kind) => evm::runtime_code(&bytes, kind)?,
        None => &bytes[..],
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for ins in decode(code)? {
        writeln!(out, "{ins}")?;
    }
    Ok(())
}

// --- dedup / fingerprint ---

struct Imported {
    records: Vec<ContractRecord>,
    dedup: Dedup,
    manifest: CorpusManifest,
}

/// Imports a corpus, sets aside records with no usable runtime code, and
/// groups the rest.
fn import_and_dedup(input: &Path, wd: &WorkDir, kind: InputKind) -> Result<Imported> {
    let report = import_records(input)?;
    log::info!(
        "imported {} records from {} ({} malformed)",
        report.records.len(),
        input.display(),
        report.errors.len()
    );
    wd.write_csv(
        workdir::IMPORT_ERRORS,
        &["line", "message"],
        report.errors.iter().map(|e| [e.line.to_string(), e.message.clone()]),
    )?;

    let mut records = Vec::with_capacity(report.records.len());
    let mut rejected = Vec::new();
    for r in report.records {
        match preprocess(&r.bytecode, kind) {
            Ok(_) => records.push(r),
            Err(e) => rejected.push([r.id.to_string(), e.to_string()]),
        }
    }
    if !rejected.is_empty() {
        log::warn!("{} records have no usable runtime code", rejected.len());
    }
    rejected.sort();
    wd.write_csv(workdir::REJECTED, &["address", "reason"], rejected)?;

    let dedup = evm::dedup(&records, kind)?;
    let manifest = CorpusManifest::from_records(input.display().to_string(), &records).with_dedup(&dedup);
    log::info!(
        "{} records, {} distinct runtime codes, {} distinct token sequences",
        records.len(),
        dedup.distinct_runtime_count,
        dedup.distinct.len()
    );
    Ok(Imported {
        records,
        dedup,
        manifest,
    })
}

fn write_dedup_outputs(imported: &Imported, wd: &WorkDir, top: usize) -> Result<()> {
    let deployers: HashMap<Address, Address> = imported.records.iter().map(|r| (r.id, r.deployer)).collect();
    let mut rows: Vec<GroupRow> = imported
        .dedup
        .groups
        .values()
        .map(|g| GroupRow {
            group: g.clone(),
            deployer: deployers[&g.representative],
        })
        .collect();
    rows.sort_by_key(|r| r.group.representative);
    write_groups(wd.writer(workdir::GROUPS)?, &rows)?;

    wd.write_csv(
        workdir::DISTINCT,
        &["address", "token_hash", "runtime_hash", "opcode_count", "block_count", "runtime_len", "truncated_push"],
        imported.dedup.distinct.iter().map(|d| {
            [
                d.record.id.to_string(),
                d.code.token_hash.to_string(),
                d.code.runtime_hash.to_string(),
                d.code.opcode_count.to_string(),
                d.code.block_count.to_string(),
                d.code.runtime_len.to_string(),
                d.code.truncated_push.to_string(),
            ]
        }),
    )?;
    wd.write_json(workdir::MANIFEST, &imported.manifest)?;

    let stats = duplicate_stats(imported.dedup.groups.values(), top);
    let m = &imported.manifest;
    let mut text = String::new();
    text.push_str(&report::text_table(
        &["", "Contracts", "Distinct runtime", "Distinct tokens"],
        &[vec![
            "All".to_string(),
            report::count(m.record_count as u64),
            report::count(m.distinct_runtime.unwrap_or(0) as u64),
            report::count(m.distinct_tokens.unwrap_or(0) as u64),
        ]],
    ));
    text.push_str(&format!(
        "\nuser-created: {}, contract-created: {}\n",
        report::count(m.user_created as u64),
        report::count(m.contract_created as u64)
    ));
    let with_dups = imported.dedup.groups.values().filter(|g| g.size() > 1).map(|g| g.size()).sum::<usize>();
    if m.record_count > 0 {
        text.push_str(&format!(
            "contracts with at least one duplicate: {} ({:.2}%)\n",
            report::count(with_dups as u64),
            with_dups as f64 * 100.0 / m.record_count as f64
        ));
    }
    text.push_str(&format!("\nLargest duplicate groups (top {top}):\n"));
    let rows: Vec<Vec<String>> = stats
        .top
        .iter()
        .map(|r| vec![r.rank.to_string(), r.representative.to_string(), report::count(r.size as u64)])
        .collect();
    text.push_str(&report::text_table(&["Rank", "Representative", "Copies"], &rows));
    wd.write_text(workdir::DUPLICATES, &text)
}

pub fn dedup(input: &Path, out: &Path, kind: InputKind, top: usize, timestamp: bool) -> Result<()> {
    let wd = WorkDir::create(out, timestamp)?;
    let imported = import_and_dedup(input, &wd, kind)?;
    write_dedup_outputs(&imported, &wd, top)
}

pub fn fingerprint(input: &Path, out: &Path, kind: InputKind, top: usize, timestamp: bool) -> Result<()> {
    let wd = WorkDir::create(out, timestamp)?;
    let imported = import_and_dedup(input, &wd, kind)?;
    write_dedup_outputs(&imported, &wd, top)?;
    let records = imported
        .dedup
        .distinct
        .iter()
        .map(FingerprintRecord::from_distinct)
        .collect::<Result<Vec<_>, _>>()?;
    save_db(&wd.path(workdir::FINGERPRINT_DB), &records)?;
    log::info!("wrote {} fingerprints to {}", records.len(), wd.path(workdir::FINGERPRINT_DB).display());
    Ok(())
}

// --- compare ---

#[derive(Serialize)]
struct CompareSummary {
    contracts: usize,
    prune_floor: f64,
    threshold: f64,
    candidate_pairs: u64,
    pruned_pairs: u64,
    scored_pairs: u64,
    stored_pairs: u64,
    pairs_at_threshold: usize,
}

pub fn compare(input: &Path, out: &Path, threshold: f64, floor: f64, workers: usize) -> Result<()> {
    let db = load_db(&input.join(workdir::FINGERPRINT_DB))?;
    let wd = WorkDir::create(out, false)?;
    let mut entries: Vec<_> = db.iter().map(FingerprintRecord::compare_entry).collect();
    entries.sort_by_key(|e| e.id);
    log::info!("comparing {} fingerprints with {workers} workers", entries.len());
    let (pairs, stats) = pairwise_compare_with_stats(&entries, floor, workers);
    write_pairs(wd.writer(workdir::PAIRS)?, &pairs)?;
    let summary = CompareSummary {
        contracts: entries.len(),
        prune_floor: floor,
        threshold,
        candidate_pairs: stats.candidate_pairs,
        pruned_pairs: stats.pruned,
        scored_pairs: stats.scored,
        stored_pairs: stats.kept,
        pairs_at_threshold: pairs.iter().filter(|p| p.score >= threshold).count(),
    };
    log::info!(
        "{} candidate pairs, {} pruned, {} stored, {} at threshold {}",
        summary.candidate_pairs,
        summary.pruned_pairs,
        summary.stored_pairs,
        summary.pairs_at_threshold,
        threshold
    );
    wd.write_json(workdir::COMPARE_SUMMARY, &summary)
}

// --- cluster ---

#[derive(Serialize)]
struct ClusterSummary {
    threshold: f64,
    distinct_contracts: usize,
    clusters: usize,
    clustered_contracts: usize,
    clustered_population: usize,
    singletons: usize,
    largest_cluster: Option<String>,
    top_1_percent_share: Option<f64>,
    top_20_percent_share: Option<f64>,
}

fn load_templates_opt(path: Option<&Path>) -> Result<TemplateList> {
    Ok(match path {
        Some(p) => load_templates(p)?,
        None => TemplateList::new(),
    })
}

pub fn cluster(input: &Path, out: &Path, threshold: f64, templates: Option<&Path>, timestamp: bool) -> Result<()> {
    let templates = load_templates_opt(templates)?;
    let db = load_db(&input.join(workdir::FINGERPRINT_DB))?;
    let groups = load_groups(&input.join(workdir::GROUPS))?;
    let pairs = load_pairs(&input.join(workdir::PAIRS))?;
    let wd = WorkDir::create(out, timestamp)?;

    let mut g = build_graph(&pairs, threshold);
    g.add_nodes(db.iter().map(|r| r.id));
    let comps = connected_components(&g);
    let mut clusters = expand_with_duplicates(comps.clusters, groups.iter().map(|r| &r.group))?;
    let hashes: HashMap<Address, Digest> = db.iter().map(|r| (r.id, r.token_hash)).collect();
    label_clusters(&mut clusters, &hashes, &templates);
    log::info!(
        "{} clusters and {} isolated contracts at threshold {threshold}",
        clusters.len(),
        comps.singletons.len()
    );

    wd.write_csv(
        workdir::CLUSTERS_CSV,
        &["cluster", "size", "population", "label", "members"],
        clusters.iter().enumerate().map(|(i, c)| {
            [
                (i + 1).to_string(),
                c.members.len().to_string(),
                c.total_population.to_string(),
                c.label.clone().unwrap_or_default(),
                c.members.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
            ]
        }),
    )?;
    wd.write_csv(workdir::SINGLETONS, &["address"], comps.singletons.iter().map(|s| [s.to_string()]))?;

    let populations: Vec<usize> = clusters.iter().map(|c| c.total_population).collect();
    let pareto = pareto_report(&populations).ok();
    match &pareto {
        Some(p) => wd.write_csv(
            workdir::PARETO,
            &["rank", "population", "cumulative_percent"],
            p.sizes
                .iter()
                .zip(&p.cdf)
                .enumerate()
                .map(|(i, (s, c))| [(i + 1).to_string(), s.to_string(), format!("{c:.4}")]),
        )?,
        None => wd.write_csv(workdir::PARETO, &["rank", "population", "cumulative_percent"], Vec::<[String; 3]>::new())?,
    }

    let mut text = format!("Clusters at threshold {threshold}\n\n");
    let rows: Vec<Vec<String>> = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| vec![(i + 1).to_string(), c.size_label(), c.label.clone().unwrap_or_default()])
        .collect();
    text.push_str(&report::text_table(&["#", "Contracts (population)", "Label"], &rows));
    text.push_str(&format!("\nisolated contracts: {}\n", report::count(comps.singletons.len() as u64)));
    if let Some(p) = &pareto {
        text.push_str(&format!("{}\n{}\n", p.top_1.readout(), p.top_20.readout()));
    }
    wd.write_text(workdir::CLUSTERS_TXT, &text)?;

    let summary = ClusterSummary {
        threshold,
        distinct_contracts: db.len(),
        clusters: clusters.len(),
        clustered_contracts: clusters.iter().map(|c| c.members.len()).sum(),
        clustered_population: populations.iter().sum(),
        singletons: comps.singletons.len(),
        largest_cluster: clusters.first().map(|c| c.size_label()),
        top_1_percent_share: pareto.as_ref().map(|p| p.top_1.share),
        top_20_percent_share: pareto.as_ref().map(|p| p.top_20.share),
    };
    wd.write_json(workdir::SUMMARY, &summary)
}

// --- dapp ---

/// Fingerprint store covering every corpus contract: distinct entries from
/// the database, duplicates aliased to their representative.
fn build_store(input: &Path) -> Result<FingerprintStore> {
    let db = load_db(&input.join(workdir::FINGERPRINT_DB))?;
    let groups = load_groups(&input.join(workdir::GROUPS))?;
    let mut store = FingerprintStore::new();
    for r in &db {
        store.insert(
            r.id,
            ContractInfo {
                token_hash: r.token_hash,
                meta: r.meta,
                fingerprint: r.fingerprint.clone(),
            },
        );
    }
    for (member, rep) in representative_index(&groups) {
        if member != rep && !store.alias(member, rep) {
            bail!("group representative {rep} is missing from the fingerprint database");
        }
    }
    Ok(store)
}

pub fn dapp(
    input: &Path,
    out: &Path,
    dapps: &Path,
    templates: Option<&Path>,
    threshold: f64,
    timestamp: bool,
) -> Result<()> {
    let templates = load_templates_opt(templates)?;
    let store = build_store(input)?;
    let manifests = load_dapps(dapps)?;
    let wd = WorkDir::create(out, timestamp)?;
    let report = detect_clones(&manifests, &store, &templates, threshold)?;
    log::info!(
        "{} DApps: {} clone pairs in {} clusters, {} template-only",
        manifests.len(),
        report.pairs.len(),
        report.clusters.len(),
        report.template_only.len()
    );
    wd.write_csv(
        workdir::DAPP_PAIRS,
        &["original", "clone", "score"],
        report.pairs.iter().map(|p| [p.original.clone(), p.clone.clone(), format_score(p.score)]),
    )?;
    wd.write_csv(
        workdir::DAPP_CLUSTERS,
        &["original", "clones"],
        report.clusters.iter().map(|c| [c.original.clone(), c.clones.join("; ")]),
    )?;
    let volume = volume_impact(&report.clusters, &manifests);
    let mut text = volume.render();
    if !report.template_only.is_empty() {
        text.push_str(&format!(
            "\nDApps built only from templates (not compared): {}\n",
            report.template_only.join(", ")
        ));
    }
    wd.write_text(workdir::VOLUME, &text)?;
    wd.write_json(
        workdir::DAPP_SUMMARY,
        &serde_json::json!({ "threshold": threshold, "clones": report, "volume": volume }),
    )
}

// --- vuln ---

pub fn vuln(input: &Path, out: &Path, vulns: &Path, threshold: f64, timestamp: bool) -> Result<()> {
    let findings = load_vulns(vulns)?;
    let groups = load_groups(&input.join(workdir::GROUPS))?;
    let pairs: Vec<_> = load_pairs(&input.join(workdir::PAIRS))?
        .into_iter()
        .filter(|p| p.score >= threshold)
        .collect();
    let wd = WorkDir::create(out, timestamp)?;

    let authors: HashMap<Address, Address> = groups.iter().map(|r| (r.group.representative, r.deployer)).collect();
    // contracts without scanner rows count as clean
    let mut profiles: HashMap<Address, VulnProfile> = HashMap::new();
    let mut unscanned = 0usize;
    for p in &pairs {
        for id in [p.a, p.b] {
            profiles.entry(id).or_insert_with(|| {
                findings.get(&id).cloned().unwrap_or_else(|| {
                    unscanned += 1;
                    VulnProfile::new()
                })
            });
        }
    }
    if unscanned > 0 {
        log::warn!("{unscanned} contracts in similar pairs have no scanner rows; treated as clean");
    }
    let table = provenance_table(&pairs, &profiles, &authors)?;
    let mut text = format!("Similar pairs at threshold {threshold}: {}\n\n", report::count(pairs.len() as u64));
    text.push_str(&table.render());
    wd.write_text(workdir::PROVENANCE_TXT, &text)?;
    wd.write_json(
        workdir::PROVENANCE_JSON,
        &serde_json::json!({
            "threshold": threshold,
            "pairs": pairs.len(),
            "unscanned_contracts": unscanned,
            "table": table,
            "same_vulnerability_percent": table.same_vulnerability_percent(),
        }),
    )
}

// --- fetch ---

pub fn fetch(input: &Path, out: &Path, rpc_url: Option<String>, timeout: u64, retries: u32) -> Result<()> {
    let mut config = RpcConfig {
        timeout: Duration::from_secs(timeout),
        retries,
        ..RpcConfig::default()
    }
    .with_env_override();
    if let Some(url) = rpc_url {
        config.endpoint = url;
    }
    log::info!("fetching code from {} (override with --rpc-url or {RPC_URL_ENV})", config.endpoint);

    let file = fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let mut wanted: BTreeMap<Address, Address> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let parse = |s: Option<&str>| -> Result<Option<Address>> {
            s.filter(|s| !s.is_empty())
                .map(|s| s.parse().with_context(|| format!("line {}: bad address `{s}`", i + 1)))
                .transpose()
        };
        let address = parse(parts.next())?.expect("non-empty line");
        let deployer = parse(parts.next())?.unwrap_or(Address([0; 20]));
        wanted.insert(address, deployer);
    }

    let mut records = Vec::new();
    let mut empty = 0;
    let mut failed = 0;
    for (address, deployer) in wanted {
        match fetch_code(&config, &address) {
            Ok(FetchedCode::Deployed(bytecode)) => records.push(ContractRecord {
                id: address,
                deployer,
                creation_kind: CreationKind::UserCreated,
                bytecode,
                deployed_at: None,
            }),
            Ok(FetchedCode::Empty) => {
                log::warn!("{address}: no code (externally owned or self-destructed)");
                empty += 1;
            }
            Err(e) => {
                log::error!("{address}: {e}");
                failed += 1;
            }
        }
    }
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_records(std::io::BufWriter::new(file), &records)?;
    log::info!(
        "wrote {} records to {} ({empty} without code, {failed} failed)",
        records.len(),
        out.display()
    );
    if failed > 0 && records.is_empty() {
        bail!("every lookup failed");
    }
    Ok(())
}
