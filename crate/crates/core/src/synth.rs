//! Deterministic synthetic contracts with known clone structure.
//!
//! A template is a list of pieces; each piece is a short run of non-trigger
//! instructions closed by one trigger opcode, so piece boundaries of the
//! generated code are known exactly. Copies of a template can carry fresh PUSH
//! immediates, a fresh Swarm trailer, a creation stub, and a bounded number of
//! piece-level edits.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::address::Address;
use crate::evm::opcode::{JUMP, JUMPI, PUSH1, RETURN, REVERT, STOP};
use crate::evm::swarm::{SWARM_PREFIX, SWARM_SUFFIX};
use crate::evm::{ContractRecord, CreationKind};

const TRIGGERS: [u8; 5] = [STOP, JUMP, JUMPI, REVERT, RETURN];

// arithmetic, comparison, environment, memory/storage, dup/swap, JUMPDEST
const BODY_OPS: &[u8] = &[
    0x01, 0x02, 0x03, 0x04, 0x06, 0x10, 0x11, 0x14, 0x15, 0x16, 0x17, 0x19, 0x1b, 0x1c, 0x20, 0x30, 0x33, 0x34,
    0x35, 0x36, 0x39, 0x42, 0x50, 0x51, 0x52, 0x54, 0x55, 0x5b, 0x80, 0x81, 0x82, 0x90, 0x91, 0x92, 0xa2,
];

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Opcode skeleton of one piece; the last byte is the trigger.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece(pub Vec<u8>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub pieces: Vec<Piece>,
}

fn random_piece<R: Rng>(rng: &mut R) -> Piece {
    let len = rng.gen_range(2..=8);
    let mut ops: Vec<u8> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.35) {
                PUSH1 + rng.gen_range(0..32u8)
            } else {
                *BODY_OPS.choose(rng).unwrap()
            }
        })
        .collect();
    ops.push(*TRIGGERS.choose(rng).unwrap());
    Piece(ops)
}

impl Template {
    pub fn random<R: Rng>(rng: &mut R, pieces: usize) -> Self {
        Template {
            pieces: (0..pieces).map(|_| random_piece(rng)).collect(),
        }
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// Runtime bytecode with random PUSH immediates.
    pub fn render<R: Rng>(&self, rng: &mut R) -> Vec<u8> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            for &op in &piece.0 {
                out.push(op);
                if (PUSH1..=PUSH1 + 31).contains(&op) {
                    let n = (op - PUSH1 + 1) as usize;
                    out.extend((0..n).map(|_| rng.gen::<u8>()));
                }
            }
        }
        out
    }

    /// Applies `edits` piece-level edits (replace, insert or delete), each at
    /// a different position.
    pub fn mutate<R: Rng>(&self, rng: &mut R, edits: usize) -> Template {
        let mut pieces = self.pieces.clone();
        let mut positions: Vec<usize> = (0..pieces.len()).collect();
        positions.shuffle(rng);
        let mut chosen: Vec<usize> = positions.into_iter().take(edits).collect();
        // apply from the back so earlier indices stay valid
        chosen.sort_unstable_by(|a, b| b.cmp(a));
        for pos in chosen {
            match rng.gen_range(0..3) {
                0 => {
                    let mut p = random_piece(rng);
                    while p == pieces[pos] {
                        p = random_piece(rng);
                    }
                    pieces[pos] = p;
                }
                1 => pieces.insert(pos, random_piece(rng)),
                _ if pieces.len() > 1 => {
                    pieces.remove(pos);
                }
                _ => pieces[pos] = random_piece(rng),
            }
        }
        Template { pieces }
    }
}

pub fn swarm_tail<R: Rng>(rng: &mut R) -> Vec<u8> {
    let mut t = SWARM_PREFIX.to_vec();
    t.push(0x20);
    t.extend((0..32).map(|_| rng.gen::<u8>()));
    t.extend_from_slice(&SWARM_SUFFIX);
    t
}

/// A deployment stub ending in `PUSH1 0x00 RETURN STOP`.
pub fn creation_stub<R: Rng>(rng: &mut R) -> Vec<u8> {
    let mut out = vec![0x60, 0x80, 0x60, 0x40, 0x52];
    for _ in 0..rng.gen_range(2..10) {
        let op = *BODY_OPS.choose(rng).unwrap();
        out.push(op);
    }
    out.extend([0x61, rng.gen(), rng.gen(), 0x80, 0x61, rng.gen(), rng.gen(), 0x60, 0x00, 0x39]);
    out.extend([0x60, 0x00, 0xf3, 0x00]);
    out
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub seed: u64,
    pub templates: usize,
    pub copies_per_template: usize,
    pub min_pieces: usize,
    pub max_pieces: usize,
    /// Edits per copy stay strictly below this fraction of the template's
    /// pieces.
    pub max_edit_fraction: f64,
    pub with_creation: bool,
    pub with_swarm: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            templates: 5,
            copies_per_template: 20,
            min_pieces: 40,
            max_pieces: 60,
            max_edit_fraction: 0.10,
            with_creation: true,
            with_swarm: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub records: Vec<ContractRecord>,
    /// Template index of each record.
    pub template_of: Vec<usize>,
    pub templates: Vec<Template>,
}

/// Largest edit count strictly below `fraction * pieces`.
fn edit_budget(pieces: usize, fraction: f64) -> usize {
    let limit = fraction * pieces as f64;
    let floor = limit.floor() as usize;
    if floor as f64 == limit {
        floor.saturating_sub(1)
    } else {
        floor
    }
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = rng(config.seed);
    let templates: Vec<Template> = (0..config.templates)
        .map(|_| {
            let n = rng.gen_range(config.min_pieces..=config.max_pieces);
            Template::random(&mut rng, n)
        })
        .collect();
    let mut records = Vec::new();
    let mut template_of = Vec::new();
    let mut next_id = 1u64;
    for (t, template) in templates.iter().enumerate() {
        let budget = edit_budget(template.piece_count(), config.max_edit_fraction);
        for copy in 0..config.copies_per_template {
            // every third copy is an exact structural duplicate
            let edits = if copy % 3 == 0 { 0 } else { rng.gen_range(0..=budget) };
            let variant = template.mutate(&mut rng, edits);
            let mut bytecode = Vec::new();
            if config.with_creation {
                bytecode.extend(creation_stub(&mut rng));
            }
            bytecode.extend(variant.render(&mut rng));
            if config.with_swarm {
                bytecode.extend(swarm_tail(&mut rng));
            }
            records.push(ContractRecord {
                id: Address::from_low_u64(0x1000 + next_id),
                deployer: Address::from_low_u64(0xd000 + (next_id % 7)),
                creation_kind: if next_id.is_multiple_of(4) {
                    CreationKind::ContractCreated
                } else {
                    CreationKind::UserCreated
                },
                bytecode,
                deployed_at: Some(1_500_000_000 + rng.gen_range(0..10_000_000)),
            });
            template_of.push(t);
            next_id += 1;
        }
    }
    SynthCorpus {
        records,
        template_of,
        templates,
    }
}
