//! Boolean-expression compression of preparation circuits.
//!
//! Each colour bit's location-controlled NOTs are read as product terms over
//! the location qubits. Rounds of pairwise scanning merge two terms on the
//! same colour bit whenever they agree everywhere except one fixed location
//! bit, where they take opposite values; the merged term has that bit as a
//! don't-care. Merged terms join the pool of the following round.
//!
//! Two terms differing in exactly one fixed bit are disjoint and their union
//! is the merged term, so replacing their two NOTs by one preserves the
//! per-location parity of flips on that colour bit. Two identical terms flip
//! twice and are dropped.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gqir::{Circuit, Control, Gate, GqirLayout};

/// Product term over location bits, attached to one colour bit. Bit `k` of
/// `mask` is set when location bit `k` is fixed, and then bit `k` of `value`
/// gives its required value. Unfixed bits of `value` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Implicant {
    pub target: usize,
    pub mask: u64,
    pub value: u64,
}

impl Implicant {
    pub fn new(target: usize, mask: u64, value: u64) -> Self {
        Self {
            target,
            mask,
            value: value & mask,
        }
    }

    pub fn minterm(target: usize, location_bits: usize, loc: u64) -> Self {
        Self::new(target, full_mask(location_bits), loc)
    }

    pub fn dont_cares(&self, location_bits: usize) -> u32 {
        location_bits as u32 - self.mask.count_ones()
    }

    pub fn covers(&self, loc: u64) -> bool {
        loc & self.mask == self.value
    }

    /// Every location the term covers, ascending.
    pub fn expand(&self, location_bits: usize) -> Vec<u64> {
        let free = !self.mask & full_mask(location_bits);
        let mut out = Vec::with_capacity(1 << free.count_ones());
        let mut sub = 0u64;
        loop {
            out.push(self.value | sub);
            sub = sub.wrapping_sub(free) & free;
            if sub == 0 {
                return out;
            }
        }
    }

    fn to_gate(self, layout: &GqirLayout) -> Gate {
        let controls = (0..layout.location_bits())
            .filter(|k| (self.mask >> k) & 1 == 1)
            .map(|k| Control {
                qubit: layout.location().qubit(k),
                polarity: (self.value >> k) & 1 == 1,
            })
            .collect();
        Gate::Mcx {
            controls,
            target: self.target,
        }
    }
}

fn full_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BecStats {
    /// Rounds executed, counting the final round that found nothing to merge.
    pub rounds: usize,
    /// Round cap, `h + w`.
    pub round_bound: usize,
    /// True when no two remaining terms can merge.
    pub converged: bool,
    /// Pairs examined: `k(k−1)/2` per colour bit per round for a pool of `k`.
    pub comparisons: u64,
    pub gates_before: u64,
    pub gates_after: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecCost {
    /// Measured preprocessing work (pair comparisons).
    pub comparisons: u64,
    /// Analytic bound `(h+w)·q·2^(2(h+w))`, i.e. `2n·q·2^(4n)` for square images.
    pub comparison_bound: u128,
    /// Gates left in the compressed circuit, not counting the Hadamard layer.
    pub c_i: u64,
    pub hadamards: u64,
}

/// One merge round over a single colour bit's pool, already in scan order.
/// Returns the next pool and whether anything merged.
fn merge_round(pool: &[Implicant], location_bits: usize) -> (Vec<Implicant>, bool) {
    let index: HashMap<(u64, u64), usize> = pool
        .iter()
        .enumerate()
        .map(|(i, t)| ((t.mask, t.value), i))
        .collect();
    let mut consumed = vec![false; pool.len()];
    let mut next = Vec::with_capacity(pool.len());
    let mut merged = false;
    for i in 0..pool.len() {
        if consumed[i] {
            continue;
        }
        let t = pool[i];
        let partner = (0..location_bits)
            .filter(|k| (t.mask >> k) & 1 == 1)
            .filter_map(|k| {
                let j = *index.get(&(t.mask, t.value ^ (1 << k)))?;
                (j > i && !consumed[j]).then_some((j, k))
            })
            .min();
        consumed[i] = true;
        match partner {
            Some((j, k)) => {
                consumed[j] = true;
                merged = true;
                next.push(Implicant::new(t.target, t.mask & !(1 << k), t.value));
            }
            None => next.push(t),
        }
    }
    (next, merged)
}

fn scan_order(pool: &mut [Implicant]) {
    pool.sort_unstable_by_key(|t| (t.value, t.mask));
}

/// Drops pairs of identical terms, which flip the same locations twice.
fn cancel_duplicates(pool: &mut Vec<Implicant>) {
    scan_order(pool);
    let mut out: Vec<Implicant> = Vec::with_capacity(pool.len());
    for t in pool.drain(..) {
        if out.last() == Some(&t) {
            out.pop();
        } else {
            out.push(t);
        }
    }
    *pool = out;
}

struct BitResult {
    terms: Vec<Implicant>,
    rounds: usize,
    converged: bool,
    comparisons: u64,
}

fn minimize_bit(mut pool: Vec<Implicant>, location_bits: usize, max_rounds: usize) -> BitResult {
    cancel_duplicates(&mut pool);
    let mut r = BitResult {
        terms: Vec::new(),
        rounds: 0,
        converged: false,
        comparisons: 0,
    };
    while r.rounds < max_rounds {
        let k = pool.len() as u64;
        r.comparisons += k * k.saturating_sub(1) / 2;
        r.rounds += 1;
        let (mut next, merged) = merge_round(&pool, location_bits);
        scan_order(&mut next);
        pool = next;
        if !merged {
            r.converged = true;
            break;
        }
    }
    if !r.converged {
        // cap reached; converged if nothing is left to merge
        r.converged = !merge_round(&pool, location_bits).1;
    }
    r.terms = pool;
    r
}

/// Reads a preparation circuit as its Hadamard layer and per-bit term lists.
fn decompose(circuit: &Circuit, layout: &GqirLayout) -> Result<(Vec<Gate>, Vec<Vec<Implicant>>)> {
    let loc = layout.location();
    let mut hadamards = Vec::new();
    let mut per_bit = vec![Vec::new(); layout.color_bits];
    for g in circuit.gates() {
        match g {
            Gate::Hadamard(t) if loc.contains(*t) => hadamards.push(g.clone()),
            Gate::Mcx { controls, target } if *target < layout.color_bits => {
                let (mut mask, mut value) = (0u64, 0u64);
                for c in controls {
                    if !loc.contains(c.qubit) {
                        return Err(Error::circuit(format!(
                            "NOT on bit {target} is controlled by non-location qubit {}",
                            c.qubit
                        )));
                    }
                    let k = c.qubit - loc.start;
                    mask |= 1 << k;
                    value |= u64::from(c.polarity) << k;
                }
                per_bit[*target].push(Implicant::new(*target, mask, value));
            }
            Gate::Note(_) => {}
            other => {
                return Err(Error::circuit(format!(
                    "{other:?} does not belong to a preparation circuit"
                )))
            }
        }
    }
    Ok((hadamards, per_bit))
}

/// Minimizes every colour bit independently with the round cap `h + w`.
pub fn bec_compress(circuit: &Circuit, layout: GqirLayout) -> Result<(Circuit, BecStats)> {
    bec_compress_with(circuit, layout, layout.location_bits())
}

/// As [`bec_compress`] with an explicit round cap.
pub fn bec_compress_with(
    circuit: &Circuit,
    layout: GqirLayout,
    max_rounds: usize,
) -> Result<(Circuit, BecStats)> {
    if layout.location_bits() > 62 {
        return Err(Error::domain("location register too wide"));
    }
    if circuit.qubits() > layout.qubits() {
        return Err(Error::circuit("circuit is wider than the layout"));
    }
    let (hadamards, per_bit) = decompose(circuit, &layout)?;
    let gates_before = per_bit.iter().map(|p| p.len() as u64).sum();
    let lb = layout.location_bits();
    let results: Vec<BitResult> = per_bit
        .into_par_iter()
        .map(|pool| minimize_bit(pool, lb, max_rounds))
        .collect();

    let mut out = Circuit::new(layout.qubits());
    for h in hadamards {
        out.push(h)?;
    }
    let mut stats = BecStats {
        round_bound: lb,
        converged: true,
        gates_before,
        ..BecStats::default()
    };
    for r in &results {
        stats.rounds = stats.rounds.max(r.rounds);
        stats.converged &= r.converged;
        stats.comparisons += r.comparisons;
        for t in &r.terms {
            out.push(t.to_gate(&layout))?;
        }
        stats.gates_after += r.terms.len() as u64;
    }
    Ok((out, stats))
}

pub fn bec_cost(stats: &BecStats, compressed: &Circuit, layout: GqirLayout) -> BecCost {
    let t = compressed.tally();
    let lb = layout.location_bits() as u32;
    BecCost {
        comparisons: stats.comparisons,
        comparison_bound: u128::from(lb) * layout.color_bits as u128 * (1u128 << (2 * lb)),
        c_i: t.mcx_total(),
        hadamards: t.hadamard,
    }
}

/// Terms of a circuit's location-controlled NOTs, grouped by colour bit.
pub fn implicants(circuit: &Circuit, layout: GqirLayout) -> Result<Vec<Vec<Implicant>>> {
    Ok(decompose(circuit, &layout)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gqir::{evaluate, prepare_values};

    fn plane_circuit(layout: GqirLayout, ones: &[usize]) -> Circuit {
        let mut values = vec![0u64; layout.locations()];
        for &l in ones {
            values[l] = 1;
        }
        prepare_values(layout, &values).unwrap()
    }

    #[test]
    fn three_minterm_plane_needs_two_gates() {
        let layout = GqirLayout::new(1, 1, 1);
        let c = plane_circuit(layout, &[0b01, 0b10, 0b11]);
        let (out, stats) = bec_compress(&c, layout).unwrap();
        assert_eq!(stats.gates_before, 3);
        assert_eq!(stats.gates_after, 2);
        let terms = &implicants(&out, layout).unwrap()[0];
        // 01+11 -> x=1 ; 10 stays
        assert_eq!(
            terms,
            &vec![Implicant::new(0, 0b01, 0b01), Implicant::new(0, 0b11, 0b10)]
        );
        assert_eq!(evaluate(&out, layout).unwrap(), evaluate(&c, layout).unwrap());
    }

    #[test]
    fn full_plane_collapses_to_uncontrolled_not() {
        let layout = GqirLayout::new(1, 1, 1);
        let (out, stats) = bec_compress(&plane_circuit(layout, &[0, 1, 2, 3]), layout).unwrap();
        assert_eq!(stats.gates_after, 1);
        assert_eq!(
            out.gates().last(),
            Some(&Gate::Mcx {
                controls: vec![],
                target: 0
            })
        );
    }

    #[test]
    fn empty_plane_costs_nothing() {
        let layout = GqirLayout::new(8, 3, 3);
        let c = prepare_values(layout, &[0; 64]).unwrap();
        let (out, stats) = bec_compress(&c, layout).unwrap();
        let cost = bec_cost(&stats, &out, layout);
        assert_eq!((cost.c_i, cost.hadamards, cost.comparisons), (0, 6, 0));
        assert_eq!(cost.comparison_bound, 6 * 8 * (1 << 12));
    }

    #[test]
    fn duplicate_terms_cancel() {
        let layout = GqirLayout::new(1, 1, 1);
        let mut c = plane_circuit(layout, &[1, 2]);
        c.push(Implicant::minterm(0, 2, 1).to_gate(&layout)).unwrap();
        let (out, _) = bec_compress(&c, layout).unwrap();
        assert_eq!(out.tally().mcx_total(), 1);
        assert_eq!(evaluate(&out, layout).unwrap().values(), vec![0, 0, 1, 0]);
    }

    #[test]
    fn rejects_non_preparation_gates() {
        let layout = GqirLayout::new(2, 1, 1);
        let mut c = plane_circuit(layout, &[1]);
        c.push(Gate::Mcx {
            controls: vec![Control::on(0)],
            target: 1,
        })
        .unwrap();
        assert!(bec_compress(&c, layout).is_err());
    }

    #[test]
    fn expansion_sizes() {
        let t = Implicant::new(0, 0b1010, 0b1000);
        assert_eq!(t.expand(4), vec![0b1000, 0b1001, 0b1100, 0b1101]);
        assert_eq!(t.dont_cares(4), 2);
        assert!(t.covers(0b1101) && !t.covers(0b0101));
    }
}
