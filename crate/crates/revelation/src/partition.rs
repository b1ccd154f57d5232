//! Partitions of a ground state set, the concrete representation of an
//! awareness level, and enumeration of the refinement lattice between two
//! comparable partitions.

use crate::error::{Error, Result};

/// A partition of `{0, .., ground_size - 1}` into nonempty, disjoint blocks.
///
/// Stored in canonical order: each block ascending, blocks sorted by their
/// smallest element. Ordering and hashing operate on that canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Partition {
    ground_size: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(ground_size: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; ground_size];
        let mut canonical: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &s in &block {
                if s >= ground_size {
                    return Err(Error::InvalidPartition(format!(
                        "state index {s} out of range for {ground_size} states"
                    )));
                }
                if seen[s] {
                    return Err(Error::InvalidPartition(format!(
                        "state index {s} appears in two blocks"
                    )));
                }
                seen[s] = true;
            }
            canonical.push(block);
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "state index {missing} is not covered by any block"
            )));
        }
        canonical.sort_unstable();
        Ok(Partition { ground_size, blocks: canonical })
    }

    /// The single-block partition (coarsest awareness).
    pub fn trivial(ground_size: usize) -> Self {
        Partition {
            ground_size,
            blocks: vec![(0..ground_size).collect()],
        }
    }

    /// The all-singletons partition (full awareness).
    pub fn singletons(ground_size: usize) -> Self {
        Partition {
            ground_size,
            blocks: (0..ground_size).map(|s| vec![s]).collect(),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.ground_size
    }

    /// Index of the block containing `state`.
    pub fn block_of(&self, state: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&state).is_ok())
            .expect("state within ground range")
    }

    /// Renders blocks with the given state names, e.g. `{w,v} {u}`.
    pub fn render(&self, names: &[String]) -> String {
        self.blocks
            .iter()
            .map(|b| {
                let inner: Vec<&str> = b.iter().map(|&s| names[s].as_str()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// True iff every block of `fine` lies inside some block of `coarse`; that
/// is, `fine` carries at least the distinctions of `coarse`.
pub fn partition_refines(coarse: &Partition, fine: &Partition) -> Result<bool> {
    if coarse.ground_size != fine.ground_size {
        return Err(Error::GroundMismatch);
    }
    Ok(fine.blocks.iter().all(|fb| {
        let home = coarse.block_of(fb[0]);
        fb.iter().all(|&s| coarse.block_of(s) == home)
    }))
}

/// All partitions `p` with `coarse <= p <= fine` in the refinement order,
/// endpoints included, sorted by block count and then by block encoding.
///
/// The interval factors over the coarse blocks: within each coarse block,
/// the fine blocks it contains may be regrouped freely, and the interval is
/// the product of those regroupings.
pub fn enumerate_partitions_between(coarse: &Partition, fine: &Partition) -> Result<Vec<Partition>> {
    if !partition_refines(coarse, fine)? {
        return Err(Error::Precondition(
            "the second partition must refine the first".into(),
        ));
    }
    // Fine blocks grouped under their coarse block.
    let mut groups: Vec<Vec<&Vec<usize>>> = vec![Vec::new(); coarse.num_blocks()];
    for fb in &fine.blocks {
        groups[coarse.block_of(fb[0])].push(fb);
    }

    // For each coarse block, all ways of regrouping its fine blocks.
    let per_block: Vec<Vec<Vec<Vec<usize>>>> = groups
        .iter()
        .map(|items| {
            set_partitions(items.len())
                .into_iter()
                .map(|grouping| {
                    grouping
                        .into_iter()
                        .map(|cell| {
                            let mut merged: Vec<usize> = cell
                                .into_iter()
                                .flat_map(|i| items[i].iter().copied())
                                .collect();
                            merged.sort_unstable();
                            merged
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut picks = vec![0usize; per_block.len()];
    loop {
        let mut blocks = Vec::new();
        for (g, &pick) in picks.iter().enumerate() {
            blocks.extend(per_block[g][pick].iter().cloned());
        }
        out.push(Partition::new(coarse.ground_size, blocks)?);
        // Odometer over the per-block choices.
        let mut k = 0;
        loop {
            if k == picks.len() {
                out.sort_by(|a, b| {
                    (a.num_blocks(), &a.blocks).cmp(&(b.num_blocks(), &b.blocks))
                });
                return Ok(out);
            }
            picks[k] += 1;
            if picks[k] < per_block[k].len() {
                break;
            }
            picks[k] = 0;
            k += 1;
        }
    }
}

/// All set partitions of `{0, .., n-1}` via restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let num_cells = rgs.iter().copied().max().unwrap() + 1;
        let mut cells = vec![Vec::new(); num_cells];
        for (i, &c) in rgs.iter().enumerate() {
            cells[c].push(i);
        }
        out.push(cells);
        // Next restricted growth string: rgs[i] <= max(rgs[..i]) + 1.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let cap = rgs[..i].iter().copied().max().unwrap() + 1;
            if rgs[i] < cap {
                rgs[i] += 1;
                for r in rgs[i + 1..].iter_mut() {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}
