use serde::Serialize;

use super::AnalyticsError;
use crate::address::{Address, Digest};
use crate::evm::DuplicateGroup;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DuplicateRow {
    pub rank: usize,
    pub representative: Address,
    pub token_hash: Digest,
    pub size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DuplicateStats {
    /// The `top_n` largest groups.
    pub top: Vec<DuplicateRow>,
    /// `(rank, size)` over every group.
    pub rank_size: Vec<(usize, usize)>,
}

/// Ranks duplicate groups by size, largest first; equal sizes are ordered by
/// representative address.
pub fn duplicate_stats<'a, I>(groups: I, top_n: usize) -> DuplicateStats
where
    I: IntoIterator<Item = &'a DuplicateGroup>,
{
    let mut sorted: Vec<&DuplicateGroup> = groups.into_iter().collect();
    sorted.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.representative.cmp(&b.representative)));
    let rank_size = sorted.iter().enumerate().map(|(i, g)| (i + 1, g.size())).collect();
    let top = sorted
        .iter()
        .take(top_n)
        .enumerate()
        .map(|(i, g)| DuplicateRow {
            rank: i + 1,
            representative: g.representative,
            token_hash: g.token_hash,
            size: g.size(),
        })
        .collect();
    DuplicateStats { top, rank_size }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TopShare {
    /// Percentage of clusters considered.
    pub top_percent: u32,
    /// Number of clusters that makes up.
    pub clusters: usize,
    /// Percentage of all contracts they hold.
    pub share: f64,
}

impl TopShare {
    pub fn readout(&self) -> String {
        format!("top {}%: {:.1}%", self.top_percent, self.share)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoReport {
    /// Cluster sizes, largest first.
    pub sizes: Vec<usize>,
    /// Cumulative share (percent) after each rank.
    pub cdf: Vec<f64>,
    pub top_1: TopShare,
    pub top_20: TopShare,
}

impl ParetoReport {
    /// Share held by the largest `ceil(n * percent / 100)` clusters (at least
    /// one).
    pub fn top_share(&self, percent: u32) -> TopShare {
        let n = self.sizes.len();
        let k = ((n * percent as usize).div_ceil(100)).clamp(1, n);
        TopShare {
            top_percent: percent,
            clusters: k,
            share: self.cdf[k - 1],
        }
    }
}

pub fn pareto_report(populations: &[usize]) -> Result<ParetoReport, AnalyticsError> {
    if populations.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut sizes = populations.to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut running = 0usize;
    let cdf = sizes
        .iter()
        .map(|&s| {
            running += s;
            running as f64 * 100.0 / total as f64
        })
        .collect();
    let mut report = ParetoReport {
        sizes,
        cdf,
        top_1: TopShare { top_percent: 1, clusters: 0, share: 0.0 },
        top_20: TopShare { top_percent: 20, clusters: 0, share: 0.0 },
    };
    report.top_1 = report.top_share(1);
    report.top_20 = report.top_share(20);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(rep: u64, size: usize) -> DuplicateGroup {
        DuplicateGroup {
            token_hash: Digest([rep as u8; 32]),
            representative: Address::from_low_u64(rep),
            members: (0..size as u64).map(|i| Address::from_low_u64(rep * 100 + i)).collect(),
        }
    }

    #[test]
    fn ranking_with_ties() {
        let groups = [group(4, 3), group(1, 1), group(3, 5), group(2, 3)];
        let s = duplicate_stats(&groups, 10);
        assert_eq!(s.rank_size, vec![(1, 5), (2, 3), (3, 3), (4, 1)]);
        let reps: Vec<_> = s.top.iter().map(|r| r.representative).collect();
        assert_eq!(reps, [3, 2, 4, 1].map(Address::from_low_u64));
        assert_eq!(duplicate_stats(&groups, 2).top.len(), 2);
    }

    #[test]
    fn single_group() {
        let s = duplicate_stats(&[group(1, 7)], 10);
        assert_eq!(s.top.len(), 1);
        assert_eq!(s.top[0].size, 7);
    }

    #[test]
    fn dominant_cluster() {
        let r = pareto_report(&[1, 98, 1]).unwrap();
        assert_eq!(r.sizes, vec![98, 1, 1]);
        assert_eq!(r.top_1.clusters, 1);
        assert_eq!(r.top_1.share, 98.0);
        assert_eq!(*r.cdf.last().unwrap(), 100.0);
    }

    #[test]
    fn uniform_is_linear() {
        let r = pareto_report(&[5; 10]).unwrap();
        for (i, v) in r.cdf.iter().enumerate() {
            assert!((v - 10.0 * (i + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(pareto_report(&[]), Err(AnalyticsError::EmptyInput));
    }
}
