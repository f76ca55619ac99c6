//! Degree-bucketed visit-frequency statistics over completed walks.

use std::io::Write;

use crate::error::GraphError;
use crate::graph::Graph;

pub const DEFAULT_BUCKET_WIDTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBucket {
    /// Inclusive upper degree edge: the bucket holds degrees in
    /// `(upper - width, upper]`.
    pub upper: usize,
    /// Mean visit count over vertices in the bucket that appear in walks.
    pub mean_frequency: f64,
    /// Number of distinct vertices in the bucket that appear in walks.
    pub vertices: usize,
}

/// Per-degree-bucket mean visit counts. A visit is an appearance at any
/// sampled walk position (the start slot at position 0 is not a sample).
pub fn degree_frequency_histogram(
    walks: &[Vec<u64>],
    graph: &Graph,
    bucket_width: usize,
) -> Result<Vec<HistogramBucket>, GraphError> {
    assert!(bucket_width > 0);
    let n = graph.vertex_count();
    let mut visits = vec![0u64; n as usize];
    for walk in walks {
        for &v in walk.iter().skip(1) {
            if v >= n {
                return Err(GraphError::VertexOutOfRange(v, n));
            }
            visits[v as usize] += 1;
        }
    }
    let mut totals: Vec<(u64, usize)> = Vec::new();
    for (i, &count) in visits.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let degree = graph.degree(crate::graph::VertexId(i as u64));
        let bucket = degree.div_ceil(bucket_width).max(1);
        if totals.len() < bucket {
            totals.resize(bucket, (0, 0));
        }
        totals[bucket - 1].0 += count;
        totals[bucket - 1].1 += 1;
    }
    Ok(totals
        .into_iter()
        .enumerate()
        .filter(|(_, (_, vertices))| *vertices > 0)
        .map(|(i, (total, vertices))| HistogramBucket {
            upper: (i + 1) * bucket_width,
            mean_frequency: total as f64 / vertices as f64,
            vertices,
        })
        .collect())
}

/// Emit the histogram as `bucket_upper,mean_frequency,vertices` CSV.
pub fn write_histogram_csv<W: Write>(
    mut out: W,
    buckets: &[HistogramBucket],
) -> std::io::Result<()> {
    writeln!(out, "bucket_upper,mean_frequency,vertices")?;
    for b in buckets {
        writeln!(out, "{},{},{}", b.upper, b.mean_frequency, b.vertices)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn single_vertex_five_visits() {
        // vertex 0 has degree 10 and is visited 5 times -> bucket 200 mean 5
        let edges: Vec<(u64, u64, f64)> = (1..=10).map(|v| (0u64, v, 1.0)).collect();
        let g = Graph::from_edges(11, edges);
        let walks = vec![vec![1, 0, 0], vec![2, 0, 0, 0]];
        let h = degree_frequency_histogram(&walks, &g, 200).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].upper, 200);
        assert_eq!(h[0].mean_frequency, 5.0);
        assert_eq!(h[0].vertices, 1);
    }

    #[test]
    fn empty_walks_empty_histogram() {
        let g = Graph::from_edges(2, vec![(0, 1, 1.0)]);
        let h = degree_frequency_histogram(&[], &g, 200).unwrap();
        assert!(h.is_empty());
    }

    #[test]
    fn out_of_range_vertex_rejected() {
        let g = Graph::from_edges(2, vec![(0, 1, 1.0)]);
        assert!(degree_frequency_histogram(&[vec![0, 5]], &g, 200).is_err());
    }

    #[test]
    fn buckets_partition_degrees() {
        // degrees: v0 = 3, v1..v3 = 1..2 with width 2
        let g = Graph::from_edges(4, vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0)]);
        let walks = vec![vec![3, 0, 1, 0, 2]];
        let h = degree_frequency_histogram(&walks, &g, 2).unwrap();
        // degrees: 0 -> 3 (bucket 4), 1 -> 2 (bucket 2), 2 -> 2 (bucket 2)
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].upper, 2);
        assert_eq!(h[0].vertices, 2);
        assert_eq!(h[0].mean_frequency, 1.0);
        assert_eq!(h[1].upper, 4);
        assert_eq!(h[1].mean_frequency, 2.0);
    }

    #[test]
    fn csv_output_shape() {
        let buckets = vec![HistogramBucket {
            upper: 200,
            mean_frequency: 1.5,
            vertices: 4,
        }];
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &buckets).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "bucket_upper,mean_frequency,vertices\n200,1.5,4\n");
    }
}
