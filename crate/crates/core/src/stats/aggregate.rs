use std::collections::BTreeMap;

/// Column means of one group; absent values are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMean<K> {
    pub key: K,
    pub rows: usize,
    pub means: Vec<Option<f64>>,
}

/// Arithmetic mean of every column per key, in ascending key order.
pub fn aggregate_groups<K: Ord + Clone>(records: &[(K, Vec<Option<f64>>)]) -> Vec<GroupMean<K>> {
    let width = records.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut acc: BTreeMap<K, (usize, Vec<(f64, usize)>)> = BTreeMap::new();
    for (key, values) in records {
        let entry = acc
            .entry(key.clone())
            .or_insert_with(|| (0, vec![(0.0, 0); width]));
        entry.0 += 1;
        for (slot, v) in entry.1.iter_mut().zip(values) {
            if let Some(v) = v {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    acc.into_iter()
        .map(|(key, (rows, sums))| GroupMean {
            key,
            rows,
            means: sums
                .into_iter()
                .map(|(s, c)| (c > 0).then(|| s / c as f64))
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record_is_itself() {
        let out = aggregate_groups(&[((0, 1), vec![Some(2.5), None])]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].means, vec![Some(2.5), None]);
    }

    #[test]
    fn two_values_average() {
        let out = aggregate_groups(&[("g", vec![Some(1.0)]), ("g", vec![Some(3.0)])]);
        assert_eq!(out[0].means, vec![Some(2.0)]);
        assert_eq!(out[0].rows, 2);
    }
}
