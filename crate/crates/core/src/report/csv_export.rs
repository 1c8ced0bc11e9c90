use std::collections::BTreeMap;

use thiserror::Error;

use super::fmt_f64;
use crate::capacity_tree::TerritoryCluster;
use crate::ingest::{oversize_reason, parse_orders, Caps, IngestError, Order, Schema};

pub const CLUSTER_CSV_HEADER: [&str; 6] = [
    "origin",
    "vol_cbm",
    "weight_ton",
    "partner_longitude",
    "partner_latitude",
    "cluster_id",
];

#[derive(Debug, Error)]
pub enum ReadBackError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
}

fn order_fields(o: &Order) -> [String; 5] {
    [
        o.id.clone(),
        fmt_f64(o.vol_cbm),
        fmt_f64(o.weight_ton),
        fmt_f64(o.lon),
        fmt_f64(o.lat),
    ]
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

/// One row per order, sorted by `(cluster_id, id)`.
pub fn export_clusters_csv(clusters: &[TerritoryCluster]) -> String {
    let mut rows: Vec<(usize, &Order)> = clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |o| (c.cluster_id, o)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CLUSTER_CSV_HEADER).expect("in-memory write");
    for (id, o) in rows {
        let [a, b, c, d, e] = order_fields(o);
        w.write_record([a, b, c, d, e, id.to_string()]).expect("in-memory write");
    }
    finish(w)
}

/// Oversized orders in input order, with the pre-filter reason.
pub fn export_oversized_csv(oversized: &[Order], caps: Caps) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = CLUSTER_CSV_HEADER[..5].to_vec();
    header.push("reason");
    w.write_record(&header).expect("in-memory write");
    for o in oversized {
        let [a, b, c, d, e] = order_fields(o);
        let reason = oversize_reason(o, caps).unwrap_or_default();
        w.write_record([a, b, c, d, e, reason]).expect("in-memory write");
    }
    finish(w)
}

/// Reads a `clusters.csv` export back into `(cluster_id, members)` groups,
/// ordered by cluster id.
pub fn parse_clusters_csv(text: &str) -> Result<Vec<(usize, Vec<Order>)>, ReadBackError> {
    let parsed = parse_orders(text.as_bytes(), &Schema::default(), b',')?;
    if let Some(r) = parsed.rejected.first() {
        return Err(ReadBackError::BadRow {
            row: r.row,
            reason: r.reason.clone(),
        });
    }

    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let id_col = reader
        .headers()
        .map_err(IngestError::from)?
        .iter()
        .position(|h| h == "cluster_id")
        .ok_or_else(|| IngestError::MissingColumn("cluster_id".into()))?;
    let mut groups: BTreeMap<usize, Vec<Order>> = BTreeMap::new();
    for (i, (record, order)) in reader.records().zip(parsed.orders).enumerate() {
        let record = record.map_err(IngestError::from)?;
        let raw = record.get(id_col).unwrap_or("");
        let cluster_id = raw.parse::<usize>().map_err(|_| ReadBackError::BadRow {
            row: i + 1,
            reason: format!("invalid cluster_id {raw:?}"),
        })?;
        groups.entry(cluster_id).or_default().push(order);
    }
    Ok(groups.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity_tree::TreeConfig;

    fn cluster(id: usize, orders: Vec<Order>) -> TerritoryCluster {
        TerritoryCluster::from_members(id, orders, &TreeConfig::new(2.8, Default::default()))
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(
            export_clusters_csv(&[]),
            "origin,vol_cbm,weight_ton,partner_longitude,partner_latitude,cluster_id\n"
        );
    }

    #[test]
    fn rows_sorted_by_cluster_then_id() {
        let clusters = vec![
            cluster(1, vec![Order::new("b", 0.5, 0.1, 106.8, -6.2), Order::new("a", 0.25, 0.1, 106.9, -6.1)]),
            cluster(2, vec![Order::new("0", 1.0, 0.3, 107.0, -6.0)]),
        ];
        let text = export_clusters_csv(&clusters);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[1..],
            [
                "a,0.25,0.1,106.9,-6.1,1",
                "b,0.5,0.1,106.8,-6.2,1",
                "0,1,0.3,107,-6,2"
            ]
        );
    }

    #[test]
    fn round_trip_regroups() {
        let clusters = vec![
            cluster(1, vec![Order::new("x", 0.1 + 0.2, 1.0 / 3.0, 106.123456789, -6.987654321)]),
            cluster(2, vec![Order::new("y", 1e-7, 0.0, -180.0, 90.0), Order::new("z", 2.0, 0.0, 0.0, 0.0)]),
        ];
        let back = parse_clusters_csv(&export_clusters_csv(&clusters)).unwrap();
        let expected: Vec<(usize, Vec<Order>)> = clusters.into_iter().map(|c| (c.cluster_id, c.members)).collect();
        assert_eq!(back, expected);
    }

    #[test]
    fn oversized_has_reason_column() {
        let caps = Caps::default();
        let text = export_oversized_csv(
            &[Order::new("v", 2.8, 0.0, 1.0, 1.0), Order::new("w", 3.0, 2.5, 1.0, 1.0)],
            caps,
        );
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "origin,vol_cbm,weight_ton,partner_longitude,partner_latitude,reason");
        assert_eq!(lines[1], "v,2.8,0,1,1,volume_ge_cap");
        assert_eq!(lines[2], "w,3,2.5,1,1,volume_ge_cap;weight_gt_cap");
    }
}
