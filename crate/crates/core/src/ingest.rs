//! Order table ingestion: CSV parsing, per-row validation and the
//! oversized-order pre-filter.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

/// Default volume cap per vehicle, cubic meters.
pub const DEFAULT_VOL_CAP: f64 = 2.8;
/// Default weight cap per vehicle, metric tons.
pub const DEFAULT_WEIGHT_CAP: f64 = 2.0;

/// One sale order with its delivery point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Order {
    pub id: String,
    pub vol_cbm: f64,
    pub weight_ton: f64,
    pub lon: f64,
    pub lat: f64,
}

impl Order {
    pub fn new(id: impl Into<String>, vol_cbm: f64, weight_ton: f64, lon: f64, lat: f64) -> Self {
        Self {
            id: id.into(),
            vol_cbm,
            weight_ton,
            lon,
            lat,
        }
    }

    /// Checks the field invariants, returning the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        for (name, v) in [
            ("volume", self.vol_cbm),
            ("weight", self.weight_ton),
            ("longitude", self.lon),
            ("latitude", self.lat),
        ] {
            if !v.is_finite() {
                return Err(format!("{name} not finite"));
            }
        }
        if self.vol_cbm < 0.0 {
            return Err("volume negative".into());
        }
        if self.weight_ton < 0.0 {
            return Err("weight negative".into());
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err("longitude out of range".into());
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err("latitude out of range".into());
        }
        Ok(())
    }
}

/// Column names for each order field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub id: String,
    pub vol_cbm: String,
    pub weight_ton: String,
    pub lon: String,
    pub lat: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            id: "origin".into(),
            vol_cbm: "vol_cbm".into(),
            weight_ton: "weight_ton".into(),
            lon: "partner_longitude".into(),
            lat: "partner_latitude".into(),
        }
    }
}

/// A data row that failed validation. `row` counts data rows from 1,
/// excluding the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowRejection {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedOrders {
    pub orders: Vec<Order>,
    pub rejected: Vec<RowRejection>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestResult {
    pub eligible: Vec<Order>,
    pub oversized: Vec<Order>,
    pub rejected: Vec<RowRejection>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate order ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("invalid caps: volume cap {vol_cap}, weight cap {weight_cap} (both must be positive)")]
    InvalidCaps { vol_cap: f64, weight_cap: f64 },
    #[error("csv read failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Vehicle limits used by the pre-filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Caps {
    pub vol_cap: f64,
    pub weight_cap: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            vol_cap: DEFAULT_VOL_CAP,
            weight_cap: DEFAULT_WEIGHT_CAP,
        }
    }
}

impl Caps {
    pub fn validate(&self) -> Result<(), IngestError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.vol_cap) && ok(self.weight_cap) {
            Ok(())
        } else {
            Err(IngestError::InvalidCaps {
                vol_cap: self.vol_cap,
                weight_cap: self.weight_cap,
            })
        }
    }
}

/// Parses an order table. Rows that fail to parse or validate are collected
/// as rejections; a missing column or duplicate id aborts the whole parse.
pub fn parse_orders<R: Read>(source: R, schema: &Schema, delimiter: u8) -> Result<ParsedOrders, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let id_col = column(&schema.id)?;
    let vol_col = column(&schema.vol_cbm)?;
    let weight_col = column(&schema.weight_ton)?;
    let lon_col = column(&schema.lon)?;
    let lat_col = column(&schema.lat)?;

    let mut parsed = ParsedOrders::default();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                parsed.rejected.push(RowRejection {
                    row,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let field = |col: usize, name: &str| -> Result<&str, String> {
            record.get(col).ok_or_else(|| format!("missing field `{name}`"))
        };
        let number = |col: usize, name: &str| -> Result<f64, String> {
            let raw = field(col, name)?;
            raw.parse::<f64>()
                .map_err(|_| format!("invalid number in `{name}`: {raw:?}"))
        };
        let order = (|| {
            let order = Order {
                id: field(id_col, &schema.id)?.to_string(),
                vol_cbm: number(vol_col, &schema.vol_cbm)?,
                weight_ton: number(weight_col, &schema.weight_ton)?,
                lon: number(lon_col, &schema.lon)?,
                lat: number(lat_col, &schema.lat)?,
            };
            order.validate()?;
            Ok::<_, String>(order)
        })();
        match order {
            Ok(o) => parsed.orders.push(o),
            Err(reason) => parsed.rejected.push(RowRejection { row, reason }),
        }
    }

    let duplicates = duplicate_ids(&parsed.orders);
    if !duplicates.is_empty() {
        return Err(IngestError::DuplicateIds(duplicates));
    }
    Ok(parsed)
}

fn duplicate_ids(orders: &[Order]) -> Vec<String> {
    let mut seen = HashSet::with_capacity(orders.len());
    let mut dups = BTreeSet::new();
    for o in orders {
        if !seen.insert(o.id.as_str()) {
            dups.insert(o.id.clone());
        }
    }
    dups.into_iter().collect()
}

/// Why an order was eliminated before clustering, or `None` if it is eligible.
/// Volume uses `>=` and weight uses `>`.
pub fn oversize_reason(order: &Order, caps: Caps) -> Option<String> {
    let mut reasons = Vec::new();
    if order.vol_cbm >= caps.vol_cap {
        reasons.push("volume_ge_cap");
    }
    if order.weight_ton > caps.weight_cap {
        reasons.push("weight_gt_cap");
    }
    (!reasons.is_empty()).then(|| reasons.join(";"))
}

/// Splits validated orders into clusterable and oversized, preserving order.
pub fn partition_oversized(orders: Vec<Order>, caps: Caps) -> IngestResult {
    let (oversized, eligible) = orders
        .into_iter()
        .partition(|o| oversize_reason(o, caps).is_some());
    IngestResult {
        eligible,
        oversized,
        rejected: Vec::new(),
    }
}

/// Parse, then pre-filter.
pub fn ingest<R: Read>(source: R, schema: &Schema, delimiter: u8, caps: Caps) -> Result<IngestResult, IngestError> {
    caps.validate()?;
    let parsed = parse_orders(source, schema, delimiter)?;
    let mut result = partition_oversized(parsed.orders, caps);
    result.rejected = parsed.rejected;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "origin,vol_cbm,weight_ton,partner_longitude,partner_latitude\n";

    fn parse(text: &str) -> Result<ParsedOrders, IngestError> {
        parse_orders(text.as_bytes(), &Schema::default(), b',')
    }

    #[test]
    fn parses_a_row() {
        let p = parse(&format!("{HEADER}A,0.5,0.1,106.8,-6.2\n")).unwrap();
        assert_eq!(p.orders, vec![Order::new("A", 0.5, 0.1, 106.8, -6.2)]);
        assert!(p.rejected.is_empty());
    }

    #[test]
    fn rejects_out_of_range_latitude() {
        let p = parse(&format!("{HEADER}A,0.5,0.1,106.8,95\nB,0.5,0.1,106.8,-6.2\n")).unwrap();
        assert_eq!(p.orders.len(), 1);
        assert_eq!(
            p.rejected,
            vec![RowRejection {
                row: 1,
                reason: "latitude out of range".into()
            }]
        );
    }

    #[test]
    fn header_only_is_empty() {
        let p = parse(HEADER).unwrap();
        assert!(p.orders.is_empty());
        assert!(p.rejected.is_empty());
    }

    #[test]
    fn bad_numbers_and_short_rows_are_rejected() {
        let p = parse(&format!("{HEADER}A,abc,0.1,1,1\nB,1,0.1,1\nC,-1,0,1,1\nD,NaN,0,1,1\n")).unwrap();
        assert!(p.orders.is_empty());
        let rows: Vec<_> = p.rejected.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![1, 2, 3, 4]);
        assert!(p.rejected[0].reason.contains("invalid number"));
        assert!(p.rejected[1].reason.contains("missing field"));
        assert_eq!(p.rejected[2].reason, "volume negative");
        assert_eq!(p.rejected[3].reason, "volume not finite");
    }

    #[test]
    fn missing_column_is_fatal() {
        let err = parse("origin,vol_cbm,weight_ton,partner_longitude\nA,1,1,1\n").unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "partner_latitude"));
    }

    #[test]
    fn duplicate_ids_are_fatal() {
        let err = parse(&format!("{HEADER}A,1,1,1,1\nB,1,1,1,1\nA,1,1,1,1\n")).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateIds(ids) if ids == vec!["A".to_string()]));
    }

    #[test]
    fn custom_schema_and_delimiter() {
        let schema = Schema {
            id: "so".into(),
            vol_cbm: "m3".into(),
            weight_ton: "t".into(),
            lon: "x".into(),
            lat: "y".into(),
        };
        let p = parse_orders("y;x;t;m3;so\n-6.2;106.8;0.1;0.5;A\n".as_bytes(), &schema, b';').unwrap();
        assert_eq!(p.orders, vec![Order::new("A", 0.5, 0.1, 106.8, -6.2)]);
    }

    #[test]
    fn prefilter_examples() {
        let caps = Caps::default();
        let o = |v, w| Order::new("x", v, w, 0.0, 0.0);
        assert_eq!(oversize_reason(&o(2.8, 0.1), caps).as_deref(), Some("volume_ge_cap"));
        assert_eq!(oversize_reason(&o(1.0, 2.0), caps), None);
        assert_eq!(oversize_reason(&o(1.0, 2.01), caps).as_deref(), Some("weight_gt_cap"));
        assert_eq!(
            oversize_reason(&o(3.0, 2.5), caps).as_deref(),
            Some("volume_ge_cap;weight_gt_cap")
        );
    }

    #[test]
    fn prefilter_preserves_order() {
        let orders = vec![
            Order::new("a", 1.0, 0.0, 0.0, 0.0),
            Order::new("b", 3.0, 0.0, 0.0, 0.0),
            Order::new("c", 0.0, 0.0, 0.0, 0.0),
            Order::new("d", 0.1, 5.0, 0.0, 0.0),
        ];
        let r = partition_oversized(orders, Caps::default());
        let ids = |v: &[Order]| v.iter().map(|o| o.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&r.eligible), ["a", "c"]);
        assert_eq!(ids(&r.oversized), ["b", "d"]);
    }

    #[test]
    fn caps_must_be_positive() {
        let caps = Caps {
            vol_cap: 0.0,
            weight_cap: 2.0,
        };
        assert!(ingest(HEADER.as_bytes(), &Schema::default(), b',', caps).is_err());
    }

    proptest! {
        #[test]
        fn boundary_sweep(vol_cap in 0.01f64..10.0, weight_cap in 0.01f64..10.0, dv in 0usize..3, dw in 0usize..3) {
            let around = |c: f64, d: usize| [c.next_down(), c, c.next_up()][d];
            let order = Order::new("x", around(vol_cap, dv), around(weight_cap, dw), 0.0, 0.0);
            let caps = Caps { vol_cap, weight_cap };
            let expect_oversized = dv >= 1 || dw == 2;
            prop_assert_eq!(oversize_reason(&order, caps).is_some(), expect_oversized);
        }

        #[test]
        fn every_row_lands_somewhere(rows in prop::collection::vec((0.0f64..4.0, 0.0f64..3.0, -200.0f64..200.0, -100.0f64..100.0), 0..40)) {
            let mut text = String::from(HEADER);
            for (i, (v, w, lon, lat)) in rows.iter().enumerate() {
                text.push_str(&format!("o{i},{v},{w},{lon},{lat}\n"));
            }
            let r = ingest(text.as_bytes(), &Schema::default(), b',', Caps::default()).unwrap();
            prop_assert_eq!(r.eligible.len() + r.oversized.len() + r.rejected.len(), rows.len());
            let eligible: HashSet<_> = r.eligible.iter().map(|o| &o.id).collect();
            prop_assert!(r.oversized.iter().all(|o| !eligible.contains(&o.id)));
        }
    }
}
