use serde_json::{json, Value};

use crate::capacity_tree::TerritoryCluster;
use crate::ingest::Order;

fn point(lon: f64, lat: f64, properties: Value) -> Value {
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": [lon, lat] },
        "properties": properties,
    })
}

/// FeatureCollection with one Point per order (ordered like the CSV
/// export) followed by one centroid Point per cluster. Positions are
/// `[lon, lat]`.
pub fn export_geojson(clusters: &[TerritoryCluster]) -> String {
    let mut members: Vec<(usize, &Order)> = clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |o| (c.cluster_id, o)))
        .collect();
    members.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));

    let mut features: Vec<Value> = members
        .into_iter()
        .map(|(cluster_id, o)| {
            point(
                o.lon,
                o.lat,
                json!({
                    "kind": "order",
                    "id": o.id,
                    "cluster_id": cluster_id,
                    "vol_cbm": o.vol_cbm,
                    "weight_ton": o.weight_ton,
                }),
            )
        })
        .collect();

    let mut ordered: Vec<&TerritoryCluster> = clusters.iter().collect();
    ordered.sort_by_key(|c| c.cluster_id);
    for c in ordered {
        if let Some((lon, lat)) = c.geographic_centroid() {
            features.push(point(
                lon,
                lat,
                json!({
                    "kind": "centroid",
                    "cluster_id": c.cluster_id,
                    "size": c.members.len(),
                    "total_vol": c.total_vol,
                    "total_weight": c.total_weight,
                }),
            ));
        }
    }

    let collection = json!({ "type": "FeatureCollection", "features": features });
    let mut text = serde_json::to_string_pretty(&collection).expect("json values serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity_tree::TreeConfig;

    /// Structural GeoJSON check for point collections.
    fn validate(doc: &Value) -> Result<usize, String> {
        if doc["type"] != "FeatureCollection" {
            return Err("root type".into());
        }
        let features = doc["features"].as_array().ok_or("features not an array")?;
        for f in features {
            if f["type"] != "Feature" {
                return Err("feature type".into());
            }
            if f["geometry"]["type"] != "Point" {
                return Err("geometry type".into());
            }
            let pos = f["geometry"]["coordinates"].as_array().ok_or("coordinates")?;
            if pos.len() != 2 || !pos.iter().all(|v| v.as_f64().is_some_and(f64::is_finite)) {
                return Err("position must be two finite numbers".into());
            }
            if !f["properties"].is_object() {
                return Err("properties".into());
            }
        }
        Ok(features.len())
    }

    #[test]
    fn empty_collection() {
        let doc: Value = serde_json::from_str(&export_geojson(&[])).unwrap();
        assert_eq!(validate(&doc), Ok(0));
    }

    #[test]
    fn single_order_gives_member_and_centroid() {
        let c = TerritoryCluster::from_members(
            1,
            vec![Order::new("a", 1.0, 0.5, 106.8, -6.2)],
            &TreeConfig::new(2.8, Default::default()),
        );
        let doc: Value = serde_json::from_str(&export_geojson(&[c])).unwrap();
        assert_eq!(validate(&doc), Ok(2));
        let f = doc["features"].as_array().unwrap();
        assert_eq!(f[0]["geometry"]["coordinates"], json!([106.8, -6.2]));
        assert_eq!(f[1]["geometry"]["coordinates"], json!([106.8, -6.2]));
        assert_eq!(f[0]["properties"]["cluster_id"], 1);
        assert_eq!(f[1]["properties"]["kind"], "centroid");
    }

    #[test]
    fn many_clusters_validate() {
        let cfg = TreeConfig::new(2.8, Default::default());
        let clusters: Vec<_> = (1..=5)
            .map(|i| {
                let members = (0..i).map(|j| Order::new(format!("{i}-{j}"), 0.1, 0.1, j as f64, i as f64)).collect();
                TerritoryCluster::from_members(i, members, &cfg)
            })
            .collect();
        let doc: Value = serde_json::from_str(&export_geojson(&clusters)).unwrap();
        assert_eq!(validate(&doc), Ok(15 + 5));
    }
}
