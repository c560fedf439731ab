//! TNTP transportation-network parsing.
//!
//! The text format carries metadata lines `<KEY> value` terminated by
//! `<END OF METADATA>`, `~`-prefixed comments, a link table with columns
//! `init_node term_node capacity length free_flow_time b power speed toll
//! type`, and a trips file of `Origin` blocks with `dest : flow;` entries.
//! Zones are the nodes `1..=n_zones`; nodes below `first_thru_node` cannot
//! appear in the interior of a path.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TntpError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("link row '{row}' is missing column {column}")]
    MissingColumn { row: String, column: &'static str },
    #[error("unknown zone {zone} (the network declares {n_zones})")]
    UnknownZone { zone: usize, n_zones: usize },
    #[error("no path between zones {from} and {to}")]
    DisconnectedZones { from: usize, to: usize },
}

/// A directed road link with its free-flow travel time.
#[derive(Debug, Clone, Copy)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub free_flow_time: f64,
}

/// Parsed road network plus the origin-destination trip table.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    pub n_zones: usize,
    pub n_nodes: usize,
    /// Nodes with id below this cannot be interior points of a path.
    pub first_thru_node: usize,
    pub links: Vec<Link>,
    /// Directed demand per (origin, destination), 1-based zone ids.
    pub trips: BTreeMap<(usize, usize), f64>,
}

impl RoadNetwork {
    /// Symmetric demand `d(i,j) + d(j,i)` between two zones.
    pub fn symmetric_demand(&self, i: usize, j: usize) -> f64 {
        self.trips.get(&(i, j)).copied().unwrap_or(0.0)
            + self.trips.get(&(j, i)).copied().unwrap_or(0.0)
    }
}

/// Parse the network and trips files.
pub fn parse_tntp(net_file: &Path, trips_file: &Path) -> Result<RoadNetwork, TntpError> {
    let net_text = fs::read_to_string(net_file)?;
    let trips_text = fs::read_to_string(trips_file)?;
    parse_tntp_strings(&net_text, &trips_text)
}

pub fn parse_tntp_strings(net: &str, trips: &str) -> Result<RoadNetwork, TntpError> {
    let (net_meta, net_body) = split_metadata(net)?;
    let n_zones = meta_usize(&net_meta, "NUMBER OF ZONES")?;
    let n_nodes = meta_usize(&net_meta, "NUMBER OF NODES")?;
    let first_thru_node = meta_usize(&net_meta, "FIRST THRU NODE").unwrap_or(1);

    let mut links = Vec::new();
    for line in net_body.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('~') || line.starts_with('<') {
            continue;
        }
        let tokens: Vec<&str> =
            line.trim_end_matches(';').split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let from: usize = tokens
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| TntpError::MissingColumn { row: line.into(), column: "init_node" })?;
        let to: usize = tokens
            .get(1)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| TntpError::MissingColumn { row: line.into(), column: "term_node" })?;
        let free_flow_time: f64 = tokens
            .get(4)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| TntpError::MissingColumn { row: line.into(), column: "free_flow_time" })?;
        if !(free_flow_time > 0.0) {
            return Err(TntpError::MissingColumn { row: line.into(), column: "free_flow_time" });
        }
        links.push(Link { from, to, free_flow_time });
    }

    let (trips_meta, trips_body) = split_metadata(trips)?;
    let trips_zones = meta_usize(&trips_meta, "NUMBER OF ZONES").unwrap_or(n_zones);
    if trips_zones != n_zones {
        return Err(TntpError::MalformedHeader(format!(
            "zone count mismatch: network {n_zones}, trips {trips_zones}"
        )));
    }

    let mut table = BTreeMap::new();
    let mut origin: Option<usize> = None;
    for line in trips_body.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('~') || line.starts_with('<') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Origin") {
            let zone: usize = rest.trim().parse().map_err(|_| {
                TntpError::MalformedHeader(format!("bad origin line '{line}'"))
            })?;
            if zone == 0 || zone > n_zones {
                return Err(TntpError::UnknownZone { zone, n_zones });
            }
            origin = Some(zone);
            continue;
        }
        let Some(from) = origin else {
            return Err(TntpError::MalformedHeader(format!(
                "trip entry before any Origin block: '{line}'"
            )));
        };
        for entry in line.split(';') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let Some((dest_str, value_str)) = entry.split_once(':') else {
                return Err(TntpError::MalformedHeader(format!("bad trip entry '{entry}'")));
            };
            let dest: usize = dest_str.trim().parse().map_err(|_| {
                TntpError::MalformedHeader(format!("bad destination in '{entry}'"))
            })?;
            let value: f64 = value_str.trim().parse().map_err(|_| {
                TntpError::MalformedHeader(format!("bad flow value in '{entry}'"))
            })?;
            if dest == 0 || dest > n_zones {
                return Err(TntpError::UnknownZone { zone: dest, n_zones });
            }
            if value != 0.0 {
                *table.entry((from, dest)).or_insert(0.0) += value;
            }
        }
    }

    Ok(RoadNetwork { n_zones, n_nodes, first_thru_node, links, trips: table })
}

/// Split a TNTP file into metadata pairs and the body after
/// `<END OF METADATA>`. Files without the terminator are treated as all-body.
fn split_metadata(text: &str) -> Result<(BTreeMap<String, String>, &str), TntpError> {
    let mut meta = BTreeMap::new();
    if let Some(end) = text.find("<END OF METADATA>") {
        let head = &text[..end];
        for line in head.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('~') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('<') {
                let Some((key, value)) = rest.split_once('>') else {
                    return Err(TntpError::MalformedHeader(line.into()));
                };
                meta.insert(key.trim().to_uppercase(), value.trim().to_string());
            }
        }
        let body_start = end + "<END OF METADATA>".len();
        Ok((meta, &text[body_start..]))
    } else {
        Ok((meta, text))
    }
}

fn meta_usize(meta: &BTreeMap<String, String>, key: &str) -> Result<usize, TntpError> {
    meta.get(key)
        .ok_or_else(|| TntpError::MalformedHeader(format!("missing <{key}>")))?
        .parse()
        .map_err(|_| TntpError::MalformedHeader(format!("non-numeric <{key}>")))
}

/// Dijkstra from `source` over the directed links, honoring the
/// first-thru-node rule. Returns `f64::INFINITY` for unreachable nodes.
pub fn dijkstra(rn: &RoadNetwork, source: usize) -> Vec<f64> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> Ordering {
            // Min-heap by distance.
            other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal)
        }
    }

    let n = rn.n_nodes;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 1];
    for link in &rn.links {
        if link.from <= n && link.to <= n {
            adj[link.from].push((link.to, link.free_flow_time));
        }
    }

    let mut dist = vec![f64::INFINITY; n + 1];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Item(0.0, source));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        // Centroid nodes terminate paths unless they are the source.
        if v != source && v < rn.first_thru_node {
            continue;
        }
        for &(w, t) in &adj[v] {
            let nd = d + t;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI_NET: &str = "\
<NUMBER OF ZONES> 2
<NUMBER OF NODES> 2
<FIRST THRU NODE> 1
<END OF METADATA>
~ init term capacity length fftime b power speed toll type ;
1 2 100.0 1.0 3.5 0.15 4 60 0 1 ;
2 1 100.0 1.0 3.5 0.15 4 60 0 1 ;
";

    const MINI_TRIPS: &str = "\
<NUMBER OF ZONES> 2
<TOTAL OD FLOW> 10.0
<END OF METADATA>
Origin 1
 2 : 10.0;
Origin 2
";

    #[test]
    fn minimal_fixture_parses() {
        let rn = parse_tntp_strings(MINI_NET, MINI_TRIPS).unwrap();
        assert_eq!(rn.n_zones, 2);
        assert_eq!(rn.links.len(), 2);
        assert_eq!(rn.links[0].free_flow_time, 3.5);
        assert_eq!(rn.symmetric_demand(1, 2), 10.0);
    }

    #[test]
    fn empty_origin_block_is_fine() {
        let rn = parse_tntp_strings(MINI_NET, MINI_TRIPS).unwrap();
        assert_eq!(rn.symmetric_demand(2, 2), 0.0);
    }

    #[test]
    fn missing_column_is_reported() {
        let bad = "\
<NUMBER OF ZONES> 1
<NUMBER OF NODES> 2
<END OF METADATA>
1 2 100.0 ;
";
        match parse_tntp_strings(bad, MINI_TRIPS) {
            Err(TntpError::MissingColumn { column, .. }) => {
                assert_eq!(column, "free_flow_time")
            }
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn unknown_zone_is_reported() {
        let bad_trips = "\
<NUMBER OF ZONES> 2
<END OF METADATA>
Origin 7
 1 : 3.0;
";
        assert!(matches!(
            parse_tntp_strings(MINI_NET, bad_trips),
            Err(TntpError::UnknownZone { zone: 7, .. })
        ));
    }

    #[test]
    fn malformed_header_is_reported() {
        let bad = "<NUMBER OF ZONES 2\n<END OF METADATA>\n";
        assert!(matches!(
            parse_tntp_strings(bad, MINI_TRIPS),
            Err(TntpError::MalformedHeader(_))
        ));
    }

    #[test]
    fn dijkstra_respects_thru_rule() {
        // 3 nodes: 1 -> 2 -> 3 and 1 -> 3 direct (long). Node 2 is a centroid
        // (first_thru_node = 3), so the path through it is forbidden.
        let rn = RoadNetwork {
            n_zones: 3,
            n_nodes: 3,
            first_thru_node: 3,
            links: vec![
                Link { from: 1, to: 2, free_flow_time: 1.0 },
                Link { from: 2, to: 3, free_flow_time: 1.0 },
                Link { from: 1, to: 3, free_flow_time: 5.0 },
            ],
            trips: BTreeMap::new(),
        };
        let dist = dijkstra(&rn, 1);
        assert_eq!(dist[2], 1.0);
        assert_eq!(dist[3], 5.0); // not 2.0: cannot pass through node 2
    }
}
