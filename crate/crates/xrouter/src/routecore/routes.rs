//! Cluster → backend endpoint mapping with per-cluster round-robin.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::RouteError;

#[derive(Debug, Serialize, Deserialize)]
struct RouteFile {
    clusters: BTreeMap<String, Vec<String>>,
}

/// Maps each cluster id to its backend endpoints; lookups rotate through a
/// cluster's endpoints round-robin. Counters are atomic, so a shared table
/// serves concurrent sessions without locking.
#[derive(Debug)]
pub struct RouteTable {
    entries: BTreeMap<usize, Vec<String>>,
    counters: BTreeMap<usize, AtomicU64>,
}

impl RouteTable {
    pub fn new(entries: BTreeMap<usize, Vec<String>>) -> Result<RouteTable, RouteError> {
        for (cluster, endpoints) in &entries {
            if endpoints.is_empty() {
                return Err(RouteError::InvalidRoutes(format!("cluster {cluster} has no endpoints")));
            }
            for ep in endpoints {
                validate_endpoint(ep)?;
            }
        }
        if entries.is_empty() {
            return Err(RouteError::InvalidRoutes("no clusters defined".into()));
        }
        let counters = entries.keys().map(|&c| (c, AtomicU64::new(0))).collect();
        Ok(RouteTable { entries, counters })
    }

    pub fn load(path: &Path) -> Result<RouteTable, RouteError> {
        let text = std::fs::read_to_string(path)?;
        let file: RouteFile =
            serde_json::from_str(&text).map_err(|e| RouteError::InvalidRoutes(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (key, endpoints) in file.clusters {
            let cluster: usize = key
                .parse()
                .map_err(|_| RouteError::InvalidRoutes(format!("bad cluster key {key:?}")))?;
            entries.insert(cluster, endpoints);
        }
        RouteTable::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<(), RouteError> {
        let clusters: BTreeMap<String, Vec<String>> =
            self.entries.iter().map(|(c, e)| (c.to_string(), e.clone())).collect();
        let text = serde_json::to_string_pretty(&RouteFile { clusters }).expect("serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    /// The next endpoint for `cluster` in per-cluster round-robin order.
    pub fn route_lookup(&self, cluster: usize) -> Result<&str, RouteError> {
        let endpoints =
            self.entries.get(&cluster).ok_or(RouteError::UnknownCluster(cluster))?;
        let n = self.counters[&cluster].fetch_add(1, Ordering::Relaxed);
        Ok(&endpoints[(n as usize) % endpoints.len()])
    }

    /// If the table has exactly one cluster, requests bypass classification
    /// and use it as a constant route.
    pub fn single_cluster(&self) -> Option<usize> {
        if self.entries.len() == 1 {
            self.entries.keys().next().copied()
        } else {
            None
        }
    }

    pub fn clusters(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn endpoints(&self, cluster: usize) -> Option<&[String]> {
        self.entries.get(&cluster).map(Vec::as_slice)
    }
}

fn validate_endpoint(ep: &str) -> Result<(), RouteError> {
    let ok = match ep.rsplit_once(':') {
        Some((host, port)) => !host.is_empty() && port.parse::<u16>().is_ok(),
        None => false,
    };
    if ok {
        Ok(())
    } else {
        Err(RouteError::InvalidRoutes(format!("malformed endpoint {ep:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(spec: &[(usize, &[&str])]) -> RouteTable {
        let entries = spec
            .iter()
            .map(|(c, eps)| (*c, eps.iter().map(|s| s.to_string()).collect()))
            .collect();
        RouteTable::new(entries).unwrap()
    }

    #[test]
    fn singleton_always_returned() {
        let t = table(&[(3, &["h1:9000"])]);
        for _ in 0..4 {
            assert_eq!(t.route_lookup(3).unwrap(), "h1:9000");
        }
    }

    #[test]
    fn per_cluster_round_robin() {
        let t = table(&[(0, &["e1:1", "e2:2"])]);
        let got: Vec<&str> = (0..4).map(|_| t.route_lookup(0).unwrap()).collect();
        assert_eq!(got, ["e1:1", "e2:2", "e1:1", "e2:2"]);
    }

    #[test]
    fn unknown_cluster() {
        let t = table(&[(0, &["e1:1"])]);
        assert!(matches!(t.route_lookup(9), Err(RouteError::UnknownCluster(9))));
    }

    #[test]
    fn malformed_endpoint_rejected() {
        let entries = [(0usize, vec!["nohost".to_string()])].into_iter().collect();
        assert!(RouteTable::new(entries).is_err());
    }

    #[test]
    fn file_round_trip() {
        let t = table(&[(0, &["a:1", "b:2"]), (1, &["c:3"])]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("routes.json");
        t.save(&path).unwrap();
        let u = RouteTable::load(&path).unwrap();
        assert_eq!(u.endpoints(0).unwrap(), ["a:1", "b:2"]);
        assert_eq!(u.endpoints(1).unwrap(), ["c:3"]);
        assert_eq!(u.single_cluster(), None);
    }
}
