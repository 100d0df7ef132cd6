//! Fronthaul graph: RU-router, router-router and router-DU links.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{place_rus_grid, NetworkArea, Point};

/// Router-router links are undirected and stored once with the smaller index
/// first; flows may use both directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FronthaulGraph {
    pub num_rus: usize,
    pub num_routers: usize,
    pub num_dus: usize,
    /// `(l, q)` pairs.
    pub ru_router: Vec<(usize, usize)>,
    /// `(q, q')` pairs with `q < q'`.
    pub router_router: Vec<(usize, usize)>,
    /// `(q, n)` pairs.
    pub router_du: Vec<(usize, usize)>,
}

impl FronthaulGraph {
    /// Sorts and deduplicates the edge lists, then checks indices and
    /// RU-to-DU connectivity.
    pub fn new(
        num_rus: usize,
        num_routers: usize,
        num_dus: usize,
        ru_router: Vec<(usize, usize)>,
        router_router: Vec<(usize, usize)>,
        router_du: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let canon = |v: Vec<(usize, usize)>| v.into_iter().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>();
        let rr: Vec<(usize, usize)> = router_router.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        let g = FronthaulGraph {
            num_rus,
            num_routers,
            num_dus,
            ru_router: canon(ru_router),
            router_router: canon(rr),
            router_du: canon(router_du),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("fronthaul topology: {msg}")));
        if self.num_rus == 0 || self.num_routers == 0 || self.num_dus == 0 {
            return bad("RU, router and DU counts must be positive".into());
        }
        for &(l, q) in &self.ru_router {
            if l >= self.num_rus || q >= self.num_routers {
                return bad(format!("RU-router link ({l}, {q}) out of range"));
            }
        }
        for &(a, b) in &self.router_router {
            if a >= self.num_routers || b >= self.num_routers || a == b {
                return bad(format!("invalid router-router link ({a}, {b})"));
            }
        }
        for &(q, n) in &self.router_du {
            if q >= self.num_routers || n >= self.num_dus {
                return bad(format!("router-DU link ({q}, {n}) out of range"));
            }
        }
        for l in 0..self.num_rus {
            if self.routers_of_ru(l).next().is_none() {
                return bad(format!("RU {l} has no router link"));
            }
        }
        for n in 0..self.num_dus {
            if self.routers_of_du(n).next().is_none() {
                return bad(format!("DU {n} has no router link"));
            }
        }
        let comp = self.router_components();
        for l in 0..self.num_rus {
            for n in 0..self.num_dus {
                if !self.connected(l, n, &comp) {
                    return bad(format!("RU {l} cannot reach DU {n}"));
                }
            }
        }
        Ok(())
    }

    pub fn routers_of_ru(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        self.ru_router.iter().filter(move |e| e.0 == l).map(|e| e.1)
    }

    pub fn routers_of_du(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.router_du.iter().filter(move |e| e.1 == n).map(|e| e.0)
    }

    /// Connected-component label of every router.
    pub fn router_components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_routers];
        for s in 0..self.num_routers {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = s;
            let mut queue = VecDeque::from([s]);
            while let Some(q) = queue.pop_front() {
                for &(a, b) in &self.router_router {
                    let next = if a == q {
                        b
                    } else if b == q {
                        a
                    } else {
                        continue;
                    };
                    if label[next] == usize::MAX {
                        label[next] = s;
                        queue.push_back(next);
                    }
                }
            }
        }
        label
    }

    /// Whether RU `l` reaches DU `n`, given router component labels.
    pub fn connected(&self, l: usize, n: usize, components: &[usize]) -> bool {
        self.routers_of_ru(l).any(|q| self.routers_of_du(n).any(|p| components[q] == components[p]))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let g: FronthaulGraph = toml::from_str(text)?;
        FronthaulGraph::new(g.num_rus, g.num_routers, g.num_dus, g.ru_router, g.router_router, g.router_du)
    }

    pub fn load(path: &Path) -> Result<Self> {
        FronthaulGraph::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("topology serializes")
    }
}

/// Near-square grid shape `(rows, cols)` with `rows <= cols`.
fn grid_shape(count: usize) -> (usize, usize) {
    let rows = (1..=count).filter(|r| count.is_multiple_of(*r) && r * r <= count).max().unwrap_or(1);
    (rows, count / rows)
}

/// Router positions on a uniform grid over the area.
pub fn default_router_positions(num_routers: usize, area: &NetworkArea) -> Result<Vec<Point>> {
    let (rows, cols) = grid_shape(num_routers);
    place_rus_grid(num_routers, rows, cols, area)
}

/// Default topology: each RU links to its two nearest routers (torus
/// distance, lower index on ties), routers form a ring, and DU `n` links to
/// routers `2n mod Q` and `2n + 1 mod Q`.
pub fn default_topology(
    rus: &[Point],
    num_routers: usize,
    num_dus: usize,
    area: &NetworkArea,
) -> Result<FronthaulGraph> {
    let routers = default_router_positions(num_routers, area)?;
    let mut ru_router = Vec::new();
    for (l, &p) in rus.iter().enumerate() {
        let mut order: Vec<usize> = (0..num_routers).collect();
        order.sort_by(|&a, &b| area.distance(p, routers[a]).total_cmp(&area.distance(p, routers[b])).then(a.cmp(&b)));
        ru_router.extend(order.into_iter().take(2).map(|q| (l, q)));
    }
    let router_router = match num_routers {
        1 => Vec::new(),
        2 => vec![(0, 1)],
        q => (0..q).map(|i| (i, (i + 1) % q)).collect(),
    };
    let router_du = (0..num_dus).flat_map(|n| [((2 * n) % num_routers, n), ((2 * n + 1) % num_routers, n)]).collect();
    FronthaulGraph::new(rus.len(), num_routers, num_dus, ru_router, router_router, router_du)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_rus() -> (Vec<Point>, NetworkArea) {
        let area = NetworkArea::new(200.0, 200.0, true).unwrap();
        (place_rus_grid(20, 4, 5, &area).unwrap(), area)
    }

    #[test]
    fn default_shape() {
        let (rus, area) = paper_rus();
        let g = default_topology(&rus, 5, 4, &area).unwrap();
        assert_eq!(g.ru_router.len(), 40);
        assert_eq!(g.router_router, vec![(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(g.router_du, vec![(0, 0), (0, 2), (1, 0), (1, 3), (2, 1), (2, 3), (3, 1), (4, 2)]);
        let routers = default_router_positions(5, &area).unwrap();
        assert_eq!(routers[0], Point::new(20.0, 100.0));
        assert_eq!(routers[4], Point::new(180.0, 100.0));
    }

    #[test]
    fn toml_round_trip() {
        let (rus, area) = paper_rus();
        let g = default_topology(&rus, 5, 4, &area).unwrap();
        assert_eq!(FronthaulGraph::from_toml_str(&g.to_toml_string()).unwrap(), g);
    }

    #[test]
    fn rejects_disconnected() {
        let err = FronthaulGraph::new(1, 2, 1, vec![(0, 0)], vec![], vec![(1, 0)]);
        assert!(err.is_err());
        let err = FronthaulGraph::new(2, 1, 1, vec![(0, 0)], vec![], vec![(0, 0)]);
        assert!(err.is_err());
    }
}
