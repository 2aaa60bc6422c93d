//! Restriction (projection) decoder for the Z-check detectors of a color-code
//! memory experiment.
//!
//! Detectors are coloured by their face. Two restricted graphs are built,
//! red+green and red+blue, each with a boundary node; every DEM mechanism
//! projects onto at most a few edges of each (hyperedges are split into
//! existing edges).
//!
//! Each restricted graph is lifted on its own. After matching the restricted
//! defects, a second graph is solved whose nodes are the restricted edges plus
//! the detectors of the left-out colour: each mechanism joins its restricted
//! edge(s) to its left-out detectors. The targets are the matched edges and
//! the left-out defects, so the correction is a mechanism set reproducing the
//! full syndrome. Of the two lifts the one with lower weight is returned.

use std::collections::HashMap;

use crate::lattice::Color;

use super::dem::{xor_combine, DetectorErrorModel};
use super::matching::{llr_weight, Matcher, MatchingGraph};
use super::DecodeResult;

/// Restricted-graph edge key: `(u, v)` with `v = None` for the boundary.
type EdgeKey = (usize, Option<usize>);

struct Restricted {
    /// Local node id of each (global) detector, if it takes part.
    local: Vec<Option<usize>>,
    keys: Vec<EdgeKey>,
    index: HashMap<EdgeKey, usize>,
    probability: Vec<f64>,
    graph: Option<MatchingGraph>,
}

impl Restricted {
    fn new(colors: &[Option<Color>], pair: [Color; 2]) -> Self {
        let mut next = 0;
        let local = colors
            .iter()
            .map(|c| match c {
                Some(c) if pair.contains(c) => {
                    next += 1;
                    Some(next - 1)
                }
                _ => None,
            })
            .collect();
        Restricted { local, keys: Vec::new(), index: HashMap::new(), probability: Vec::new(), graph: None }
    }

    fn num_nodes(&self) -> usize {
        self.local.iter().flatten().count()
    }

    fn project(&self, detectors: &[u32]) -> Vec<usize> {
        detectors.iter().filter_map(|&d| self.local[d as usize]).collect()
    }

    fn key(nodes: &[usize]) -> Option<EdgeKey> {
        match *nodes {
            [u] => Some((u, None)),
            [u, v] => Some((u.min(v), Some(u.max(v)))),
            _ => None,
        }
    }

    fn add(&mut self, key: EdgeKey, p: f64) -> usize {
        match self.index.get(&key) {
            Some(&e) => {
                self.probability[e] = xor_combine(self.probability[e], p);
                e
            }
            None => {
                let e = self.keys.len();
                self.index.insert(key, e);
                self.keys.push(key);
                self.probability.push(p);
                e
            }
        }
    }

    /// Split a hyperedge into existing edges: pairs of nodes joined by an
    /// edge, or single nodes with a boundary edge. The cheapest such split
    /// wins; without one the nodes are paired in order (odd one out to the
    /// boundary) and new edges are created.
    fn decompose(&mut self, nodes: &[usize], p: f64) -> Vec<usize> {
        let weight = |k: &EdgeKey| self.index.get(k).map(|&e| llr_weight(self.probability[e]));
        let mut best: Option<(f64, Vec<EdgeKey>)> = None;
        let mut stack = Vec::new();
        fn search(
            rest: &[usize],
            acc: f64,
            stack: &mut Vec<EdgeKey>,
            weight: &dyn Fn(&EdgeKey) -> Option<f64>,
            best: &mut Option<(f64, Vec<EdgeKey>)>,
        ) {
            let Some((&u, tail)) = rest.split_first() else {
                if best.as_ref().map_or(true, |b| acc < b.0) {
                    *best = Some((acc, stack.clone()));
                }
                return;
            };
            let single = (u, None);
            if let Some(w) = weight(&single) {
                stack.push(single);
                search(tail, acc + w, stack, weight, best);
                stack.pop();
            }
            for (i, &v) in tail.iter().enumerate() {
                let k = (u.min(v), Some(u.max(v)));
                if let Some(w) = weight(&k) {
                    let mut rem = tail.to_vec();
                    rem.remove(i);
                    stack.push(k);
                    search(&rem, acc + w, stack, weight, best);
                    stack.pop();
                }
            }
        }
        search(nodes, 0.0, &mut stack, &weight, &mut best);
        let parts = match best {
            Some((_, parts)) => parts,
            None => nodes
                .chunks(2)
                .map(|c| Restricted::key(c).expect("chunk of one or two"))
                .collect(),
        };
        parts.into_iter().map(|k| self.add(k, p)).collect()
    }

    fn finish(&mut self) {
        let edges: Vec<(usize, Option<usize>, f64)> = self
            .keys
            .iter()
            .zip(&self.probability)
            .map(|(&(u, v), &p)| (u, v, llr_weight(p)))
            .collect();
        self.graph = Some(MatchingGraph::new(self.num_nodes(), &edges));
    }

    fn graph(&self) -> &MatchingGraph {
        self.graph.as_ref().expect("finished")
    }
}

/// One restricted graph together with its lift.
struct Pass {
    restricted: Restricted,
    /// Local lift node of each detector of the left-out colour.
    mono: Vec<Option<usize>>,
    lift: MatchingGraph,
    lift_obs: Vec<bool>,
}

impl Pass {
    fn build(restricted: Restricted, mono_color: Color, zdem: &DetectorErrorModel, zcolors: &[Option<Color>], proj: &[Vec<usize>]) -> Pass {
        let n_r = restricted.graph().edges_len();
        let mut next = n_r;
        let mono: Vec<Option<usize>> = zcolors
            .iter()
            .map(|&c| {
                (c == Some(mono_color)).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let mut best: HashMap<EdgeKey, [f64; 2]> = HashMap::new();
        for (m, edges) in zdem.mechanisms.iter().zip(proj) {
            let mut ends = edges.clone();
            ends.extend(m.detectors.iter().filter_map(|&d| mono[d as usize]));
            ends.sort_unstable();
            let mut odd: Vec<usize> = Vec::with_capacity(ends.len());
            for e in ends {
                if odd.last() == Some(&e) {
                    odd.pop();
                } else {
                    odd.push(e);
                }
            }
            let ends = odd;
            let Some(key) = Restricted::key(&ends) else { continue };
            let slot = best.entry(key).or_insert([0.0; 2]);
            let o = m.observable as usize;
            slot[o] = xor_combine(slot[o], m.probability);
        }
        let mut keys: Vec<EdgeKey> = best.keys().copied().collect();
        keys.sort_unstable();
        let mut lift_edges = Vec::with_capacity(keys.len());
        let mut lift_obs = Vec::with_capacity(keys.len());
        for k in keys {
            let [p0, p1] = best[&k];
            let (p, obs) = if p1 > p0 { (p1, true) } else { (p0, false) };
            lift_edges.push((k.0, k.1, llr_weight(p)));
            lift_obs.push(obs);
        }
        let lift = MatchingGraph::new(next, &lift_edges);
        lift_obs.resize(lift.edges_len(), false);
        Pass { restricted, mono, lift, lift_obs }
    }

    fn relabel(&mut self, old_of_new: &[usize], detector_count: usize) {
        let mut local = vec![None; detector_count];
        let mut mono = vec![None; detector_count];
        for (new, &old) in old_of_new.iter().enumerate() {
            local[old] = self.restricted.local[new];
            mono[old] = self.mono[new];
        }
        self.restricted.local = local;
        self.mono = mono;
    }

    fn decode(&self, ws: &mut PassWorkspace, fired: &[usize]) -> DecodeResult {
        let defects: Vec<usize> = fired.iter().filter_map(|&d| self.restricted.local[d]).collect();
        let mut targets = ws.restricted.solve(&defects);
        targets.extend(fired.iter().filter_map(|&d| self.mono[d]));
        let mut flip = false;
        let mut weight = 0.0;
        for e in ws.lift.solve(&targets) {
            flip ^= self.lift_obs[e];
            weight += self.lift.weight(e);
        }
        DecodeResult { predicted_flip: flip, weight }
    }
}

struct PassWorkspace {
    restricted: Matcher,
    lift: Matcher,
}

/// Decoder for one detector error model; immutable and shareable.
pub struct RestrictionDecoder {
    colors: Vec<Option<Color>>,
    passes: [Pass; 2],
}

/// Per-thread solver state.
pub struct Workspace {
    passes: Vec<PassWorkspace>,
}

impl RestrictionDecoder {
    /// `colors[k]` is the face colour of detector `k`, or `None` for
    /// detectors the decoder should ignore (X-check detectors).
    pub fn new(dem: &DetectorErrorModel, colors: &[Option<Color>]) -> Self {
        assert_eq!(colors.len(), dem.detector_count, "one colour entry per detector");
        let keep: Vec<bool> = colors.iter().map(Option::is_some).collect();
        let (zdem, old_of_new) = dem.restrict(&keep);
        let zcolors: Vec<Option<Color>> = old_of_new.iter().map(|&k| colors[k]).collect();

        let pairs = [([Color::Red, Color::Green], Color::Blue), ([Color::Red, Color::Blue], Color::Green)];
        let passes = pairs.map(|(pair, mono)| {
            let mut r = Restricted::new(&zcolors, pair);
            // graphlike projections first, so hyperedges can lean on them
            let mut proj: Vec<Option<Vec<usize>>> = vec![None; zdem.mechanisms.len()];
            for (i, m) in zdem.mechanisms.iter().enumerate() {
                let nodes = r.project(&m.detectors);
                if let Some(k) = Restricted::key(&nodes) {
                    proj[i] = Some(vec![r.add(k, m.probability)]);
                } else if nodes.is_empty() {
                    proj[i] = Some(Vec::new());
                }
            }
            for (i, m) in zdem.mechanisms.iter().enumerate() {
                if proj[i].is_none() {
                    let nodes = r.project(&m.detectors);
                    proj[i] = Some(r.decompose(&nodes, m.probability));
                }
            }
            r.finish();
            let proj: Vec<Vec<usize>> = proj.into_iter().map(Option::unwrap).collect();
            let mut pass = Pass::build(r, mono, &zdem, &zcolors, &proj);
            pass.relabel(&old_of_new, dem.detector_count);
            pass
        });

        let mut local_colors = vec![None; dem.detector_count];
        for (new, &old) in old_of_new.iter().enumerate() {
            local_colors[old] = zcolors[new];
        }
        RestrictionDecoder { colors: local_colors, passes }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            passes: self
                .passes
                .iter()
                .map(|p| PassWorkspace { restricted: p.restricted.graph().solver(), lift: p.lift.solver() })
                .collect(),
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.colors.len()
    }

    /// Decode a list of fired detector indices.
    pub fn decode(&self, ws: &mut Workspace, fired: &[usize]) -> DecodeResult {
        let fired: Vec<usize> = fired.iter().copied().filter(|&d| self.colors[d].is_some()).collect();
        if fired.is_empty() {
            return DecodeResult { predicted_flip: false, weight: 0.0 };
        }
        let mut best: Option<DecodeResult> = None;
        for (pass, pws) in self.passes.iter().zip(ws.passes.iter_mut()) {
            let r = pass.decode(pws, &fired);
            if best.as_ref().map_or(true, |b| r.weight < b.weight) {
                best = Some(r);
            }
        }
        best.expect("two passes")
    }

    /// Decode a packed detector row (LSB-first).
    pub fn decode_row(&self, ws: &mut Workspace, row: &[u8]) -> DecodeResult {
        let mut fired = Vec::new();
        for (b, &byte) in row.iter().enumerate() {
            let mut v = byte;
            while v != 0 {
                fired.push(8 * b + v.trailing_zeros() as usize);
                v &= v - 1;
            }
        }
        self.decode(ws, &fired)
    }
}

/// One-shot convenience: build a decoder, decode a single event vector.
pub fn decode_restriction_mwpm(dem: &DetectorErrorModel, colors: &[Option<Color>], events: &[bool]) -> DecodeResult {
    let dec = RestrictionDecoder::new(dem, colors);
    let mut ws = dec.workspace();
    let fired: Vec<usize> = (0..events.len()).filter(|&k| events[k]).collect();
    dec.decode(&mut ws, &fired)
}
