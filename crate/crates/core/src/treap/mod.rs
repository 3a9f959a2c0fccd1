//! Fully persistent treap: a binary search tree on keys that is at the
//! same time a minimum heap on expiration times.
//!
//! The heap side keeps the records closest to expiring clustered at the
//! root, so expiration never searches: while the root is stale it is
//! sifted to leaf level and discarded. Every update copies only the nodes
//! on the touched path and shares the rest with the previous version, so
//! any number of reader threads can keep querying older snapshots while a
//! single writer produces new ones.
//!
//! All descents and teardowns use explicit stacks. Adversarially
//! correlated inputs can degrade a treap into a long spine; that costs
//! time, never the call stack.

mod iter;
mod node;

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use smallvec::SmallVec;

pub use self::iter::Iter;
use self::node::{Link, Node};
use crate::time::{ExpirationTime, ExtendedComparator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TreapError {
    #[error("key is not in treap")]
    KeyNotFound,
    #[error("invalid range: lo > hi")]
    InvalidRange,
}

/// Exact node-depth statistics; the root is at depth 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthStats {
    pub max_depth: usize,
    pub mean_depth: f64,
}

/// One expelled record: key, its expiration time, and the payload.
pub type ExpiredRecord<K, P> = (K, ExpirationTime, P);

/// An immutable treap version.
///
/// Cloning a snapshot is a reference-count bump. Updates return a new
/// snapshot and never change the observable contents of any existing one;
/// shared nodes are reclaimed when the last snapshot that can reach them
/// goes away.
///
/// Mutating operations take an [`ExtendedComparator`], which owns the
/// seeded coin used for infinity-vs-infinity expiration comparisons.
/// Holding it `&mut` makes the single-writer discipline explicit in the
/// types: one writer advances a lineage while readers query snapshots
/// freely on other threads.
pub struct TreapSnapshot<K, P> {
    root: Link<K, P>,
    count: usize,
}

impl<K, P> Clone for TreapSnapshot<K, P> {
    fn clone(&self) -> Self {
        TreapSnapshot {
            root: self.root.clone(),
            count: self.count,
        }
    }
}

impl<K, P> Default for TreapSnapshot<K, P> {
    fn default() -> Self {
        TreapSnapshot::empty()
    }
}

enum Dir {
    Left,
    Right,
}

/// Which rotation lifted a node during a percolate descent.
enum Rot {
    /// Right rotation: the node rose from the left, keeps its left child,
    /// and the rebuilt subtree hangs on its right.
    Right,
    /// Left rotation: mirror image.
    Left,
}

impl<K, P> TreapSnapshot<K, P> {
    pub fn empty() -> Self {
        TreapSnapshot {
            root: None,
            count: 0,
        }
    }

    /// Number of records in this version.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Expiration of the record closest to expiring, i.e. the root.
    /// `None` for the empty treap. Infinity here means nothing in this
    /// version ever expires.
    pub fn min_expiration(&self) -> Option<ExpirationTime> {
        self.root.as_deref().map(|n| n.exp)
    }
}

impl<K: Ord + Clone, P: Clone> TreapSnapshot<K, P> {
    /// Payload stored under `key`. Time-agnostic: records that have
    /// expired but not yet been expunged are still visible here; the
    /// store layer filters by query time.
    pub fn find(&self, key: &K) -> Result<&P, TreapError> {
        self.entry(key)
            .map(|(_, payload)| payload)
            .ok_or(TreapError::KeyNotFound)
    }

    /// Expiration and payload under `key`, if present.
    pub fn entry(&self, key: &K) -> Option<(ExpirationTime, &P)> {
        let mut cur = self.root.as_deref();
        while let Some(node) = cur {
            match key.cmp(&node.key) {
                Ordering::Equal => return Some((node.exp, &node.payload)),
                Ordering::Less => cur = node.left.as_deref(),
                Ordering::Greater => cur = node.right.as_deref(),
            }
        }
        None
    }

    /// A new version containing `(key, exp, payload)` plus everything in
    /// `self`. Inserting a key that is already present is a no-op that
    /// returns a logically identical snapshot.
    ///
    /// Descends to a leaf by key, then re-establishes the heap property
    /// on the way back up: whenever the rebuilt child expires before its
    /// parent (strictly, under the extended order), a rotation lifts it.
    /// Allocates one node per level of the insertion path.
    pub fn insert(
        &self,
        key: K,
        exp: ExpirationTime,
        payload: P,
        cmp: &mut ExtendedComparator,
    ) -> Self {
        let mut path: SmallVec<[(&Node<K, P>, Dir); 64]> = SmallVec::new();
        let mut cur = self.root.as_deref();
        while let Some(node) = cur {
            match key.cmp(&node.key) {
                Ordering::Equal => return self.clone(),
                Ordering::Less => {
                    path.push((node, Dir::Left));
                    cur = node.left.as_deref();
                }
                Ordering::Greater => {
                    path.push((node, Dir::Right));
                    cur = node.right.as_deref();
                }
            }
        }

        let mut sub = Arc::new(Node::leaf_pair(key, exp, payload));
        for (node, dir) in path.into_iter().rev() {
            if cmp.lt(sub.exp, node.exp) {
                // `sub` rises; a copy of `node` becomes its child. `sub`
                // is freshly built and uniquely owned, so it is edited in
                // place instead of being reallocated.
                let sub_mut = Arc::get_mut(&mut sub).expect("fresh node is shared");
                match dir {
                    Dir::Left => {
                        let carried = sub_mut.right.take();
                        sub_mut.right = Some(Arc::new(Node {
                            left: carried,
                            right: node.right.clone(),
                            key: node.key.clone(),
                            exp: node.exp,
                            payload: node.payload.clone(),
                        }));
                    }
                    Dir::Right => {
                        let carried = sub_mut.left.take();
                        sub_mut.left = Some(Arc::new(Node {
                            left: node.left.clone(),
                            right: carried,
                            key: node.key.clone(),
                            exp: node.exp,
                            payload: node.payload.clone(),
                        }));
                    }
                }
            } else {
                sub = Arc::new(match dir {
                    Dir::Left => Node {
                        left: Some(sub),
                        right: node.right.clone(),
                        key: node.key.clone(),
                        exp: node.exp,
                        payload: node.payload.clone(),
                    },
                    Dir::Right => Node {
                        left: node.left.clone(),
                        right: Some(sub),
                        key: node.key.clone(),
                        exp: node.exp,
                        payload: node.payload.clone(),
                    },
                });
            }
        }

        TreapSnapshot {
            root: Some(sub),
            count: self.count + 1,
        }
    }

    /// A new version without `key`. The matched node is sifted down to
    /// leaf level, at each step lifting the child with the smaller
    /// expiration (ties go left), then discarded.
    pub fn remove(&self, key: &K, cmp: &mut ExtendedComparator) -> Result<Self, TreapError> {
        let mut path: SmallVec<[(&Node<K, P>, Dir); 64]> = SmallVec::new();
        let mut cur = self.root.as_deref();
        let target = loop {
            let node = cur.ok_or(TreapError::KeyNotFound)?;
            match key.cmp(&node.key) {
                Ordering::Equal => break node,
                Ordering::Less => {
                    path.push((node, Dir::Left));
                    cur = node.left.as_deref();
                }
                Ordering::Greater => {
                    path.push((node, Dir::Right));
                    cur = node.right.as_deref();
                }
            }
        };

        let mut sub = percolate(target, cmp);
        for (node, dir) in path.into_iter().rev() {
            sub = Some(Arc::new(match dir {
                Dir::Left => Node {
                    left: sub,
                    right: node.right.clone(),
                    key: node.key.clone(),
                    exp: node.exp,
                    payload: node.payload.clone(),
                },
                Dir::Right => Node {
                    left: node.left.clone(),
                    right: sub,
                    key: node.key.clone(),
                    exp: node.exp,
                    payload: node.payload.clone(),
                },
            }));
        }

        Ok(TreapSnapshot {
            root: sub,
            count: self.count - 1,
        })
    }

    /// Remove-then-insert convenience for callers that want duplicate
    /// keys to refresh expiration and payload.
    pub fn upsert(
        &self,
        key: K,
        exp: ExpirationTime,
        payload: P,
        cmp: &mut ExtendedComparator,
    ) -> Self {
        match self.remove(&key, cmp) {
            Ok(without) => without.insert(key, exp, payload, cmp),
            Err(TreapError::KeyNotFound) => self.insert(key, exp, payload, cmp),
            Err(_) => unreachable!("remove only reports missing keys"),
        }
    }

    /// Repeatedly remove the root while it has expired by `now_ms`.
    /// Returns the new version and the expelled records in removal
    /// order, which is nondecreasing in expiration time. Records with
    /// infinite expiration are never expelled.
    pub fn expire(
        &self,
        now_ms: u64,
        cmp: &mut ExtendedComparator,
    ) -> (Self, Vec<ExpiredRecord<K, P>>) {
        let mut expelled = Vec::new();
        match self.root.as_deref() {
            Some(root) if root.exp.is_expired_at(now_ms) => {}
            _ => return (self.clone(), expelled),
        }

        let mut root = self.root.clone();
        let mut count = self.count;
        loop {
            let Some(node) = root.as_deref() else { break };
            if !node.exp.is_expired_at(now_ms) {
                break;
            }
            expelled.push((node.key.clone(), node.exp, node.payload.clone()));
            let rest = percolate(node, cmp);
            count -= 1;
            root = rest;
        }

        (TreapSnapshot { root, count }, expelled)
    }

    /// In-order traversal; keys strictly increasing.
    pub fn iter(&self) -> Iter<'_, K, P> {
        Iter::full(&self.root)
    }

    /// In-order traversal of keys in `[lo, hi]`. Visits O(depth + answer)
    /// nodes.
    pub fn range(&self, lo: &K, hi: &K) -> Result<Iter<'_, K, P>, TreapError> {
        if lo > hi {
            return Err(TreapError::InvalidRange);
        }
        Ok(Iter::bounded(&self.root, lo, hi))
    }

    /// Max and mean node depth, exact.
    pub fn depth_stats(&self) -> DepthStats {
        let mut max_depth = 0usize;
        let mut depth_sum = 0u128;
        let mut stack: Vec<(&Node<K, P>, usize)> = Vec::new();
        if let Some(root) = self.root.as_deref() {
            stack.push((root, 0));
        }
        while let Some((node, depth)) = stack.pop() {
            max_depth = max_depth.max(depth);
            depth_sum += depth as u128;
            if let Some(l) = node.left.as_deref() {
                stack.push((l, depth + 1));
            }
            if let Some(r) = node.right.as_deref() {
                stack.push((r, depth + 1));
            }
        }
        DepthStats {
            max_depth,
            mean_depth: if self.count == 0 {
                0.0
            } else {
                depth_sum as f64 / self.count as f64
            },
        }
    }

    /// Walks the whole version checking the search-tree order, the heap
    /// order on expirations (under the deterministic order, where
    /// infinity-vs-infinity pairs are unconstrained), and the record
    /// count. Intended for tests and the `verify` command.
    pub fn verify_invariants(&self) -> Result<(), String>
    where
        K: fmt::Debug,
    {
        let mut seen = 0usize;
        let mut stack: Vec<(&Node<K, P>, Option<&K>, Option<&K>)> = Vec::new();
        if let Some(root) = self.root.as_deref() {
            stack.push((root, None, None));
        }
        while let Some((node, lo, hi)) = stack.pop() {
            seen += 1;
            if let Some(lo) = lo {
                if node.key <= *lo {
                    return Err(format!("BST violation at key {:?}", node.key));
                }
            }
            if let Some(hi) = hi {
                if node.key >= *hi {
                    return Err(format!("BST violation at key {:?}", node.key));
                }
            }
            for child in [node.left.as_deref(), node.right.as_deref()].into_iter().flatten() {
                if child.exp < node.exp {
                    return Err(format!(
                        "heap violation: child {:?} expires at {} before parent {:?} at {}",
                        child.key, child.exp, node.key, node.exp
                    ));
                }
            }
            if let Some(l) = node.left.as_deref() {
                stack.push((l, lo, Some(&node.key)));
            }
            if let Some(r) = node.right.as_deref() {
                stack.push((r, Some(&node.key), hi));
            }
        }
        if seen != self.count {
            return Err(format!("count {} but traversal saw {}", self.count, seen));
        }
        Ok(())
    }

    /// Pre-order text dump, one node per line: key, expiration, depth,
    /// indented by depth. Stable across runs for golden-file tests.
    pub fn dump(&self) -> String
    where
        K: fmt::Display,
    {
        let mut out = String::new();
        let mut stack: Vec<(&Node<K, P>, usize)> = Vec::new();
        if let Some(root) = self.root.as_deref() {
            stack.push((root, 0));
        }
        while let Some((node, depth)) = stack.pop() {
            let _ = writeln!(
                out,
                "{:indent$}{} {} {}",
                "",
                node.key,
                node.exp,
                depth,
                indent = depth * 2
            );
            if let Some(r) = node.right.as_deref() {
                stack.push((r, depth + 1));
            }
            if let Some(l) = node.left.as_deref() {
                stack.push((l, depth + 1));
            }
        }
        out
    }

    /// Raw pointers of all reachable nodes, for structure-sharing
    /// accounting in tests.
    #[cfg(test)]
    fn node_addresses(&self) -> std::collections::HashSet<*const ()> {
        let mut out = std::collections::HashSet::with_capacity(self.count);
        let mut stack: Vec<&Node<K, P>> = Vec::new();
        if let Some(root) = self.root.as_deref() {
            stack.push(root);
        }
        while let Some(node) = stack.pop() {
            out.insert(node as *const Node<K, P> as *const ());
            if let Some(l) = node.left.as_deref() {
                stack.push(l);
            }
            if let Some(r) = node.right.as_deref() {
                stack.push(r);
            }
        }
        out
    }
}

impl<K: Ord + Clone + fmt::Debug, P: fmt::Debug + Clone> fmt::Debug for TreapSnapshot<K, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TreapSnapshot")
            .field("count", &self.count)
            .field("min_expiration", &self.min_expiration())
            .finish()
    }
}

/// Sift the root of `target`'s subtree down to leaf level and discard it,
/// returning the rebuilt subtree. At each step the child with the smaller
/// expiration rises (ties toward the left child); only the risen nodes
/// are copied, the vanishing node is never materialised.
fn percolate<K: Ord + Clone, P: Clone>(
    target: &Node<K, P>,
    cmp: &mut ExtendedComparator,
) -> Link<K, P> {
    let mut chain: SmallVec<[(&Node<K, P>, Rot); 64]> = SmallVec::new();
    let mut dl = target.left.as_deref();
    let mut dr = target.right.as_deref();
    loop {
        match (dl, dr) {
            (None, None) => break,
            (Some(l), None) => {
                chain.push((l, Rot::Right));
                dl = l.right.as_deref();
            }
            (None, Some(r)) => {
                chain.push((r, Rot::Left));
                dr = r.left.as_deref();
            }
            (Some(l), Some(r)) => {
                if cmp.le(l.exp, r.exp) {
                    chain.push((l, Rot::Right));
                    dl = l.right.as_deref();
                } else {
                    chain.push((r, Rot::Left));
                    dr = r.left.as_deref();
                }
            }
        }
    }

    let mut sub: Link<K, P> = None;
    for (node, rot) in chain.into_iter().rev() {
        sub = Some(Arc::new(match rot {
            Rot::Right => Node {
                left: node.left.clone(),
                right: sub,
                key: node.key.clone(),
                exp: node.exp,
                payload: node.payload.clone(),
            },
            Rot::Left => Node {
                left: sub,
                right: node.right.clone(),
                key: node.key.clone(),
                exp: node.exp,
                payload: node.payload.clone(),
            },
        }));
    }
    sub
}
