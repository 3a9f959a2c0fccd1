use std::sync::Arc;

use super::node::Node;
use crate::time::ExpirationTime;

/// In-order iterator over a snapshot. Keeps the pending ancestors on an
/// explicit stack, so depth never touches the call stack.
pub struct Iter<'a, K, P> {
    stack: Vec<&'a Node<K, P>>,
    /// Inclusive upper bound for range scans.
    hi: Option<K>,
}

impl<'a, K: Ord + Clone, P> Iter<'a, K, P> {
    /// Full traversal from the leftmost node.
    pub(crate) fn full(root: &'a Option<Arc<Node<K, P>>>) -> Iter<'a, K, P> {
        let mut it = Iter {
            stack: Vec::new(),
            hi: None,
        };
        it.push_left_spine(root.as_deref());
        it
    }

    /// Traversal of keys in `[lo, hi]`. Descends directly to `lo`, so only
    /// O(depth) nodes are visited before the first hit, and stops at `hi`.
    pub(crate) fn bounded(root: &'a Option<Arc<Node<K, P>>>, lo: &K, hi: &K) -> Iter<'a, K, P> {
        let mut it = Iter {
            stack: Vec::new(),
            hi: Some(hi.clone()),
        };
        let mut cur = root.as_deref();
        while let Some(node) = cur {
            if node.key < *lo {
                cur = node.right.as_deref();
            } else {
                it.stack.push(node);
                cur = node.left.as_deref();
            }
        }
        it
    }

    fn push_left_spine(&mut self, mut cur: Option<&'a Node<K, P>>) {
        while let Some(node) = cur {
            self.stack.push(node);
            cur = node.left.as_deref();
        }
    }
}

impl<'a, K: Ord + Clone, P> Iterator for Iter<'a, K, P> {
    type Item = (&'a K, ExpirationTime, &'a P);

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        if let Some(hi) = &self.hi {
            if node.key > *hi {
                self.stack.clear();
                return None;
            }
        }
        self.push_left_spine(node.right.as_deref());
        Some((&node.key, node.exp, &node.payload))
    }
}
