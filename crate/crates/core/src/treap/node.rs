use std::sync::Arc;

use crate::time::ExpirationTime;

/// A child pointer; `None` is the leaf sentinel.
pub(crate) type Link<K, P> = Option<Arc<Node<K, P>>>;

/// An inner treap node. Nodes are immutable once published: updates copy
/// the path from the root and share every untouched subtree with the
/// previous version.
pub(crate) struct Node<K, P> {
    pub(crate) left: Link<K, P>,
    pub(crate) right: Link<K, P>,
    pub(crate) key: K,
    pub(crate) exp: ExpirationTime,
    pub(crate) payload: P,
}

impl<K, P> Node<K, P> {
    pub(crate) fn leaf_pair(key: K, exp: ExpirationTime, payload: P) -> Node<K, P> {
        Node {
            left: None,
            right: None,
            key,
            exp,
            payload,
        }
    }
}

/// Tear subtrees down with an explicit worklist. A recursive drop would
/// overflow the stack on the deep spines that adversarially correlated
/// keys and expirations can produce.
impl<K, P> Drop for Node<K, P> {
    fn drop(&mut self) {
        let mut stack: Vec<Arc<Node<K, P>>> = Vec::new();
        let enqueue = |link: Link<K, P>, stack: &mut Vec<Arc<Node<K, P>>>| {
            if let Some(child) = link {
                stack.push(child);
            }
        };
        enqueue(self.left.take(), &mut stack);
        enqueue(self.right.take(), &mut stack);
        while let Some(arc) = stack.pop() {
            // Sole owner: steal the children so the node drops flat.
            // Shared: dropping the Arc just decrements the count.
            if let Some(node) = Arc::into_inner(arc) {
                let mut node = node;
                enqueue(node.left.take(), &mut stack);
                enqueue(node.right.take(), &mut stack);
            }
        }
    }
}
