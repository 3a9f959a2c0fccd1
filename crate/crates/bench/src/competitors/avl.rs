//! Height-balanced AVL tree over 64-bit keys, one mutable version.
//! Baseline index for the comparative benchmarks; textbook rebalancing
//! with a per-node balance factor in {-1, 0, 1}.

use expire_treap::ExpirationTime;

type Anchor<P> = Option<Box<AvlNode<P>>>;

struct AvlNode<P> {
    key: u64,
    exp: ExpirationTime,
    payload: P,
    height: u8,
    left: Anchor<P>,
    right: Anchor<P>,
}

impl<P> AvlNode<P> {
    fn new(key: u64, exp: ExpirationTime, payload: P) -> Box<AvlNode<P>> {
        Box::new(AvlNode {
            key,
            exp,
            payload,
            height: 1,
            left: None,
            right: None,
        })
    }
}

pub struct AvlTree<P> {
    root: Anchor<P>,
    len: usize,
}

impl<P> Default for AvlTree<P> {
    fn default() -> Self {
        AvlTree::new()
    }
}

fn height<P>(a: &Anchor<P>) -> i32 {
    a.as_ref().map_or(0, |n| n.height as i32)
}

fn update_height<P>(n: &mut AvlNode<P>) {
    n.height = 1 + height(&n.left).max(height(&n.right)) as u8;
}

fn balance_factor<P>(n: &AvlNode<P>) -> i32 {
    height(&n.left) - height(&n.right)
}

fn rotate_right<P>(mut n: Box<AvlNode<P>>) -> Box<AvlNode<P>> {
    let mut pivot = n.left.take().expect("rotate_right without left child");
    n.left = pivot.right.take();
    update_height(&mut n);
    pivot.right = Some(n);
    update_height(&mut pivot);
    pivot
}

fn rotate_left<P>(mut n: Box<AvlNode<P>>) -> Box<AvlNode<P>> {
    let mut pivot = n.right.take().expect("rotate_left without right child");
    n.right = pivot.left.take();
    update_height(&mut n);
    pivot.left = Some(n);
    update_height(&mut pivot);
    pivot
}

fn rebalance<P>(mut n: Box<AvlNode<P>>) -> Box<AvlNode<P>> {
    update_height(&mut n);
    let bf = balance_factor(&n);
    if bf > 1 {
        if balance_factor(n.left.as_ref().unwrap()) < 0 {
            n.left = Some(rotate_left(n.left.take().unwrap()));
        }
        rotate_right(n)
    } else if bf < -1 {
        if balance_factor(n.right.as_ref().unwrap()) > 0 {
            n.right = Some(rotate_right(n.right.take().unwrap()));
        }
        rotate_left(n)
    } else {
        n
    }
}

impl<P> AvlTree<P> {
    pub fn new() -> AvlTree<P> {
        AvlTree { root: None, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Insert; duplicate keys are a no-op returning false.
    pub fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool {
        fn go<P>(anchor: Anchor<P>, key: u64, exp: ExpirationTime, payload: P) -> (Box<AvlNode<P>>, bool) {
            let Some(mut n) = anchor else {
                return (AvlNode::new(key, exp, payload), true);
            };
            let inserted = match key.cmp(&n.key) {
                std::cmp::Ordering::Equal => return (n, false),
                std::cmp::Ordering::Less => {
                    let (child, inserted) = go(n.left.take(), key, exp, payload);
                    n.left = Some(child);
                    inserted
                }
                std::cmp::Ordering::Greater => {
                    let (child, inserted) = go(n.right.take(), key, exp, payload);
                    n.right = Some(child);
                    inserted
                }
            };
            (rebalance(n), inserted)
        }
        let (root, inserted) = go(self.root.take(), key, exp, payload);
        self.root = Some(root);
        if inserted {
            self.len += 1;
        }
        inserted
    }

    pub fn find(&self, key: u64) -> Option<(ExpirationTime, &P)> {
        let mut cur = self.root.as_deref();
        while let Some(n) = cur {
            match key.cmp(&n.key) {
                std::cmp::Ordering::Equal => return Some((n.exp, &n.payload)),
                std::cmp::Ordering::Less => cur = n.left.as_deref(),
                std::cmp::Ordering::Greater => cur = n.right.as_deref(),
            }
        }
        None
    }

    pub fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)> {
        fn take_min<P>(mut n: Box<AvlNode<P>>) -> (Anchor<P>, Box<AvlNode<P>>) {
            match n.left.take() {
                None => {
                    let right = n.right.take();
                    (right, n)
                }
                Some(left) => {
                    let (rest, min) = take_min(left);
                    n.left = rest;
                    (Some(rebalance(n)), min)
                }
            }
        }
        fn go<P>(anchor: Anchor<P>, key: u64) -> (Anchor<P>, Option<(ExpirationTime, P)>) {
            let Some(mut n) = anchor else {
                return (None, None);
            };
            match key.cmp(&n.key) {
                std::cmp::Ordering::Less => {
                    let (child, removed) = go(n.left.take(), key);
                    n.left = child;
                    (Some(rebalance(n)), removed)
                }
                std::cmp::Ordering::Greater => {
                    let (child, removed) = go(n.right.take(), key);
                    n.right = child;
                    (Some(rebalance(n)), removed)
                }
                std::cmp::Ordering::Equal => {
                    let AvlNode { exp, payload, left, right, .. } = *n;
                    let removed = Some((exp, payload));
                    match (left, right) {
                        (None, r) => (r, removed),
                        (l, None) => (l, removed),
                        (l, Some(r)) => {
                            let (rest, mut successor) = take_min(r);
                            successor.left = l;
                            successor.right = rest;
                            (Some(rebalance(successor)), removed)
                        }
                    }
                }
            }
        }
        let (root, removed) = go(self.root.take(), key);
        self.root = root;
        if removed.is_some() {
            self.len -= 1;
        }
        removed
    }

    /// In-order visit of every record.
    pub fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P)) {
        let mut stack: Vec<&AvlNode<P>> = Vec::new();
        let mut cur = self.root.as_deref();
        loop {
            while let Some(n) = cur {
                stack.push(n);
                cur = n.left.as_deref();
            }
            let Some(n) = stack.pop() else { break };
            f(n.key, n.exp, &n.payload);
            cur = n.right.as_deref();
        }
    }

    pub fn max_depth(&self) -> usize {
        height(&self.root).saturating_sub(1) as usize
    }

    /// Balance factors in range and BST order; for tests.
    pub fn verify_invariants(&self) -> Result<(), String> {
        fn go<P>(anchor: &Anchor<P>, lo: Option<u64>, hi: Option<u64>) -> Result<i32, String> {
            let Some(n) = anchor else { return Ok(0) };
            if lo.is_some_and(|lo| n.key <= lo) || hi.is_some_and(|hi| n.key >= hi) {
                return Err(format!("BST violation at key {}", n.key));
            }
            let hl = go(&n.left, lo, Some(n.key))?;
            let hr = go(&n.right, Some(n.key), hi)?;
            if (hl - hr).abs() > 1 {
                return Err(format!("balance violation at key {}: {hl} vs {hr}", n.key));
            }
            let h = 1 + hl.max(hr);
            if h != n.height as i32 {
                return Err(format!("stale height at key {}", n.key));
            }
            Ok(h)
        }
        go(&self.root, None, None).map(|_| ())
    }
}
