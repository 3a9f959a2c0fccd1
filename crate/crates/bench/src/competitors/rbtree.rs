//! Red-black tree over 64-bit keys, one mutable version.
//!
//! Nodes live in an arena indexed by `usize`, with slot 0 as the shared
//! NIL sentinel; freed slots are recycled through a free list. This keeps
//! the parent-pointer algorithms in safe code.

use expire_treap::ExpirationTime;

const NIL: usize = 0;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Color {
    Red,
    Black,
}

struct RbNode<P> {
    key: u64,
    exp: ExpirationTime,
    payload: P,
    left: usize,
    right: usize,
    parent: usize,
    color: Color,
}

pub struct RedBlackTree<P> {
    nodes: Vec<RbNode<P>>,
    root: usize,
    free: Vec<usize>,
    len: usize,
}

impl<P: Default> Default for RedBlackTree<P> {
    fn default() -> Self {
        RedBlackTree::new()
    }
}

impl<P: Default> RedBlackTree<P> {
    pub fn new() -> RedBlackTree<P> {
        RedBlackTree {
            nodes: vec![RbNode {
                key: 0,
                exp: ExpirationTime::INFINITY,
                payload: P::default(),
                left: NIL,
                right: NIL,
                parent: NIL,
                color: Color::Black,
            }],
            root: NIL,
            free: Vec::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Insert; duplicate keys are a no-op returning false.
    pub fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool {
        let mut parent = NIL;
        let mut cur = self.root;
        while cur != NIL {
            parent = cur;
            match key.cmp(&self.nodes[cur].key) {
                std::cmp::Ordering::Equal => return false,
                std::cmp::Ordering::Less => cur = self.nodes[cur].left,
                std::cmp::Ordering::Greater => cur = self.nodes[cur].right,
            }
        }
        let z = self.alloc(RbNode {
            key,
            exp,
            payload,
            left: NIL,
            right: NIL,
            parent,
            color: Color::Red,
        });
        if parent == NIL {
            self.root = z;
        } else if key < self.nodes[parent].key {
            self.nodes[parent].left = z;
        } else {
            self.nodes[parent].right = z;
        }
        self.len += 1;
        self.insert_fixup(z);
        true
    }

    pub fn find(&self, key: u64) -> Option<(ExpirationTime, &P)> {
        let mut cur = self.root;
        while cur != NIL {
            let n = &self.nodes[cur];
            match key.cmp(&n.key) {
                std::cmp::Ordering::Equal => return Some((n.exp, &n.payload)),
                std::cmp::Ordering::Less => cur = n.left,
                std::cmp::Ordering::Greater => cur = n.right,
            }
        }
        None
    }

    pub fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)> {
        let mut z = self.root;
        while z != NIL {
            match key.cmp(&self.nodes[z].key) {
                std::cmp::Ordering::Equal => break,
                std::cmp::Ordering::Less => z = self.nodes[z].left,
                std::cmp::Ordering::Greater => z = self.nodes[z].right,
            }
        }
        if z == NIL {
            return None;
        }

        let mut fix_color = self.nodes[z].color;
        let x;
        if self.nodes[z].left == NIL {
            x = self.nodes[z].right;
            self.transplant(z, x);
        } else if self.nodes[z].right == NIL {
            x = self.nodes[z].left;
            self.transplant(z, x);
        } else {
            // In-order successor: minimum of the right subtree.
            let mut y = self.nodes[z].right;
            while self.nodes[y].left != NIL {
                y = self.nodes[y].left;
            }
            fix_color = self.nodes[y].color;
            x = self.nodes[y].right;
            if self.nodes[y].parent == z {
                self.nodes[x].parent = y;
            } else {
                self.transplant(y, x);
                let zr = self.nodes[z].right;
                self.nodes[y].right = zr;
                self.nodes[zr].parent = y;
            }
            self.transplant(z, y);
            let zl = self.nodes[z].left;
            self.nodes[y].left = zl;
            self.nodes[zl].parent = y;
            self.nodes[y].color = self.nodes[z].color;
        }
        if fix_color == Color::Black {
            self.delete_fixup(x);
        }
        self.len -= 1;
        let slot = std::mem::replace(
            &mut self.nodes[z],
            RbNode {
                key: 0,
                exp: ExpirationTime::INFINITY,
                payload: P::default(),
                left: NIL,
                right: NIL,
                parent: NIL,
                color: Color::Black,
            },
        );
        self.free.push(z);
        Some((slot.exp, slot.payload))
    }

    /// In-order visit of every record.
    pub fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P)) {
        let mut stack: Vec<usize> = Vec::new();
        let mut cur = self.root;
        loop {
            while cur != NIL {
                stack.push(cur);
                cur = self.nodes[cur].left;
            }
            let Some(i) = stack.pop() else { break };
            let n = &self.nodes[i];
            f(n.key, n.exp, &n.payload);
            cur = n.right;
        }
    }

    pub fn max_depth(&self) -> usize {
        let mut max = 0;
        let mut stack = Vec::new();
        if self.root != NIL {
            stack.push((self.root, 0usize));
        }
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            for child in [self.nodes[i].left, self.nodes[i].right] {
                if child != NIL {
                    stack.push((child, d + 1));
                }
            }
        }
        max
    }

    /// Red nodes have black children, every root-to-leaf path carries the
    /// same number of black nodes, BST order holds, and the root is
    /// black. For tests.
    pub fn verify_invariants(&self) -> Result<(), String> {
        if self.root != NIL && self.nodes[self.root].color != Color::Black {
            return Err("red root".into());
        }
        fn go<P>(
            t: &RedBlackTree<P>,
            i: usize,
            lo: Option<u64>,
            hi: Option<u64>,
        ) -> Result<usize, String> {
            if i == NIL {
                return Ok(1);
            }
            let n = &t.nodes[i];
            if lo.is_some_and(|lo| n.key <= lo) || hi.is_some_and(|hi| n.key >= hi) {
                return Err(format!("BST violation at key {}", n.key));
            }
            if n.color == Color::Red {
                for child in [n.left, n.right] {
                    if child != NIL && t.nodes[child].color == Color::Red {
                        return Err(format!("red node {} has red child", n.key));
                    }
                }
            }
            let bl = go(t, n.left, lo, Some(n.key))?;
            let br = go(t, n.right, Some(n.key), hi)?;
            if bl != br {
                return Err(format!("black height mismatch at key {}: {bl} vs {br}", n.key));
            }
            Ok(bl + usize::from(n.color == Color::Black))
        }
        let mut count = 0;
        self.each_entry(&mut |_, _, _| count += 1);
        if count != self.len {
            return Err(format!("len {} but traversal saw {count}", self.len));
        }
        go(self, self.root, None, None).map(|_| ())
    }

    fn alloc(&mut self, node: RbNode<P>) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.nodes[i] = node;
                i
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    /// Replace the subtree rooted at `u` with the one rooted at `v`.
    /// Deliberately writes `v.parent` even when `v` is the sentinel; the
    /// delete fixup relies on that breadcrumb.
    fn transplant(&mut self, u: usize, v: usize) {
        let p = self.nodes[u].parent;
        if p == NIL {
            self.root = v;
        } else if u == self.nodes[p].left {
            self.nodes[p].left = v;
        } else {
            self.nodes[p].right = v;
        }
        self.nodes[v].parent = p;
    }

    fn rotate_left(&mut self, x: usize) {
        let y = self.nodes[x].right;
        let yl = self.nodes[y].left;
        self.nodes[x].right = yl;
        if yl != NIL {
            self.nodes[yl].parent = x;
        }
        let xp = self.nodes[x].parent;
        self.nodes[y].parent = xp;
        if xp == NIL {
            self.root = y;
        } else if x == self.nodes[xp].left {
            self.nodes[xp].left = y;
        } else {
            self.nodes[xp].right = y;
        }
        self.nodes[y].left = x;
        self.nodes[x].parent = y;
    }

    fn rotate_right(&mut self, x: usize) {
        let y = self.nodes[x].left;
        let yr = self.nodes[y].right;
        self.nodes[x].left = yr;
        if yr != NIL {
            self.nodes[yr].parent = x;
        }
        let xp = self.nodes[x].parent;
        self.nodes[y].parent = xp;
        if xp == NIL {
            self.root = y;
        } else if x == self.nodes[xp].right {
            self.nodes[xp].right = y;
        } else {
            self.nodes[xp].left = y;
        }
        self.nodes[y].right = x;
        self.nodes[x].parent = y;
    }

    fn insert_fixup(&mut self, mut z: usize) {
        while self.nodes[self.nodes[z].parent].color == Color::Red {
            let zp = self.nodes[z].parent;
            let zpp = self.nodes[zp].parent;
            if zp == self.nodes[zpp].left {
                let uncle = self.nodes[zpp].right;
                if self.nodes[uncle].color == Color::Red {
                    self.nodes[zp].color = Color::Black;
                    self.nodes[uncle].color = Color::Black;
                    self.nodes[zpp].color = Color::Red;
                    z = zpp;
                } else {
                    if z == self.nodes[zp].right {
                        z = zp;
                        self.rotate_left(z);
                    }
                    let zp = self.nodes[z].parent;
                    let zpp = self.nodes[zp].parent;
                    self.nodes[zp].color = Color::Black;
                    self.nodes[zpp].color = Color::Red;
                    self.rotate_right(zpp);
                }
            } else {
                let uncle = self.nodes[zpp].left;
                if self.nodes[uncle].color == Color::Red {
                    self.nodes[zp].color = Color::Black;
                    self.nodes[uncle].color = Color::Black;
                    self.nodes[zpp].color = Color::Red;
                    z = zpp;
                } else {
                    if z == self.nodes[zp].left {
                        z = zp;
                        self.rotate_right(z);
                    }
                    let zp = self.nodes[z].parent;
                    let zpp = self.nodes[zp].parent;
                    self.nodes[zp].color = Color::Black;
                    self.nodes[zpp].color = Color::Red;
                    self.rotate_left(zpp);
                }
            }
        }
        let root = self.root;
        self.nodes[root].color = Color::Black;
    }

    fn delete_fixup(&mut self, mut x: usize) {
        while x != self.root && self.nodes[x].color == Color::Black {
            let xp = self.nodes[x].parent;
            if x == self.nodes[xp].left {
                let mut w = self.nodes[xp].right;
                if self.nodes[w].color == Color::Red {
                    self.nodes[w].color = Color::Black;
                    self.nodes[xp].color = Color::Red;
                    self.rotate_left(xp);
                    w = self.nodes[self.nodes[x].parent].right;
                }
                if self.nodes[self.nodes[w].left].color == Color::Black
                    && self.nodes[self.nodes[w].right].color == Color::Black
                {
                    self.nodes[w].color = Color::Red;
                    x = self.nodes[x].parent;
                } else {
                    if self.nodes[self.nodes[w].right].color == Color::Black {
                        let wl = self.nodes[w].left;
                        self.nodes[wl].color = Color::Black;
                        self.nodes[w].color = Color::Red;
                        self.rotate_right(w);
                        w = self.nodes[self.nodes[x].parent].right;
                    }
                    let xp = self.nodes[x].parent;
                    self.nodes[w].color = self.nodes[xp].color;
                    self.nodes[xp].color = Color::Black;
                    let wr = self.nodes[w].right;
                    self.nodes[wr].color = Color::Black;
                    self.rotate_left(xp);
                    x = self.root;
                }
            } else {
                let mut w = self.nodes[xp].left;
                if self.nodes[w].color == Color::Red {
                    self.nodes[w].color = Color::Black;
                    self.nodes[xp].color = Color::Red;
                    self.rotate_right(xp);
                    w = self.nodes[self.nodes[x].parent].left;
                }
                if self.nodes[self.nodes[w].right].color == Color::Black
                    && self.nodes[self.nodes[w].left].color == Color::Black
                {
                    self.nodes[w].color = Color::Red;
                    x = self.nodes[x].parent;
                } else {
                    if self.nodes[self.nodes[w].left].color == Color::Black {
                        let wr = self.nodes[w].right;
                        self.nodes[wr].color = Color::Black;
                        self.nodes[w].color = Color::Red;
                        self.rotate_left(w);
                        w = self.nodes[self.nodes[x].parent].left;
                    }
                    let xp = self.nodes[x].parent;
                    self.nodes[w].color = self.nodes[xp].color;
                    self.nodes[xp].color = Color::Black;
                    let wl = self.nodes[w].left;
                    self.nodes[wl].color = Color::Black;
                    self.rotate_right(xp);
                    x = self.root;
                }
            }
        }
        self.nodes[x].color = Color::Black;
    }
}
