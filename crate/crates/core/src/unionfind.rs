/// Disjoint sets over dense integer keys, union by size with path halving.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> UnionFind {
        UnionFind { parent: (0..len as u32).collect(), size: vec![1; len] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Adds a singleton and returns its key.
    pub fn push(&mut self) -> u32 {
        let k = self.parent.len() as u32;
        self.parent.push(k);
        self.size.push(1);
        k
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    /// Root lookup without path compression.
    pub fn find_const(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    /// Merges the sets of `a` and `b`. Returns `(root, absorbed)` when they
    /// were distinct.
    pub fn union(&mut self, a: u32, b: u32) -> Option<(u32, u32)> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        Some((ra, rb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unions_partition() {
        let mut uf = UnionFind::new(6);
        uf.union(0, 1);
        uf.union(2, 3);
        assert_eq!(uf.union(1, 0), None);
        uf.union(3, 1);
        let r = uf.find(0);
        assert!([1, 2, 3].iter().all(|&k| uf.find(k) == r));
        assert_ne!(uf.find(4), r);
        assert_eq!(uf.push(), 6);
        assert_eq!(uf.find_const(6), 6);
    }
}
