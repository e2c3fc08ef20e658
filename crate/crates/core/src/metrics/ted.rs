//! Ordered tree edit distance (Zhang–Shasha keyroot dynamic program).

/// Ordered, labelled tree.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTree<L> {
    pub label: L,
    pub children: Vec<LabeledTree<L>>,
}

impl<L> LabeledTree<L> {
    pub fn leaf(label: L) -> Self {
        Self { label, children: Vec::new() }
    }

    pub fn node(label: L, children: Vec<LabeledTree<L>>) -> Self {
        Self { label, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(LabeledTree::size).sum::<usize>()
    }
}

/// Edit costs. Inserts and deletes default to 1.
pub trait CostModel<L> {
    fn relabel(&self, a: &L, b: &L) -> f64;

    fn insert(&self, _node: &L) -> f64 {
        1.0
    }

    fn delete(&self, _node: &L) -> f64 {
        1.0
    }
}

/// 0 for equal labels, 1 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitCost;

impl<L: PartialEq> CostModel<L> for UnitCost {
    fn relabel(&self, a: &L, b: &L) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }
}

/// Postorder view of a tree: labels and leftmost-leaf descendants, 1-based.
struct Postorder<'a, L> {
    labels: Vec<Option<&'a L>>,
    lld: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a, L> Postorder<'a, L> {
    /// `None` labels a synthetic root that must map onto the other side's root.
    fn new(root: Option<&'a L>, children: &'a [LabeledTree<L>]) -> Self {
        let mut labels = vec![None];
        let mut lld = vec![0];
        for child in children {
            Self::visit(child, &mut labels, &mut lld);
        }
        let first = if labels.len() > 1 { lld[1] } else { 1 };
        labels.push(root);
        lld.push(first);

        let n = labels.len() - 1;
        let mut last_with_lld = vec![0; n + 1];
        for i in 1..=n {
            last_with_lld[lld[i]] = i;
        }
        let mut keyroots: Vec<usize> = last_with_lld.into_iter().filter(|&k| k > 0).collect();
        keyroots.sort_unstable();
        Self { labels, lld, keyroots }
    }

    fn visit(t: &'a LabeledTree<L>, labels: &mut Vec<Option<&'a L>>, lld: &mut Vec<usize>) {
        let mut first = None;
        for child in &t.children {
            Self::visit(child, labels, lld);
            first.get_or_insert(lld[lld.len() - 1]);
        }
        // leftmost leaf of the first child, or this node if it is a leaf
        let first_child_lld = t.children.first().map(|_| first.unwrap());
        labels.push(Some(&t.label));
        let me = labels.len() - 1;
        lld.push(first_child_lld.unwrap_or(me));
    }

    fn len(&self) -> usize {
        self.labels.len() - 1
    }
}

struct Costs<'c, L, C: CostModel<L>> {
    model: &'c C,
    _marker: std::marker::PhantomData<L>,
}

impl<L, C: CostModel<L>> Costs<'_, L, C> {
    fn delete(&self, n: Option<&L>) -> f64 {
        n.map_or(f64::INFINITY, |l| self.model.delete(l))
    }

    fn insert(&self, n: Option<&L>) -> f64 {
        n.map_or(f64::INFINITY, |l| self.model.insert(l))
    }

    fn relabel(&self, a: Option<&L>, b: Option<&L>) -> f64 {
        match (a, b) {
            (Some(a), Some(b)) => self.model.relabel(a, b),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

fn zhang_shasha<L, C: CostModel<L>>(a: &Postorder<'_, L>, b: &Postorder<'_, L>, model: &C) -> f64 {
    let costs = Costs { model, _marker: std::marker::PhantomData };
    let (n, m) = (a.len(), b.len());
    let mut tree_dist = vec![vec![0.0f64; m + 1]; n + 1];
    let mut forest = vec![vec![0.0f64; m + 2]; n + 2];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.lld[i], b.lld[j]);
            // forest[x][y] holds the distance between a[li..li+x) and b[lj..lj+y)
            forest[0][0] = 0.0;
            for x in li..=i {
                forest[x - li + 1][0] = forest[x - li][0] + costs.delete(a.labels[x]);
            }
            for y in lj..=j {
                forest[0][y - lj + 1] = forest[0][y - lj] + costs.insert(b.labels[y]);
            }
            for x in li..=i {
                let del = costs.delete(a.labels[x]);
                for y in lj..=j {
                    let ins = costs.insert(b.labels[y]);
                    let (fx, fy) = (x - li + 1, y - lj + 1);
                    let edit = (forest[fx - 1][fy] + del).min(forest[fx][fy - 1] + ins);
                    if a.lld[x] == li && b.lld[y] == lj {
                        let d = edit.min(forest[fx - 1][fy - 1] + costs.relabel(a.labels[x], b.labels[y]));
                        forest[fx][fy] = d;
                        tree_dist[x][y] = d;
                    } else {
                        let (px, py) = (a.lld[x] - li, b.lld[y] - lj);
                        forest[fx][fy] = edit.min(forest[px][py] + tree_dist[x][y]);
                    }
                }
            }
        }
    }
    tree_dist[n][m]
}

/// Minimum total cost of node inserts, deletes and relabels turning `a` into `b`.
pub fn tree_edit_distance<L, C: CostModel<L>>(a: &LabeledTree<L>, b: &LabeledTree<L>, cost: &C) -> f64 {
    let pa = Postorder::new(Some(&a.label), &a.children);
    let pb = Postorder::new(Some(&b.label), &b.children);
    zhang_shasha(&pa, &pb, cost)
}

/// Edit distance between ordered forests; an empty slice is the empty tree.
pub fn forest_edit_distance<L, C: CostModel<L>>(a: &[LabeledTree<L>], b: &[LabeledTree<L>], cost: &C) -> f64 {
    let pa = Postorder::new(None, a);
    let pb = Postorder::new(None, b);
    zhang_shasha(&pa, &pb, cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(label: char, children: Vec<LabeledTree<char>>) -> LabeledTree<char> {
        LabeledTree::node(label, children)
    }

    fn l(label: char) -> LabeledTree<char> {
        LabeledTree::leaf(label)
    }

    #[test]
    fn identical_trees() {
        let a = t('a', vec![l('b'), t('c', vec![l('d')])]);
        assert_eq!(tree_edit_distance(&a, &a.clone(), &UnitCost), 0.0);
    }

    #[test]
    fn single_node_vs_empty() {
        assert_eq!(forest_edit_distance(&[l('a')], &[], &UnitCost), 1.0);
        assert_eq!(forest_edit_distance::<char, _>(&[], &[], &UnitCost), 0.0);
    }

    #[test]
    fn classic_zhang_shasha_example() {
        // f(d(a, c(b)), e) vs f(c(d(a, b)), e): distance 2
        let a = t('f', vec![t('d', vec![l('a'), t('c', vec![l('b')])]), l('e')]);
        let b = t('f', vec![t('c', vec![t('d', vec![l('a'), l('b')])]), l('e')]);
        assert_eq!(tree_edit_distance(&a, &b, &UnitCost), 2.0);
    }

    #[test]
    fn small_cases_by_hand() {
        // relabel root
        assert_eq!(tree_edit_distance(&l('a'), &l('b'), &UnitCost), 1.0);
        // insert a leaf
        assert_eq!(tree_edit_distance(&l('a'), &t('a', vec![l('b')]), &UnitCost), 1.0);
        // delete the middle of a chain
        let chain = t('a', vec![t('b', vec![l('c')])]);
        assert_eq!(tree_edit_distance(&chain, &t('a', vec![l('c')]), &UnitCost), 1.0);
        // swap of siblings costs 2
        let ab = t('r', vec![l('a'), l('b')]);
        let ba = t('r', vec![l('b'), l('a')]);
        assert_eq!(tree_edit_distance(&ab, &ba, &UnitCost), 2.0);
    }

    #[test]
    fn sizes() {
        assert_eq!(t('a', vec![l('b'), t('c', vec![l('d')])]).size(), 4);
    }

    struct Weighted;
    impl CostModel<char> for Weighted {
        fn relabel(&self, a: &char, b: &char) -> f64 {
            if a == b {
                0.0
            } else {
                0.25
            }
        }
        fn delete(&self, _: &char) -> f64 {
            2.0
        }
    }

    #[test]
    fn custom_costs() {
        assert_eq!(tree_edit_distance(&l('a'), &l('b'), &Weighted), 0.25);
        assert_eq!(tree_edit_distance(&t('a', vec![l('b')]), &l('a'), &Weighted), 2.0);
        assert_eq!(tree_edit_distance(&l('a'), &t('a', vec![l('b')]), &Weighted), 1.0);
    }
}
