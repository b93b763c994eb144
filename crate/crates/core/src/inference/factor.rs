//! Dense table factors over discrete variables.

/// A nonnegative function over the joint states of `scope`, stored
/// row-major with the last scope variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

/// Advances a mixed-radix counter, last digit fastest. Returns false on wrap.
pub(crate) fn advance(digits: &mut [usize], cards: &[usize]) -> bool {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < cards[pos] {
            return true;
        }
        digits[pos] = 0;
    }
    false
}

impl Factor {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(values.len(), cards.iter().product::<usize>());
        debug_assert!(values.iter().all(|&v| v >= 0.0));
        Factor {
            scope,
            cards,
            values,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Factor::new(Vec::new(), Vec::new(), vec![value])
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Fixes `var` to `value`, dropping it from the scope.
    pub fn reduce(&self, var: usize, value: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let st = strides(&self.cards);
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let outer = self.values.len() / (st[pos] * self.cards[pos]);
        let inner = st[pos];
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = o * st[pos] * self.cards[pos] + value * st[pos];
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        Factor::new(scope, cards, values)
    }

    /// Sums `var` out of the factor.
    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let st = strides(&self.cards);
        let card = self.cards[pos];
        let inner = st[pos];
        let outer = self.values.len() / (inner * card);
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = o * inner * card + s * inner;
                for t in 0..inner {
                    values[o * inner + t] += self.values[base + t];
                }
            }
        }
        Factor::new(scope, cards, values)
    }

    /// Pointwise product over the union of both scopes. The result scope is
    /// `self`'s scope followed by variables only in `other`.
    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        let sa = self.projected_strides(&scope);
        let sb = other.projected_strides(&scope);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut digits = vec![0; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        loop {
            values.push(self.values[ia] * other.values[ib]);
            // incremental index update on the odometer
            let mut pos = scope.len();
            loop {
                if pos == 0 {
                    return Factor::new(scope, cards, values);
                }
                pos -= 1;
                digits[pos] += 1;
                ia += sa[pos];
                ib += sb[pos];
                if digits[pos] < cards[pos] {
                    break;
                }
                ia -= sa[pos] * cards[pos];
                ib -= sb[pos] * cards[pos];
                digits[pos] = 0;
            }
        }
    }

    /// Strides of this factor's table laid against another variable order;
    /// zero for variables outside this scope.
    fn projected_strides(&self, order: &[usize]) -> Vec<usize> {
        let st = strides(&self.cards);
        order
            .iter()
            .map(|v| {
                self.scope
                    .iter()
                    .position(|s| s == v)
                    .map_or(0, |p| st[p])
            })
            .collect()
    }

    /// Same function with the scope permuted into `order`, which must be a
    /// permutation of the current scope.
    pub fn reorder(&self, order: &[usize]) -> Factor {
        assert_eq!(order.len(), self.scope.len());
        if order == self.scope.as_slice() {
            return self.clone();
        }
        let cards: Vec<usize> = order
            .iter()
            .map(|v| {
                let p = self.scope.iter().position(|s| s == v).expect("same scope");
                self.cards[p]
            })
            .collect();
        let src = self.projected_strides(order);
        let mut values = Vec::with_capacity(self.values.len());
        let mut digits = vec![0; order.len()];
        loop {
            let idx: usize = digits.iter().zip(&src).map(|(d, s)| d * s).sum();
            values.push(self.values[idx]);
            if !advance(&mut digits, &cards) {
                break;
            }
        }
        Factor::new(order.to_vec(), cards, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_sum_out() {
        // f(A) = (0.6, 0.4); g(A, B) = [[0.5, 0.5], [0.2, 0.8]]
        let f = Factor::new(vec![0], vec![2], vec![0.6, 0.4]);
        let g = Factor::new(vec![0, 1], vec![2, 2], vec![0.5, 0.5, 0.2, 0.8]);
        let joint = f.product(&g);
        assert_eq!(joint.scope(), &[0, 1]);
        let expect = [0.3, 0.3, 0.08, 0.32];
        for (a, b) in joint.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let pb = joint.sum_out(0);
        assert_eq!(pb.scope(), &[1]);
        assert!((pb.values()[1] - 0.62).abs() < 1e-15);
    }

    #[test]
    fn product_orders_scope_by_left_operand() {
        let g = Factor::new(vec![0, 1], vec![2, 3], (0..6).map(f64::from).collect());
        let h = Factor::new(vec![2, 1], vec![2, 3], (0..6).map(|x| f64::from(x) + 1.0).collect());
        let p = g.product(&h);
        assert_eq!(p.scope(), &[0, 1, 2]);
        // p(a, b, c) = g(a, b) * h(c, b)
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..2 {
                    let got = p.values()[a * 6 + b * 2 + c];
                    let want = (a * 3 + b) as f64 * ((c * 3 + b) as f64 + 1.0);
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn reduce_drops_variable() {
        let g = Factor::new(vec![0, 1], vec![2, 2], vec![0.5, 0.5, 0.2, 0.8]);
        let r = g.reduce(0, 1);
        assert_eq!(r.scope(), &[1]);
        assert_eq!(r.values(), &[0.2, 0.8]);
        let r = g.reduce(1, 1);
        assert_eq!(r.values(), &[0.5, 0.8]);
    }

    #[test]
    fn reorder_transposes() {
        let g = Factor::new(vec![0, 1], vec![2, 3], (0..6).map(f64::from).collect());
        let t = g.reorder(&[1, 0]);
        assert_eq!(t.cards(), &[3, 2]);
        assert_eq!(t.values(), &[0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
    }
}
