use super::{CorpusError, CorpusSlice};

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + (ca != cb) as usize;
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance if it is at most `k`, computed on the diagonal band of
/// width `2k + 1` with early exit once a whole row exceeds `k`.
pub fn levenshtein_bounded(a: &[char], b: &[char], k: usize) -> Option<usize> {
    let (la, lb) = (a.len(), b.len());
    if la.abs_diff(lb) > k {
        return None;
    }
    let inf = k + 1;
    let mut prev: Vec<usize> = (0..=lb).map(|j| if j <= k { j } else { inf }).collect();
    let mut cur = vec![inf; lb + 1];
    for i in 1..=la {
        let lo = i.saturating_sub(k);
        let hi = lb.min(i + k);
        if lo > 0 {
            cur[lo - 1] = inf;
        } else {
            cur[0] = i;
        }
        if hi < lb {
            cur[hi + 1] = inf;
        }
        let mut row_min = if lo == 0 { cur[0] } else { inf };
        for j in lo.max(1)..=hi {
            let sub = prev[j - 1] + (a[i - 1] != b[j - 1]) as usize;
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1).min(inf);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > k {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (prev[lb] <= k).then_some(prev[lb])
}

/// Largest edit count `d` with `d / len ≤ threshold`.
fn max_edits(threshold: f64, len: usize) -> usize {
    let l = len as f64;
    let mut k = (threshold * l).floor() as usize;
    while ((k + 1) as f64) / l <= threshold {
        k += 1;
    }
    while k > 0 && (k as f64) / l > threshold {
        k -= 1;
    }
    k
}

const BUCKETS: usize = 64;

fn char_histogram(text: &[char]) -> [i32; BUCKETS] {
    let mut h = [0; BUCKETS];
    for &c in text {
        h[((c as u32).wrapping_mul(0x9E37_79B1) >> 26) as usize] += 1;
    }
    h
}

/// Bag distance over hashed character buckets; never exceeds the edit distance.
fn bag_lower_bound(a: &[i32; BUCKETS], b: &[i32; BUCKETS]) -> usize {
    let (mut more, mut less) = (0i32, 0i32);
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        if d > 0 {
            more += d;
        } else {
            less -= d;
        }
    }
    more.max(less) as usize
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Union keeping the smaller index as root, so roots are cluster minima.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Remove near-duplicates: tweets whose texts are within `threshold` in
/// edit distance normalised by the longer text's length. Clusters are the
/// transitive closure of that relation and keep only their earliest tweet.
pub fn near_dedup(corpus: &CorpusSlice, threshold: f64) -> Result<CorpusSlice, CorpusError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CorpusError::InvalidThreshold(threshold));
    }
    let texts: Vec<Vec<char>> = corpus.tweets.iter().map(|t| t.text.chars().collect()).collect();
    let hists: Vec<[i32; BUCKETS]> = texts.iter().map(|t| char_histogram(t)).collect();
    let n = texts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (texts[i].len(), i));
    let mut sets = DisjointSet::new(n);
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            let (li, lj) = (texts[i].len(), texts[j].len());
            if lj == 0 {
                sets.union(i, j);
                continue;
            }
            let k = max_edits(threshold, lj);
            if lj - li > k {
                break;
            }
            if sets.find(i) == sets.find(j) || bag_lower_bound(&hists[i], &hists[j]) > k {
                continue;
            }
            if levenshtein_bounded(&texts[i], &texts[j], k).is_some() {
                sets.union(i, j);
            }
        }
    }
    let kept: Vec<_> = (0..n).filter(|&i| sets.find(i) == i).map(|i| corpus.tweets[i].clone()).collect();
    let detail = serde_json::json!({ "threshold": threshold, "removed": n - kept.len() });
    Ok(corpus.derive(kept, "near_dedup", detail))
}
