use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use super::transition::{Action, ParserState, Slot, N_SLOTS, ROOT};
use crate::neural::{
    affine, argmax, maxout, maxout_backward, softmax_xent, sum_rows, HasParams, Param,
};

/// Relation assigned by the tree repair to attachments the parser left out.
pub const REPAIR_LABEL: &str = "dep";
pub const ROOT_LABEL: &str = "root";

/// One training example: a state's feature sources, its legal actions and
/// the gold action index.
#[derive(Clone, Debug)]
pub struct ParserExample {
    pub slots: [Slot; N_SLOTS],
    pub legal: Vec<bool>,
    pub gold: usize,
}

/// Hidden-layer rows of the root and null vectors, one per slot.
struct FixedRows {
    root: Array2<f64>,
    null: Array2<f64>,
}

/// Scores parser actions from the encoder vectors of eight state positions
/// through one maxout layer.
#[derive(Clone, Debug)]
pub struct ParserModel {
    labels: Vec<String>,
    pieces: usize,
    pub root: Param,
    pub null: Param,
    pub hidden_w: Param,
    pub hidden_b: Param,
    pub out_w: Param,
    pub out_b: Param,
}

impl ParserModel {
    pub fn new<R: Rng>(labels: Vec<String>, width: usize, hidden: usize, pieces: usize, rng: &mut R) -> Self {
        let actions = 2 + 2 * labels.len();
        ParserModel {
            labels,
            pieces,
            root: Param::uniform("parser.root", 1, width, 0.1, rng),
            null: Param::uniform("parser.null", N_SLOTS, width, 0.1, rng),
            hidden_w: Param::glorot("parser.hidden.w", N_SLOTS * width, hidden * pieces, rng),
            hidden_b: Param::zeros("parser.hidden.b", 1, hidden * pieces),
            out_w: Param::zeros("parser.out.w", hidden, actions),
            out_b: Param::zeros("parser.out.b", 1, actions),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_actions(&self) -> usize {
        2 + 2 * self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    fn width(&self) -> usize {
        self.root.value.ncols()
    }

    /// Concatenated slot vectors, `m × 8W`. `h` holds the sentence's tokens.
    fn features(&self, h: &ArrayView2<f64>, slots: &[[Slot; N_SLOTS]]) -> Array2<f64> {
        let w = self.width();
        let mut x = Array2::zeros((slots.len(), N_SLOTS * w));
        for (i, state) in slots.iter().enumerate() {
            for (k, slot) in state.iter().enumerate() {
                let src = match *slot {
                    Slot::Node(id) => h.row(id - 1),
                    Slot::Root => self.root.value.row(0),
                    Slot::Null => self.null.value.row(k),
                };
                x.slice_mut(s![i, k * w..(k + 1) * w]).assign(&src);
            }
        }
        x
    }

    fn scores(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Vec<u8>) {
        let z = affine(&x.view(), &self.hidden_w.value, &self.hidden_b.value);
        let (hid, which) = maxout(&z, self.pieces);
        let logits = affine(&hid.view(), &self.out_w.value, &self.out_b.value);
        (logits, hid, which)
    }

    /// Summed action cross-entropy over `examples`, scaled by `scale`.
    /// Accumulates parameter gradients and returns the loss together with
    /// the gradient for the sentence's encoder rows.
    pub fn loss(&mut self, h: &ArrayView2<f64>, examples: &[ParserExample], scale: f64) -> (f64, Array2<f64>) {
        let w = self.width();
        let mut dh = Array2::zeros(h.raw_dim());
        if examples.is_empty() {
            return (0.0, dh);
        }
        let slots: Vec<[Slot; N_SLOTS]> = examples.iter().map(|e| e.slots).collect();
        let x = self.features(h, &slots);
        let (logits, hid, which) = self.scores(&x);
        let targets: Vec<Option<usize>> = examples.iter().map(|e| Some(e.gold)).collect();
        let mask: Vec<Vec<bool>> = examples.iter().map(|e| e.legal.clone()).collect();
        let (loss, mut dlogits) = softmax_xent(&logits, &targets, Some(&mask));
        dlogits *= scale;

        self.out_w.grad += &hid.t().dot(&dlogits);
        self.out_b.grad += &sum_rows(&dlogits);
        let dhid = dlogits.dot(&self.out_w.value.t());
        let dz = maxout_backward(&dhid, &which, self.pieces);
        self.hidden_w.grad += &x.t().dot(&dz);
        self.hidden_b.grad += &sum_rows(&dz);
        let dx = dz.dot(&self.hidden_w.value.t());

        for (i, state) in slots.iter().enumerate() {
            for (k, slot) in state.iter().enumerate() {
                let g = dx.slice(s![i, k * w..(k + 1) * w]);
                match *slot {
                    Slot::Node(id) => {
                        let mut row = dh.row_mut(id - 1);
                        row += &g;
                    }
                    Slot::Root => {
                        let mut row = self.root.grad.row_mut(0);
                        row += &g;
                    }
                    Slot::Null => {
                        let mut row = self.null.grad.row_mut(k);
                        row += &g;
                    }
                }
            }
        }
        (loss * scale, dh)
    }

    /// Hidden-layer contributions of every slot source for one sentence.
    /// The hidden pre-activation of a state is the bias plus the sum of its
    /// slots' rows, equal to the dense product up to summation order.
    fn precompute(&self, h: &ArrayView2<f64>) -> Array2<f64> {
        let w = self.width();
        let hp = self.hidden_w.value.ncols();
        let mut tokens = Array2::zeros((h.nrows(), N_SLOTS * hp));
        for k in 0..N_SLOTS {
            let wk = self.hidden_w.value.slice(s![k * w..(k + 1) * w, ..]);
            tokens.slice_mut(s![.., k * hp..(k + 1) * hp]).assign(&h.dot(&wk));
        }
        tokens
    }

    /// Hidden-layer rows of the learned root and null vectors, per slot.
    fn precompute_fixed(&self) -> FixedRows {
        let w = self.width();
        let hp = self.hidden_w.value.ncols();
        let mut root = Array2::zeros((N_SLOTS, hp));
        let mut null = Array2::zeros((N_SLOTS, hp));
        for k in 0..N_SLOTS {
            let wk = self.hidden_w.value.slice(s![k * w..(k + 1) * w, ..]);
            root.row_mut(k).assign(&self.root.value.row(0).dot(&wk));
            null.row_mut(k).assign(&self.null.value.row(k).dot(&wk));
        }
        FixedRows { root, null }
    }

    /// Greedy action choice in `state`, if any action is legal.
    fn best_action(&self, tokens: &Array2<f64>, fixed: &FixedRows, state: &ParserState, z: &mut [f64], hid: &mut [f64]) -> Option<Action> {
        let hp = z.len();
        z.copy_from_slice(self.hidden_b.value.as_slice().expect("contiguous bias"));
        for (k, slot) in state.slots().iter().enumerate() {
            let src = match *slot {
                Slot::Node(id) => tokens.slice(s![id - 1, k * hp..(k + 1) * hp]),
                Slot::Root => fixed.root.row(k),
                Slot::Null => fixed.null.row(k),
            };
            for (acc, &v) in z.iter_mut().zip(src.iter()) {
                *acc += v;
            }
        }
        for (j, out) in hid.iter_mut().enumerate() {
            let group = &z[j * self.pieces..(j + 1) * self.pieces];
            *out = group.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        let mut logits = ndarray::ArrayView1::from(&*hid).dot(&self.out_w.value);
        logits += &self.out_b.value.row(0);
        let n_labels = self.labels.len();
        argmax(logits.as_slice().expect("contiguous row"), |i| {
            state.is_legal(Action::from_index(i, n_labels))
        })
        .map(|i| Action::from_index(i, n_labels))
    }

    /// Parses one sentence from its encoder rows. Returns, per token, the
    /// head node (`0` for the root) and relation. The result is always a
    /// single-rooted tree.
    pub fn parse(&self, h: &ArrayView2<f64>) -> Vec<(usize, String)> {
        self.parse_with(h, &self.precompute_fixed())
    }

    /// Parses every sentence `range` of the document rows `h`.
    pub fn parse_sentences(&self, h: &ArrayView2<f64>, ranges: &[Range<usize>]) -> Vec<Vec<(usize, String)>> {
        let fixed = self.precompute_fixed();
        ranges
            .iter()
            .map(|r| self.parse_with(&h.slice(s![r.clone(), ..]), &fixed))
            .collect()
    }

    fn parse_with(&self, h: &ArrayView2<f64>, fixed: &FixedRows) -> Vec<(usize, String)> {
        let n = h.nrows();
        let mut state = ParserState::new(n);
        let tokens = self.precompute(h);
        let mut z = vec![0.0; self.hidden_w.value.ncols()];
        let mut hid = vec![0.0; self.out_w.value.nrows()];
        while let Some(action) = self.best_action(&tokens, fixed, &state, &mut z, &mut hid) {
            state
                .apply(action)
                .expect("only legal actions are chosen");
        }
        let mut out: Vec<Option<(usize, String)>> = (1..=n)
            .map(|i| {
                state
                    .head(i)
                    .map(|head| (head, self.labels[state.label(i).expect("labelled arc")].clone()))
            })
            .collect();
        repair_tree(&mut out);
        out.into_iter().map(|a| a.expect("repaired")).collect()
    }
}

/// Makes a forest of arcs (head node, relation) a single-rooted tree: the
/// first root child is kept, other root children and unattached tokens are
/// attached to it with the relation `dep`. Without a root child, the first
/// unattached token becomes the root.
pub fn repair_tree(arcs: &mut [Option<(usize, String)>]) {
    if arcs.is_empty() {
        return;
    }
    let root_child = match arcs.iter().position(|a| matches!(a, Some((ROOT, _)))) {
        Some(i) => i,
        None => {
            let i = arcs
                .iter()
                .position(Option::is_none)
                .expect("an arc forest without root arcs has an unattached token");
            arcs[i] = Some((ROOT, ROOT_LABEL.to_owned()));
            i
        }
    };
    for (i, arc) in arcs.iter_mut().enumerate() {
        let orphan = match arc {
            None => true,
            Some((ROOT, _)) => i != root_child,
            Some(_) => false,
        };
        if orphan {
            *arc = Some((root_child + 1, REPAIR_LABEL.to_owned()));
        }
    }
}

impl HasParams for ParserModel {
    fn params(&self) -> Vec<&Param> {
        vec![
            &self.root,
            &self.null,
            &self.hidden_w,
            &self.hidden_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.root,
            &mut self.null,
            &mut self.hidden_w,
            &mut self.hidden_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }
}
