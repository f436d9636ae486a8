"""Severity classification pipeline: scaling, extra-trees selection, RBF-SVM, LOSOCV."""

import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import SEVERITIES
from .errors import NoConvergence, SingleClass, SingleSpeaker, TooFewRows, ZeroBaseline

DEFAULT_GRID = tuple(10.0 ** k for k in range(-4, 5))
DEFAULT_TREES = 100
DEFAULT_SEED = 42


# --------------------------------------------------------------------------
# standardization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray  # zeros replaced by 1, so constant columns map to 0


def fit_scaler(X):
    if len(X) < 2:
        raise TooFewRows(f"need >= 2 rows to fit a scaler, got {len(X)}")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    return ScalerParams(mean=mean, std=std)


def apply_scaler(params, X):
    return (X - params.mean) / params.std


def impute_column_means(X_train, *others):
    """Replace NaN entries with training-column means (0 for all-NaN columns)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        means = np.nanmean(X_train, axis=0)
    means = np.where(np.isfinite(means), means, 0.0)
    out = []
    for X in (X_train,) + others:
        Xi = X.copy()
        nan = ~np.isfinite(Xi)
        Xi[nan] = np.broadcast_to(means, Xi.shape)[nan]
        out.append(Xi)
    return out if len(out) > 1 else out[0]


# --------------------------------------------------------------------------
# extremely randomized trees
# --------------------------------------------------------------------------

class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "counts")

    def __init__(self, feature=None, threshold=None, left=None, right=None, counts=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.counts = counts


def _gini(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - np.sum(p * p)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    importances: np.ndarray  # per feature, non-negative, sums to 1
    n_classes: int
    seed: int


def fit_extra_trees(X, y, n_trees=DEFAULT_TREES, seed=DEFAULT_SEED, k_features=None):
    """Extremely randomized trees: full sample, one uniform-random threshold
    per candidate feature, best Gini decrease wins.

    Importance is the total impurity decrease attributed to each feature,
    averaged over trees and normalized to sum 1.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass("extra trees need >= 2 classes")
    y_idx = np.searchsorted(classes, y)
    n, d = X.shape
    if k_features is None:
        k_features = max(1, int(round(np.sqrt(d))))
    rng = np.random.default_rng(seed)
    trees = []
    importance_sum = np.zeros(d)

    def grow(idx, importances):
        counts = np.bincount(y_idx[idx], minlength=len(classes)).astype(float)
        node_gini = _gini(counts)
        if len(idx) < 2 or node_gini == 0.0:
            return _TreeNode(counts=counts)
        sub = X[idx]
        spread = sub.max(axis=0) - sub.min(axis=0)
        usable = np.nonzero(spread > 0)[0]
        if len(usable) == 0:
            return _TreeNode(counts=counts)
        k = min(k_features, len(usable))
        cand = rng.choice(usable, size=k, replace=False)
        best = None
        for f in cand:
            col = sub[:, f]
            lo, hi = col.min(), col.max()
            thr = rng.uniform(lo, hi)
            mask = col <= thr
            nl = int(mask.sum())
            if nl == 0 or nl == len(idx):
                continue
            cl = np.bincount(y_idx[idx[mask]], minlength=len(classes)).astype(float)
            cr = counts - cl
            child = (nl * _gini(cl) + (len(idx) - nl) * _gini(cr)) / len(idx)
            decrease = node_gini - child
            if best is None or decrease > best[0]:
                best = (decrease, f, thr, mask)
        if best is None:
            return _TreeNode(counts=counts)
        decrease, f, thr, mask = best
        importances[f] += len(idx) / n * decrease
        left = grow(idx[mask], importances)
        right = grow(idx[~mask], importances)
        return _TreeNode(feature=int(f), threshold=float(thr), left=left, right=right)

    for _ in range(n_trees):
        imp = np.zeros(d)
        root = grow(np.arange(n), imp)
        trees.append(root)
        total = imp.sum()
        if total > 0:
            importance_sum += imp / total
    importances = importance_sum / n_trees
    total = importances.sum()
    if total > 0:
        importances = importances / total
    else:
        importances = np.full(d, 1.0 / d)
    return ForestModel(trees=tuple(trees), importances=importances, n_classes=len(classes), seed=seed)


def select_features(model, feature_names):
    """Features whose importance strictly exceeds the mean importance.

    An empty strict-inequality selection falls back to the full set.
    """
    imp = model.importances
    mean = imp.mean()
    selected = [name for name, v in zip(feature_names, imp) if v > mean]
    if not selected:
        warnings.warn("feature selection kept nothing; falling back to all features")
        return list(feature_names)
    return selected


# --------------------------------------------------------------------------
# RBF SVM via sequential minimal optimization
# --------------------------------------------------------------------------

def rbf_kernel(A, B, gamma):
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def smo_solve(K, y, C, tol=1e-3, max_passes=10000, warm_alphas=None):
    """Binary SVM dual via SMO on a precomputed kernel matrix.

    y in {-1, +1}. Each iteration updates the maximal-violating pair (the
    steepest-ascent choice of Keerthi et al.), which keeps the number of
    updates small; a full deterministic sweep over all pairs serves as a
    fallback when the chosen pair cannot move. `warm_alphas` seeds the
    solver with a feasible point (e.g. the optimum at a smaller C); the
    stopping rule is unchanged, so the result still satisfies the KKT
    conditions at `tol`.
    """
    n = len(y)
    yf = y.astype(float)
    Ky = K * yf[None, :]
    eps = 1e-12
    if warm_alphas is not None and len(warm_alphas) == n and np.max(warm_alphas) <= C:
        alphas = np.array(warm_alphas, dtype=float)
        F = Ky @ alphas - yf  # f(x) - y without the bias term
    else:
        alphas = np.zeros(n)
        F = -yf
    pos = yf > 0

    def step(i, j):
        """One analytic pair update; returns True if alphas moved."""
        nonlocal F
        ai_old, aj_old = alphas[i], alphas[j]
        if y[i] != y[j]:
            lo, hi = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
        else:
            lo, hi = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
        if lo >= hi:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        # degenerate (duplicate-point) pairs take the full step to the box edge
        denom = eta if eta < -eps else -eps
        aj = min(max(aj_old - y[j] * (F[i] - F[j]) / denom, lo), hi)
        if abs(aj - aj_old) < 1e-12:
            return False
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        F += (ai - ai_old) * Ky[:, i] + (aj - aj_old) * Ky[:, j]
        alphas[i], alphas[j] = ai, aj
        return True

    def violating_pair():
        """Most violating (up, low) indices and their F bounds."""
        up = np.where(pos, alphas < C - eps, alphas > eps)
        low = np.where(pos, alphas > eps, alphas < C - eps)
        fu = np.where(up, F, np.inf)
        fl = np.where(low, F, -np.inf)
        i = int(np.argmin(fu))
        j = int(np.argmax(fl))
        return i, j, fu[i], fl[j]

    def bias(fu, fl):
        if np.isfinite(fu) and np.isfinite(fl):
            return -0.5 * (fu + fl)
        if np.isfinite(fu):
            return -fu
        if np.isfinite(fl):
            return -fl
        return 0.0

    def sweep(b):
        """Deterministic full sweep (fallback): first violator in index
        order, paired with the max-|F_i - F_j| partner, then the rest."""
        changed = 0
        for i in range(n):
            ri = (F[i] + b) * y[i]
            if not ((ri < -tol and alphas[i] < C) or (ri > tol and alphas[i] > 0)):
                continue
            diff = np.abs(F[i] - F)
            diff[i] = -1.0
            order = [int(np.argmax(diff))] + [j for j in range(n) if j != i]
            for j in order:
                if j != i and step(i, j):
                    changed += 1
                    break
        return changed

    for _ in range(max_passes):
        i, j, fu, fl = violating_pair()
        if fl - fu <= 2.0 * tol:
            return alphas, bias(fu, fl)
        if not step(i, j) and sweep(bias(fu, fl)) == 0:
            return alphas, bias(fu, fl)
    raise NoConvergence(f"SMO did not satisfy KKT within {max_passes} passes")


def dual_objective(alphas, y, K):
    """SVM dual objective for the box-constrained QP (to maximize)."""
    ay = alphas * y
    return float(np.sum(alphas) - 0.5 * ay @ K @ ay)


@dataclass(frozen=True)
class SvmModel:
    """One-vs-one RBF SVM over integer class labels."""

    classes: tuple
    gamma: float
    C: float
    machines: tuple  # per class pair: (class_a, class_b, X_sub, coef, b)

    def decision_votes(self, X):
        votes = np.zeros((len(X), len(self.classes)), dtype=int)
        cls_index = {c: k for k, c in enumerate(self.classes)}
        for ca, cb, X_sub, coef, b in self.machines:
            K = rbf_kernel(X, X_sub, self.gamma)
            f = K @ coef + b
            winners = np.where(f >= 0, cls_index[ca], cls_index[cb])
            votes[np.arange(len(X)), winners] += 1
        return votes

    def predict(self, X):
        votes = self.decision_votes(np.asarray(X, dtype=float))
        # argmax takes the lowest class index on vote ties
        return np.array([self.classes[k] for k in np.argmax(votes, axis=1)])


def train_svm(X, y, C, gamma, K_full=None, warm_cache=None):
    """Train a one-vs-one RBF SVM; X must already be standardized.

    `warm_cache` maps a class pair to the alphas of a previous solve on the
    same data (used to warm-start across an ascending C grid); it is updated
    in place with the new solutions.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = tuple(sorted(np.unique(y).tolist()))
    if len(classes) < 2:
        raise SingleClass("SVM needs >= 2 classes")
    if K_full is None:
        K_full = rbf_kernel(X, X, gamma)
    machines = []
    for a_i in range(len(classes)):
        for b_i in range(a_i + 1, len(classes)):
            ca, cb = classes[a_i], classes[b_i]
            mask = (y == ca) | (y == cb)
            idx = np.nonzero(mask)[0]
            yy = np.where(y[idx] == ca, 1.0, -1.0)
            K_sub = K_full[np.ix_(idx, idx)]
            warm = warm_cache.get((ca, cb)) if warm_cache is not None else None
            alphas, b = smo_solve(K_sub, yy, C, warm_alphas=warm)
            if warm_cache is not None:
                warm_cache[(ca, cb)] = alphas
            sv = alphas > 1e-12
            machines.append((ca, cb, X[idx][sv], (alphas * yy)[sv], b))
    return SvmModel(classes=classes, gamma=gamma, C=C, machines=machines)


# --------------------------------------------------------------------------
# leave-one-subject-out cross-validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldResult:
    speaker: str
    utterance_ids: tuple
    true_labels: tuple
    predictions: tuple
    selected_features: tuple
    best_C: float
    best_gamma: float


@dataclass(frozen=True)
class CvRun:
    folds: tuple
    accuracy: float  # percent
    feature_names: tuple

    def majority_selected(self):
        """Features selected in at least half of the folds."""
        counts = {}
        for fold in self.folds:
            for name in fold.selected_features:
                counts[name] = counts.get(name, 0) + 1
        half = len(self.folds) / 2.0
        return [n for n in self.feature_names if counts.get(n, 0) >= half]

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "folds": [
                {
                    "speaker": f.speaker,
                    "utterances": list(f.utterance_ids),
                    "true": list(f.true_labels),
                    "predicted": list(f.predictions),
                    "selected_features": list(f.selected_features),
                    "C": f.best_C,
                    "gamma": f.best_gamma,
                }
                for f in self.folds
            ],
        }


@dataclass(frozen=True)
class CvReport:
    accuracy_all: float
    accuracy_selected: float
    relative_increase_pct: float
    selected_features: tuple
    n_selected: int
    run_all: CvRun
    run_selected: CvRun

    def to_dict(self):
        return {
            "accuracy_all": self.accuracy_all,
            "accuracy_selected": self.accuracy_selected,
            "relative_increase": self.relative_increase_pct,
            "selected_features": list(self.selected_features),
            "n_selected": self.n_selected,
            "runs": {"all": self.run_all.to_dict(), "selected": self.run_selected.to_dict()},
        }


def relative_increase(all_pct, selected_pct):
    """Relative accuracy increase of the selected-feature run, in %."""
    if all_pct <= 0:
        raise ZeroBaseline("baseline accuracy must be positive")
    return round(100.0 * (selected_pct - all_pct) / all_pct, 2)


def _fit_predict(X_tr, y_tr, X_te, C, gamma, K_tr=None, warm_cache=None):
    model = train_svm(X_tr, y_tr, C, gamma, K_full=K_tr, warm_cache=warm_cache)
    return model.predict(X_te)


def _inner_grid_search(X, y, speakers, grid):
    """Pick (C, gamma) by LOSOCV accuracy over the training speakers.

    Ties go to the first grid point in (C asc, gamma asc) order.
    """
    uniq = sorted(set(speakers))
    folds = []
    for spk in uniq:
        te = np.array([s == spk for s in speakers])
        folds.append((~te, te))
    scores = {}
    for tr_mask, te_mask in folds:
        y_tr = y[tr_mask]
        if len(np.unique(y_tr)) < 2:
            continue
        X_tr_raw, X_te_raw = impute_column_means(X[tr_mask], X[te_mask])
        scaler = fit_scaler(X_tr_raw)
        X_tr = apply_scaler(scaler, X_tr_raw)
        X_te = apply_scaler(scaler, X_te_raw)
        sq_tr = (
            np.sum(X_tr * X_tr, axis=1)[:, None]
            + np.sum(X_tr * X_tr, axis=1)[None, :]
            - 2.0 * X_tr @ X_tr.T
        )
        np.maximum(sq_tr, 0.0, out=sq_tr)
        for gamma in grid:
            K_tr = np.exp(-gamma * sq_tr)
            # warm-start each machine from its optimum at the previous
            # (smaller) C; the grid is ascending, so the start stays feasible
            warm_cache = {} if list(grid) == sorted(grid) else None
            for C in grid:
                try:
                    pred = _fit_predict(X_tr, y_tr, X_te, C, gamma, K_tr=K_tr, warm_cache=warm_cache)
                except NoConvergence:
                    continue
                key = (C, gamma)
                correct, total = scores.get(key, (0, 0))
                scores[key] = (correct + int(np.sum(pred == y[te_mask])), total + int(te_mask.sum()))
    best = None
    for C in grid:
        for gamma in grid:
            correct, total = scores.get((C, gamma), (0, 0))
            acc = correct / total if total else -1.0
            if best is None or acc > best[0]:
                best = (acc, C, gamma)
    return best[1], best[2]


def grid_search_losocv(
    X,
    y,
    speakers,
    utterance_ids,
    feature_names,
    grid=DEFAULT_GRID,
    seed=DEFAULT_SEED,
    n_trees=DEFAULT_TREES,
    select=False,
    preselected=None,
):
    """LOSOCV classification: one fold per speaker, leak-free pipeline.

    Scaler, forest (when select=True), and SVM are fitted on the training
    fold only; hyperparameters come from an inner LOSOCV over the training
    speakers. `preselected` restricts every fold to a fixed feature subset
    (the selection-outside-cv replication mode).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    speakers = list(speakers)
    feature_names = tuple(feature_names)
    uniq = sorted(set(speakers))
    if len(uniq) < 2:
        raise SingleSpeaker("LOSOCV needs >= 2 speakers")
    name_to_idx = {n: i for i, n in enumerate(feature_names)}
    folds = []
    correct = 0
    for fold_no, spk in enumerate(uniq):
        te_mask = np.array([s == spk for s in speakers])
        tr_mask = ~te_mask
        y_tr = y[tr_mask]
        tr_speakers = [s for s in speakers if s != spk]
        X_tr_raw, X_te_raw = impute_column_means(X[tr_mask], X[te_mask])
        if preselected is not None:
            chosen = list(preselected)
        elif select:
            scaler = fit_scaler(X_tr_raw)
            forest = fit_extra_trees(
                apply_scaler(scaler, X_tr_raw), y_tr, n_trees=n_trees, seed=seed + fold_no
            )
            chosen = select_features(forest, feature_names)
        else:
            chosen = list(feature_names)
        cols = np.array([name_to_idx[n] for n in chosen])
        X_tr_sub = X_tr_raw[:, cols]
        X_te_sub = X_te_raw[:, cols]
        C, gamma = _inner_grid_search(X[tr_mask][:, cols], y_tr, tr_speakers, grid)
        scaler = fit_scaler(X_tr_sub)
        X_tr_s = apply_scaler(scaler, X_tr_sub)
        X_te_s = apply_scaler(scaler, X_te_sub)
        pred = _fit_predict(X_tr_s, y_tr, X_te_s, C, gamma)
        correct += int(np.sum(pred == y[te_mask]))
        folds.append(
            FoldResult(
                speaker=spk,
                utterance_ids=tuple(u for u, m in zip(utterance_ids, te_mask) if m),
                true_labels=tuple(y[te_mask].tolist()),
                predictions=tuple(pred.tolist()),
                selected_features=tuple(chosen),
                best_C=C,
                best_gamma=gamma,
            )
        )
    accuracy = 100.0 * correct / len(y)
    return CvRun(folds=tuple(folds), accuracy=accuracy, feature_names=feature_names)


def run_classification(
    X,
    y,
    speakers,
    utterance_ids,
    feature_names,
    grid=DEFAULT_GRID,
    seed=DEFAULT_SEED,
    n_trees=DEFAULT_TREES,
    selection_outside_cv=False,
):
    """Full Analysis-2 protocol: LOSOCV on all features, then with selection."""
    run_all = grid_search_losocv(
        X, y, speakers, utterance_ids, feature_names, grid=grid, seed=seed, n_trees=n_trees
    )
    if selection_outside_cv:
        X_imp = impute_column_means(np.asarray(X, dtype=float))
        scaler = fit_scaler(X_imp)
        forest = fit_extra_trees(apply_scaler(scaler, X_imp), np.asarray(y), n_trees=n_trees, seed=seed)
        chosen = select_features(forest, feature_names)
        run_sel = grid_search_losocv(
            X, y, speakers, utterance_ids, feature_names,
            grid=grid, seed=seed, n_trees=n_trees, preselected=chosen,
        )
        selected = list(chosen)
    else:
        run_sel = grid_search_losocv(
            X, y, speakers, utterance_ids, feature_names,
            grid=grid, seed=seed, n_trees=n_trees, select=True,
        )
        selected = run_sel.majority_selected()
    return CvReport(
        accuracy_all=run_all.accuracy,
        accuracy_selected=run_sel.accuracy,
        relative_increase_pct=(
            relative_increase(run_all.accuracy, run_sel.accuracy)
            if run_all.accuracy > 0
            else None
        ),
        selected_features=tuple(selected),
        n_selected=len(selected),
        run_all=run_all,
        run_selected=run_sel,
    )


def severity_to_int(severities):
    order = {s: i for i, s in enumerate(SEVERITIES)}
    return np.array([order[s] for s in severities])
