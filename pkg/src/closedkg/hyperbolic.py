"""Poincare-ball embeddings of the entity-class hierarchy.

Trains per-node vectors inside the open unit ball so that hyponymy-related
nodes end up close under the hyperbolic distance, then serves per-entity
class embeddings as a transform. Optimization is Riemannian SGD: the
Euclidean gradient is rescaled by (1 - ||theta||^2)^2 / 4 and iterates are
projected back inside the ball.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_random_state

from .graph import ClassHierarchy

__all__ = [
    "poincare_distance",
    "loss_and_grad",
    "riemannian_step",
    "PoincareEmbedding",
    "export_embeddings",
]


def _check_in_ball(x, name):
    norm = np.linalg.norm(x)
    if norm >= 1.0:
        raise ValueError("%s has norm %.6f, must be strictly inside the unit ball" % (name, norm))


def poincare_distance(u, v):
    """Hyperbolic distance arcosh(1 + 2||u-v||^2 / ((1-||u||^2)(1-||v||^2)))."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_in_ball(u, "u")
    _check_in_ball(v, "v")
    alpha = 1.0 - u @ u
    beta = 1.0 - v @ v
    diff = u - v
    gamma = 1.0 + 2.0 * (diff @ diff) / (alpha * beta)
    return float(np.arccosh(gamma))


def _distances_and_grads(u, W):
    """Distances from u to each row of W with gradients on both sides.

    Returns (dist, grad_u, grad_W): dist is (m,), grad_u[l] is the gradient
    of dist[l] w.r.t. u, grad_W[l] w.r.t. W[l]. Coincident points get zero
    gradient (the distance is at its minimum there).
    """
    alpha = 1.0 - u @ u
    beta = 1.0 - np.einsum("md,md->m", W, W)
    diff = u[None, :] - W
    sq = np.einsum("md,md->m", diff, diff)
    gamma = 1.0 + 2.0 * sq / (alpha * beta)
    dist = np.arccosh(gamma)
    root = np.sqrt(np.maximum(gamma * gamma - 1.0, 0.0))
    inv_root = np.where(root > 1e-12, 1.0 / np.maximum(root, 1e-12), 0.0)
    dot = W @ u
    w_sq = 1.0 - beta
    u_sq = 1.0 - alpha
    c_u = 4.0 * inv_root / beta
    coef_u = (w_sq - 2.0 * dot + 1.0) / (alpha * alpha)
    grad_u = c_u[:, None] * (coef_u[:, None] * u[None, :] - W / alpha)
    c_w = 4.0 * inv_root / alpha
    coef_w = (u_sq - 2.0 * dot + 1.0) / (beta * beta)
    grad_W = c_w[:, None] * (coef_w[:, None] * W - u[None, :] / beta[:, None])
    return dist, grad_u, grad_W


def loss_and_grad(vectors, batch):
    """Softmax ranking loss over hyponymy pairs with its Euclidean gradients.

    Each batch item is (i, j, negatives) where `negatives` lists the node ids
    forming the softmax denominator; per the sampling convention the positive
    j is included in it, which keeps the loss a proper -log probability
    (non-negative, and exactly 0 when the denominator is {j} alone).

    Returns (loss, grads) with grads a dict node id -> accumulated gradient.
    """
    total = 0.0
    grads = {}

    def _add(node, g):
        if node in grads:
            grads[node] += g
        else:
            grads[node] = g.copy()

    for i, j, negatives in batch:
        if len(negatives) == 0:
            raise ValueError("empty softmax denominator for pair (%d, %d)" % (i, j))
        u = vectors[i]
        targets = np.fromiter(negatives, dtype=int)
        W = vectors[targets]
        dist, grad_u, grad_W = _distances_and_grads(u, W)
        d_pos, gu_pos, gj_pos = _distances_and_grads(u, vectors[j][None, :])
        # loss = d(i,j) + log sum_l exp(-d(i, neg_l)), stabilized
        m = np.max(-dist)
        lse = m + np.log(np.sum(np.exp(-dist - m)))
        total += float(d_pos[0] + lse)
        p = np.exp(-dist - lse)  # softmax weights over the denominator
        _add(i, gu_pos[0] - p @ grad_u)
        _add(j, gj_pos[0])
        for l, node in enumerate(targets):
            _add(int(node), -p[l] * grad_W[l])
    return total, grads


def riemannian_step(vectors, grads, lr, ball_margin=1e-5):
    """Apply one Riemannian SGD step in place and return the array.

    Each touched vector moves by -lr * ((1 - ||theta||^2)^2 / 4) * grad and is
    rescaled to norm 1 - ball_margin whenever it would reach the boundary.
    """
    for node, g in grads.items():
        theta = vectors[node]
        scale = (1.0 - theta @ theta) ** 2 / 4.0
        theta = theta - lr * scale * g
        norm = np.linalg.norm(theta)
        if norm >= 1.0 - ball_margin:
            theta = theta * ((1.0 - ball_margin) / norm)
        vectors[node] = theta
    return vectors


class PoincareEmbedding(BaseEstimator):
    """Trains hierarchy embeddings in the Poincare ball; transform looks up
    the class vector of each entity.

    Parameters
    ----------
    dim : int, embedding width (default 100)
    lr : float, learning rate after burn-in
    epochs : int, passes over the hyponymy pairs
    neg_count : int, negatives sampled per pair per epoch
    burn_in_epochs : int, initial epochs run at lr / 10
    ball_margin : float, boundary margin epsilon in (0, 1e-3]
    random_state : int or RandomState

    Attributes
    ----------
    embeddings_ : (n_nodes, dim) array, all norms <= 1 - ball_margin
    node_index_ : dict label -> row, covering every entity and class
    class_of_ : dict entity label -> class label
    loss_history_ : mean pair loss per epoch
    """

    def __init__(self, dim=100, lr=0.1, epochs=50, neg_count=10,
                 burn_in_epochs=10, ball_margin=1e-5, random_state=0):
        self.dim = dim
        self.lr = lr
        self.epochs = epochs
        self.neg_count = neg_count
        self.burn_in_epochs = burn_in_epochs
        self.ball_margin = ball_margin
        self.random_state = random_state

    def _check_params(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 < self.ball_margin <= 1e-3:
            raise ValueError("ball_margin must lie in (0, 1e-3]")
        if self.neg_count < 1:
            raise ValueError("neg_count must be positive")
        if self.epochs < 1 or self.burn_in_epochs < 0:
            raise ValueError("epochs must be positive and burn_in_epochs non-negative")

    def fit(self, hierarchy, y=None):
        """Train on a ClassHierarchy or an iterable of (child, parent) pairs."""
        self._check_params()
        if not isinstance(hierarchy, ClassHierarchy):
            hierarchy = ClassHierarchy({}, list(hierarchy))
        if not hierarchy.hyponymy:
            raise ValueError("hierarchy is empty")
        rng = check_random_state(self.random_state)

        labels = hierarchy.nodes()
        index = {label: row for row, label in enumerate(labels)}
        pairs = [(index[c], index[p]) for c, p in hierarchy.hyponymy]
        n = len(labels)
        related = [set() for _ in range(n)]
        for i, j in pairs:
            related[i].add(j)
        candidates = [
            np.array([v for v in range(n) if v != i and v not in related[i]], dtype=int)
            for i in range(n)
        ]

        vectors = rng.uniform(-0.001, 0.001, size=(n, self.dim))
        history = []
        for epoch in range(self.epochs):
            lr = self.lr / 10.0 if epoch < self.burn_in_epochs else self.lr
            order = rng.permutation(len(pairs))
            epoch_loss = 0.0
            for pi in order:
                i, j = pairs[pi]
                cand = candidates[i]
                if len(cand) > self.neg_count:
                    negs = rng.choice(cand, size=self.neg_count, replace=False)
                else:
                    negs = cand
                denominator = [j] + [int(v) for v in negs]
                loss, grads = loss_and_grad(vectors, [(i, j, denominator)])
                riemannian_step(vectors, grads, lr, self.ball_margin)
                epoch_loss += loss
            history.append(epoch_loss / len(pairs))

        self.node_labels_ = labels
        self.node_index_ = index
        self.class_of_ = dict(hierarchy.class_of)
        self.embeddings_ = vectors
        self.loss_history_ = history
        return self

    def _require_fitted(self):
        if not hasattr(self, "embeddings_"):
            raise NotFittedError("this PoincareEmbedding is not fitted; call fit first")

    def node_vector(self, label):
        """Trained vector of any hierarchy node (entity or class)."""
        self._require_fitted()
        if label not in self.node_index_:
            raise KeyError("unknown hierarchy node %r" % label)
        return self.embeddings_[self.node_index_[label]]

    def class_vector(self, entity_label):
        """Trained vector of an entity's class node."""
        self._require_fitted()
        cls = self.class_of_.get(entity_label)
        if cls is None:
            raise KeyError("entity %r has no class assignment" % entity_label)
        return self.embeddings_[self.node_index_[cls]]

    def transform(self, entity_labels):
        """Class embedding per entity label; shape (len(entity_labels), dim)."""
        self._require_fitted()
        return np.stack([self.class_vector(label) for label in entity_labels])

    def fit_transform(self, hierarchy, entity_labels):
        return self.fit(hierarchy).transform(entity_labels)

    def distance(self, a, b):
        """Hyperbolic distance between two hierarchy nodes, by label."""
        return poincare_distance(self.node_vector(a), self.node_vector(b))


def export_embeddings(est, path):
    """Write label<TAB>v1...<TAB>v_dim rows plus a <path>.meta header file."""
    est._require_fitted()
    with open(path, "w", encoding="utf-8") as fh:
        for label in est.node_labels_:
            vec = est.embeddings_[est.node_index_[label]]
            fh.write(label + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")
    with open(str(path) + ".meta", "w", encoding="utf-8") as fh:
        fh.write("dim=%d\nseed=%s\nepochs=%d\n" % (est.dim, est.random_state, est.epochs))
