"""Brute-force scalar reference implementations used to pin the fast paths.

Everything here is written with plain Python loops and math so it cannot
share vectorization bugs with the library code it checks.
"""

import math


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv)


def paper_loss(h_a, h_b, tau):
    """Positive-pairs-only loss, term by term."""
    n = len(h_a)
    sims = [cosine(h_a[i], h_b[i]) / tau for i in range(n)]
    denom = sum(math.exp(s) for s in sims)
    return sum(-math.log(math.exp(s) / denom) for s in sims) / n


def simclr_loss(h_a, h_b, tau):
    """NT-Xent by explicit enumeration over all 2N anchors."""
    z = [list(row) for row in h_a] + [list(row) for row in h_b]
    m = len(z)
    n = m // 2
    total = 0.0
    for i in range(m):
        pos = i + n if i < n else i - n
        numer = math.exp(cosine(z[i], z[pos]) / tau)
        denom = sum(
            math.exp(cosine(z[i], z[j]) / tau) for j in range(m) if j != i
        )
        total += -math.log(numer / denom)
    return total / m


def score_stats(query, reference, exclude_index=None):
    """(mu, sigma) per query row; both divide by the number of summed sims."""
    out = []
    for qi, q in enumerate(query):
        sims = [
            cosine(q, r)
            for ri, r in enumerate(reference)
            if exclude_index is None or ri != qi
        ]
        mu = sum(sims) / len(sims)
        var = sum((s - mu) ** 2 for s in sims) / len(sims)
        out.append((mu, math.sqrt(var)))
    return out


def nearest_centroid_distances(centroids, query):
    out = []
    for q in query:
        best = min(
            math.sqrt(sum((a - b) ** 2 for a, b in zip(q, c))) for c in centroids
        )
        out.append(best)
    return out


def mlp_forward(weights, biases, x, relu_hidden=True):
    """Scalar-loop forward pass through an affine/ReLU chain (identity output)."""
    h = list(x)
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        out = []
        for j in range(len(b)):
            acc = b[j]
            for i in range(len(h)):
                acc += h[i] * W[i][j]
            out.append(acc)
        if relu_hidden and l < last:
            out = [v if v > 0 else 0.0 for v in out]
        h = out
    return h


def autoencoder_scores(enc_w, enc_b, dec_w, dec_b, X):
    """Per-row mean squared reconstruction error via the scalar forward pass."""
    out = []
    for row in X:
        code = mlp_forward(enc_w, enc_b, row)
        recon = mlp_forward(dec_w, dec_b, code)
        out.append(sum((a - b) ** 2 for a, b in zip(recon, row)) / len(row))
    return out


def auc_pairwise(scores, labels):
    """Normalized pairwise-comparison statistic, ties credited one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))
