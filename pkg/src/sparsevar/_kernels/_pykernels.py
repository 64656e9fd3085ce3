"""Pure-Python fallback for the compiled kernels (same signatures and results)."""

import numpy as np


def lasso_cd_gram(G, C, W, pen, max_iter, tol):
    k, d = W.shape
    diag = np.diag(G)
    worst = 0
    all_conv = True
    for i in range(k):
        w = W[i]
        r = C[i] - G @ w
        conv = False
        it = 0
        while it < max_iter:
            it += 1
            maxdelta = 0.0
            maxw = 0.0
            for j in range(d):
                wj = w[j]
                gjj = diag[j]
                if gjj <= 0.0:
                    new = 0.0
                else:
                    q = r[j] + gjj * wj
                    thr = 0.5 * pen[i, j]
                    if q > thr:
                        new = (q - thr) / gjj
                    elif q < -thr:
                        new = (q + thr) / gjj
                    else:
                        new = 0.0
                delta = new - wj
                if delta != 0.0:
                    w[j] = new
                    r -= delta * G[:, j]
                    maxdelta = max(maxdelta, abs(delta))
                maxw = max(maxw, abs(new))
            if maxdelta == 0.0 or maxdelta <= tol * maxw:
                conv = True
                break
        worst = max(worst, it)
        all_conv = all_conv and conv
    return worst, all_conv


def group_sweep(v, idx, ptr, thr):
    for g in range(len(thr)):
        sel = idx[ptr[g]:ptr[g + 1]]
        seg = v[sel]
        nrm = np.sqrt(np.dot(seg, seg))
        if nrm <= thr[g]:
            v[sel] = 0.0
        elif thr[g] > 0.0:
            v[sel] = seg * (1.0 - thr[g] / nrm)
