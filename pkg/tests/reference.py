"""Independent reference implementations the test suite checks against.

Everything here is deliberately written the slow, obvious way (scalar
loops, no shared code with the package) so it can serve as an oracle for
the optimized production paths.
"""

import math

import numpy as np


def naive_conv2d(x, w, b, stride=1, padding="same"):
    """Six-nested-loop cross-correlation over NHWC input."""
    n, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape

    def axis(size, k):
        if padding == "valid":
            return (size - k) // stride + 1, 0
        out = -(-size // stride)
        total = max((out - 1) * stride + k - size, 0)
        return out, total // 2

    ho, pt = axis(h, kh)
    wo, pl = axis(wd, kw)
    out = np.zeros((n, ho, wo, cout), dtype=np.float64)
    for ni in range(n):
        for oy in range(ho):
            for ox in range(wo):
                for oc in range(cout):
                    acc = 0.0
                    for ky in range(kh):
                        for kx in range(kw):
                            iy = oy * stride + ky - pt
                            ix = ox * stride + kx - pl
                            if 0 <= iy < h and 0 <= ix < wd:
                                for ic in range(cin):
                                    acc += float(x[ni, iy, ix, ic]) * float(w[ky, kx, ic, oc])
                    out[ni, oy, ox, oc] = acc + float(b[oc])
    return out


def naive_maxpool(x):
    """Per-window double-loop 2x2/2 max."""
    n, h, w, c = x.shape
    out = np.empty((n, h // 2, w // 2, c), dtype=x.dtype)
    for ni in range(n):
        for oy in range(h // 2):
            for ox in range(w // 2):
                for ci in range(c):
                    out[ni, oy, ox, ci] = x[ni, 2 * oy:2 * oy + 2, 2 * ox:2 * ox + 2, ci].max()
    return out


def naive_resize_bilinear(px, out_h, out_w):
    """Scalar corner-aligned bilinear resize of a uint8 HxWx3 raster."""
    h, w = px.shape[:2]
    out = np.empty((out_h, out_w, 3), dtype=np.uint8)
    for oy in range(out_h):
        sy = oy * (h - 1) / (out_h - 1) if out_h > 1 else 0.0
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for ox in range(out_w):
            sx = ox * (w - 1) / (out_w - 1) if out_w > 1 else 0.0
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            for c in range(3):
                top = px[y0, x0, c] * (1 - fx) + px[y0, x1, c] * fx
                bot = px[y1, x0, c] * (1 - fx) + px[y1, x1, c] * fx
                out[oy, ox, c] = int(round(top * (1 - fy) + bot * fy))
    return out


def adam_reference(param0, grad_seq, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Scalar-loop Adam recurrence in float64; returns the final parameters."""
    p = [float(v) for v in np.asarray(param0).ravel()]
    m = [0.0] * len(p)
    v = [0.0] * len(p)
    for t, grads in enumerate(grad_seq, start=1):
        g = [float(x) for x in np.asarray(grads).ravel()]
        for i in range(len(p)):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
            m_hat = m[i] / (1.0 - beta1 ** t)
            v_hat = v[i] / (1.0 - beta2 ** t)
            p[i] -= lr * m_hat / (math.sqrt(v_hat) + eps)
    return np.array(p).reshape(np.asarray(param0).shape)


def counting_report(true_labels, predicted_labels, k):
    """Brute-force confusion counts and per-class ratios from raw pairs."""
    confusion = [[0] * k for _ in range(k)]
    for t, p in zip(true_labels, predicted_labels):
        confusion[t][p] += 1
    precision, recall, f1 = [0.0] * k, [0.0] * k, [0.0] * k
    for c in range(k):
        tp = confusion[c][c]
        fp = sum(confusion[r][c] for r in range(k)) - tp
        fn = sum(confusion[c][r] for r in range(k)) - tp
        if tp + fp > 0:
            precision[c] = tp / (tp + fp)
        if tp + fn > 0:
            recall[c] = tp / (tp + fn)
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
    total = len(true_labels)
    accuracy = sum(confusion[c][c] for c in range(k)) / total if total else 0.0
    return np.array(confusion), np.array(precision), np.array(recall), np.array(f1), accuracy


def finite_diff(f, x, eps=1e-5):
    """Central-difference gradient of scalar f at x (float64)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        plus = x.copy()
        minus = x.copy()
        plus[idx] += eps
        minus[idx] -= eps
        grad[idx] = (f(plus) - f(minus)) / (2.0 * eps)
    return grad


def max_rel_err(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())
