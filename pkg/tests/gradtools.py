"""Gradient-check helpers shared by the unit and acceptance suites.

Finite differences are the independent oracle for the analytic backward
pass; these helpers run both on a bare unit list so single-unit cells can
be checked as well as full stacks.
"""

from dataclasses import fields

import numpy as np

from emgrt.rnn import _loss_from_yhats, _stack_backward, _stack_forward


def batch_loss(units, arch, xs, labels):
    yhats, _, _ = _stack_forward(units, arch, xs)
    return _loss_from_yhats(yhats, labels)


def analytic_grads(units, arch, xs, labels):
    yhats, fwd, bwd = _stack_forward(units, arch, xs)
    return _stack_backward(units, arch, yhats, fwd, bwd, labels)


def finite_diff_grads(units, arch, xs, labels, eps=1e-5):
    grads = [u.zeros_like() for u in units]
    for unit, grad in zip(units, grads):
        for f in fields(unit):
            arr = getattr(unit, f.name)
            if arr is None:
                continue
            garr = getattr(grad, f.name)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                old = arr[idx]
                arr[idx] = old + eps
                lp = batch_loss(units, arch, xs, labels)
                arr[idx] = old - eps
                lm = batch_loss(units, arch, xs, labels)
                arr[idx] = old
                garr[idx] = (lp - lm) / (2.0 * eps)
    return grads


def max_grad_violation(analytic, numeric, rtol=1e-4, atol=1e-6):
    """Largest amount by which |a - n| exceeds atol + rtol*|n| (<= 0 passes)."""
    worst = -np.inf
    for a, n in zip(analytic, numeric):
        for f in fields(a):
            ga, gn = getattr(a, f.name), getattr(n, f.name)
            if ga is None:
                continue
            worst = max(worst, float(np.max(np.abs(ga - gn) - (atol + rtol * np.abs(gn)))))
    return worst
