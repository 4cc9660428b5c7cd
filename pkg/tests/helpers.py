import numpy as np

from dglc.tensor import Tensor

# filled by the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES = []


def numeric_grad(fn, inputs, h=1e-5):
    """Central differences of scalar ``fn(*values)`` w.r.t. every input array."""
    grads = []
    for k, x in enumerate(inputs):
        g = np.zeros_like(x)
        it = np.nditer(x, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            plus = [v.copy() for v in inputs]
            minus = [v.copy() for v in inputs]
            plus[k][idx] += h
            minus[k][idx] -= h
            g[idx] = (fn(*plus) - fn(*minus)) / (2 * h)
        grads.append(g)
    return grads


def analytic_grad(build, inputs):
    """Gradients of ``build(*tensors)`` (a scalar Tensor) from the tape."""
    leaves = [Tensor(x, requires_grad=True) for x in inputs]
    out = build(*leaves)
    out.backward()
    return [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value) for leaf in leaves]


def gradcheck(build, inputs, rtol=1e-4, atol=1e-6, h=1e-5):
    """Compare tape gradients against central differences; returns max violation ratio."""
    inputs = [np.array(x, dtype=np.float64) for x in inputs]

    def value(*vals):
        return float(build(*[Tensor(v) for v in vals]).value)

    ana = analytic_grad(build, inputs)
    num = numeric_grad(value, inputs, h)
    worst = 0.0
    for a, n in zip(ana, num):
        bound = atol + rtol * np.abs(n)
        worst = max(worst, float(np.max(np.abs(a - n) / bound)) if a.size else 0.0)
    return worst
