import numpy as np

from .exceptions import StructuralError

__all__ = ["Adam"]


class Adam:
    """Adam with bias-corrected moment estimates.

    Operates on a dict of named parameter arrays and updates them in place.
    """

    def __init__(self, learning_rate=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        """Apply one update to ``params`` given ``grads`` (same keys)."""
        if set(params) != set(grads):
            raise StructuralError("parameter and gradient keys differ")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise StructuralError(
                    f"gradient for {name!r} has shape {g.shape}, "
                    f"parameter has {p.shape}")
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m, v = self.m[name], self.v[name]
            if m.shape != p.shape:
                raise StructuralError(f"optimizer state for {name!r} has wrong shape")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
        return params
