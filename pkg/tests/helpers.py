"""Shared test utilities."""

import numpy as np

from blab.nn import init_network


def linear_net(w, b):
    """[2, 2] network whose margin is exactly w.x + b."""
    net = init_network([2, 2], seed=0)
    net.weights[0][0] = np.zeros(2)
    net.weights[0][1] = np.asarray(w, dtype=float)
    net.biases[0][:] = (0.0, float(b))
    return net
