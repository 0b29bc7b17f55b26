"""
Capacity Certificate

Upper bound on the MAP error of predicting Y from α given I(α; Y). The
conditional entropy H(Y|α) ≤ log₂M − I (bits) is mapped through the inverse
of the piecewise-linear Fano envelope joining (π, H) = ((m−1)/m, log₂ m) for
m = 1..M. A small bound certifies that the generative map had enough
capacity to carry the classifier's decision through α.
"""

import logging
from typing import Tuple

import numpy as np

from ..utils.errors import DomainError

logger = logging.getLogger(__name__)

NATS_TOL = 1e-12


def fano_envelope(M: int) -> Tuple[np.ndarray, np.ndarray]:
    """Knots (π_m, H_m) of the envelope for m = 1..M, H in bits."""
    m = np.arange(1, M + 1, dtype=np.float64)
    return (m - 1.0) / m, np.log2(m)


def capacity_certificate(I_alpha_Y: float, M: int) -> float:
    """
    Bound π(Y|α) from the information α carries about Y.

    Args:
        I_alpha_Y: I(α; Y) in nats, within [0, ln M]
        M: Number of classes

    Returns:
        Upper bound on the MAP prediction error, in [0, (M−1)/M]

    Raises:
        DomainError: If M < 1 or the information lies outside [0, ln M]
    """
    if M < 1:
        raise DomainError(f"class count must be at least 1, got {M}")
    if I_alpha_Y < -NATS_TOL or I_alpha_Y > np.log(M) + NATS_TOL:
        raise DomainError(f"I(alpha;Y) = {I_alpha_Y} nats lies outside [0, ln {M}]")
    if M == 1:
        return 0.0

    pi_knots, h_knots = fano_envelope(M)
    residual_bits = max(np.log2(M) - I_alpha_Y / np.log(2.0), 0.0)
    bound = float(np.interp(residual_bits, h_knots, pi_knots))
    logger.debug(f"certificate: I={I_alpha_Y:.4f} nats, H(Y|alpha) <= {residual_bits:.4f} bits, "
                 f"pi <= {bound:.4f}")
    return bound
