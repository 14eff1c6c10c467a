"""Stacked n_c-step prediction X = G1 x + G2 U of the switching dynamics."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..core.network import PhaseSchedule
from ..dynamics.matrices import InputMatrix, PhaseMatrices


@dataclass(frozen=True)
class HorizonPrediction:
    """Prediction matrices for the horizon starting at NOIR phase ``zeta``.

    Block i of X (i = 1..n_c) is the state x[k+i]; block j of U
    (j = 0..n_c-1) is the inflow u[k+j].
    """
    G1: np.ndarray
    G2: np.ndarray
    H_list: List[np.ndarray]
    W4: np.ndarray
    zeta: int
    horizon: int
    size: int
    n_inputs: int

    def predict(self, x: np.ndarray, U: np.ndarray) -> np.ndarray:
        return self.G1 @ x + self.G2 @ U

    def state_blocks(self, X: np.ndarray) -> np.ndarray:
        """Reshape a stacked state vector to (horizon, N)."""
        return np.asarray(X).reshape(self.horizon, self.size)

    def input_blocks(self, U: np.ndarray) -> np.ndarray:
        return np.asarray(U).reshape(self.horizon, self.n_inputs)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def build_prediction(schedule: PhaseSchedule, mats_per_phase: Sequence[PhaseMatrices],
                     B: InputMatrix, k: int) -> HorizonPrediction:
    """Prediction over one NOIR cycle starting at time k.

    Uses the time-varying products H_i = A(zeta[k+i-1]) ... A(zeta[k]) and
    G2 block (i, j) = A(zeta[k+i-1]) ... A(zeta[k+j+1]) B, so that the
    stacked map reproduces the step-by-step rollout exactly.

    Args:
        schedule: Phase schedule (fixes the horizon n_c)
        mats_per_phase: PhaseMatrices indexed by NOIR phase 0..n_c-1
        B: Input matrix
        k: Current discrete time

    Returns:
        HorizonPrediction; depends on k only through k mod n_c
    """
    n_c = schedule.cycle_length
    if len(mats_per_phase) != n_c:
        raise ValueError(f"Expected {n_c} phase matrices, got {len(mats_per_phase)}")
    if k < 0:
        raise ValueError(f"Discrete time must be non-negative, got {k}")

    zeta = k % n_c
    size = B.B.shape[0]
    n_in = B.n_inputs
    A_seq = [mats_per_phase[(zeta + i) % n_c].A for i in range(n_c)]

    H_list = [np.eye(size)]
    for i in range(1, n_c + 1):
        H_list.append(A_seq[i - 1] @ H_list[-1])

    G1 = np.vstack(H_list[1:])
    G2 = np.zeros((size * n_c, n_in * n_c))
    # row block i (state x[k+i]) from row block i-1
    for i in range(1, n_c + 1):
        rows = slice((i - 1) * size, i * size)
        if i > 1:
            previous = slice((i - 2) * size, (i - 1) * size)
            G2[rows, :(i - 1) * n_in] = A_seq[i - 1] @ G2[previous, :(i - 1) * n_in]
        G2[rows, (i - 1) * n_in:i * n_in] = B.B

    P_next = [mats_per_phase[(zeta + i) % n_c].P for i in range(1, n_c + 1)]
    W4 = np.zeros((size * n_c, size * n_c))
    for i, P in enumerate(P_next):
        W4[i * size:(i + 1) * size, i * size:(i + 1) * size] = P

    return HorizonPrediction(
        G1=_freeze(G1), G2=_freeze(G2), H_list=[_freeze(H) for H in H_list], W4=_freeze(W4),
        zeta=zeta, horizon=n_c, size=size, n_inputs=n_in,
    )
