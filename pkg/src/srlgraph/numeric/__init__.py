from .gradcheck import analytic_grads, finite_diff_check, finite_diff_grads
from .tensor import (
    Tape,
    TapeError,
    Tensor,
    add,
    as_tensor,
    augment,
    bilinear,
    clip,
    concat,
    current_tape,
    dropout,
    einsum,
    exp,
    getitem,
    leaky_relu,
    log,
    log_sigmoid,
    logsumexp,
    lstm_scan,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    softmax,
    stack,
    sub,
    tanh,
    transpose,
    trilinear,
    tsum,
)
