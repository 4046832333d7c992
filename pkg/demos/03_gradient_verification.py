"""Finite-difference verification of the hand-written backward passes.

Every gradient in the model is checked against central differences on a
tiny 64-bit configuration; the worst relative disagreement is reported.
"""

import time

import numpy as np

from callseg import ModelConfig, build_crnn, gradient_check

x = np.random.default_rng(2).standard_normal((12, 50)) * 2.0

for kind in ("gru", "lstm"):
    config = ModelConfig(conv_filters=(2, 2, 2, 2), rnn_hidden=(3, 3), dropout_p=0.0,
                         rnn_kind=kind, n_classes=2, input_shape=(12, 50))
    model = build_crnn(config, seed=3, dtype=np.float64)
    start = time.perf_counter()
    err = gradient_check(model, x, eps=1e-4, label=1)
    print(f"{kind}: {model.count_params()} parameters, "
          f"max relative error {err:.2e} in {time.perf_counter() - start:.1f}s")
