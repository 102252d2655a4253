"""Neural network modules: ECAPA-TDNN embedder, local feature net, CRN separator."""
