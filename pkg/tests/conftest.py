"""Pin BLAS to one thread before numpy loads: the acceptance wall-time
criteria are stated for single-threaded runs, and results stay
reproducible across machines with different core counts."""

import os

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")
