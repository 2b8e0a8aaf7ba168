"""SVD-based and learned-SVD inversion for linear inverse problems.

Submodules
----------
linalg      dense matrices, thin SVD, spectral norm, SPD solver
tomo        parallel-beam Radon operator and measurement noise
inversion   MLE / Tikhonov / truncated-SVD / Bayesian MAP / linear MMSE
nn          fully-connected networks with manual backprop and Adam
model       learned-SVD assembly, losses and training loop
analysis    convergence-rate, stability and latent-space diagnostics
data        phantoms, IDX images, rescaling, quality metrics
config      experiment configuration records and presets
experiments experiment runner producing metrics tables and images
cli         command-line entry point

Kept import-light on purpose: heavy dependencies load with the submodules.
"""

__version__ = "0.1.0"
